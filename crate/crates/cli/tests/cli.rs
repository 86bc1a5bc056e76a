//! End-to-end tests of the `voxtract` binary: every subcommand is exercised
//! through a real process, and outputs are checked against the library (for
//! plumbing) or against constructions whose answers are known (for results).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;
use voxtract::formants::polynomial_from_poles;
use voxtract::style::Excitation;
use voxtract::{
    default_speakers, extract_formants, predictor_to_reflection, write_wav, FormantFilterConfig,
    Pole, StyleProfileSet, TalkingStyle,
};

fn voxtract_cmd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_voxtract"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary spawns");
    assert!(
        out.status.success(),
        "command failed\nstdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

fn wav_files(dir: &Path) -> Vec<PathBuf> {
    let mut found = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).expect("readable dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "wav") {
                found.push(path);
            }
        }
    }
    found.sort();
    found
}

/// Parses `index,frequency_hz,bandwidth_hz` CSV rows into (f, b) pairs.
fn parse_formant_csv(text: &str) -> Vec<(f64, f64)> {
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("index,frequency_hz,bandwidth_hz"),
        "formant CSV header"
    );
    lines
        .map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            assert_eq!(cols.len(), 3, "malformed formant row {l:?}");
            (cols[1].parse().unwrap(), cols[2].parse().unwrap())
        })
        .collect()
}

/// Parses the experiment summary table printed to stdout into
/// (style, rate, displacement) rows.
fn parse_summary_table(stdout: &str) -> Vec<(String, f64, f64)> {
    let mut rows = Vec::new();
    let mut in_table = false;
    for line in stdout.lines() {
        if line == "style,recognition_rate,mean_formant_displacement" {
            in_table = true;
            continue;
        }
        if in_table {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                break; // past the table
            }
            rows.push((
                cols[0].to_string(),
                cols[1].parse().unwrap(),
                cols[2].parse().unwrap(),
            ));
        }
    }
    rows
}

// ---------------------------------------------------------------------------
// --help
// ---------------------------------------------------------------------------

#[test]
fn help_states_a_default_for_every_tunable_flag() {
    let expectations: [(&str, &[&str]); 4] = [
        (
            "synth-corpus",
            &[
                "--seed", "--speakers", "--reps", "--styles", "--duration", "--sample-rate",
                "--excitation",
            ],
        ),
        (
            "analyze",
            &[
                "--order", "--frame-len", "--hop", "--pre-emphasis", "--cepstral-dim",
                "--sample-rate",
            ],
        ),
        ("identify", &["--top"]),
        (
            "experiment",
            &[
                "--recognizer", "--seed", "--train-reps", "--test-reps", "--hmm-states",
                "--hmm-symbols", "--hmm-iterations", "--speakers", "--reps", "--duration",
                "--sample-rate", "--excitation", "--out",
            ],
        ),
    ];
    for (subcommand, flags) in expectations {
        let out = run_ok(voxtract_cmd().args([subcommand, "--help"]));
        let help = stdout_of(&out);
        let lines: Vec<&str> = help.lines().collect();
        for flag in flags {
            // The flag's entry spans from its own line to the line before the
            // next flag definition (help text may wrap onto further lines).
            let start = lines
                .iter()
                .position(|l| {
                    let t = l.trim_start();
                    t.starts_with(flag)
                        && t[flag.len()..].starts_with([' ', '<'].as_slice())
                })
                .unwrap_or_else(|| panic!("{subcommand} --help is missing {flag}"));
            let entry: String = lines[start..]
                .iter()
                .enumerate()
                .take_while(|(i, l)| *i == 0 || !l.trim_start().starts_with('-'))
                .map(|(_, l)| *l)
                .collect::<Vec<_>>()
                .join("\n");
            assert!(
                entry.contains("[default:"),
                "{subcommand} --help does not state a default for {flag}:\n{entry}"
            );
        }
    }
}

// ---------------------------------------------------------------------------
// synth-corpus
// ---------------------------------------------------------------------------

#[test]
fn synth_corpus_writes_the_full_default_corpus() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("corpus");
    let out = run_ok(voxtract_cmd().args(["synth-corpus", "--out", dir.to_str().unwrap()]));
    // 9 speakers x 5 styles x 9 repetitions
    assert!(
        stdout_of(&out).contains("wrote 405 utterances"),
        "unexpected stdout: {}",
        stdout_of(&out)
    );
    assert!(dir.join("manifest.json").is_file());
    assert_eq!(wav_files(&dir).len(), 405);
}

#[test]
fn synth_corpus_respects_shape_flags() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("corpus");
    let out = run_ok(voxtract_cmd().args([
        "synth-corpus",
        "--out",
        dir.to_str().unwrap(),
        "--speakers",
        "2",
        "--reps",
        "2",
        "--styles",
        "normal",
    ]));
    assert!(stdout_of(&out).contains("wrote 4 utterances"));
    for wav in ["spk01/normal/0.wav", "spk01/normal/1.wav", "spk02/normal/0.wav",
                "spk02/normal/1.wav"] {
        assert!(dir.join(wav).is_file(), "missing {wav}");
    }
}

#[test]
fn synth_corpus_is_deterministic_across_runs() {
    let tmp = TempDir::new().unwrap();
    let args = |dir: &Path| {
        vec![
            "synth-corpus".to_string(),
            "--out".into(),
            dir.to_str().unwrap().into(),
            "--seed".into(),
            "21".into(),
            "--speakers".into(),
            "2".into(),
            "--reps".into(),
            "2".into(),
            "--styles".into(),
            "normal,shout".into(),
        ]
    };
    let first = tmp.path().join("first");
    let second = tmp.path().join("second");
    run_ok(voxtract_cmd().args(args(&first)));
    run_ok(voxtract_cmd().args(args(&second)));
    assert_eq!(
        fs::read(first.join("manifest.json")).unwrap(),
        fs::read(second.join("manifest.json")).unwrap(),
        "manifests differ between identical runs"
    );
    for wav in wav_files(&first) {
        let twin = second.join(wav.strip_prefix(&first).unwrap());
        assert_eq!(
            fs::read(&wav).unwrap(),
            fs::read(&twin).unwrap(),
            "waveform bytes differ for {}",
            wav.display()
        );
    }
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

#[test]
fn analyze_area_uniform_tube_has_no_resonances() {
    let tmp = TempDir::new().unwrap();
    let area_path = tmp.path().join("uniform.area");
    fs::write(&area_path, "# uniform tube\n1.0\n1.0\n1.0\n1.0\n1.0\n1.0\n1.0\n1.0\n").unwrap();
    let out = run_ok(voxtract_cmd().args(["analyze", "--area", area_path.to_str().unwrap()]));
    assert_eq!(
        stdout_of(&out),
        "index,frequency_hz,bandwidth_hz\n",
        "a reflectionless tube must yield an empty formant table"
    );
}

#[test]
fn analyze_area_recovers_constructed_resonances() {
    // Choose the answer first: two resonances, realized as an area function
    // by inverting the chain (poles -> predictor -> reflection -> areas, the
    // last step via A_{i+1} = A_i (1 - k_i) / (1 + k_i) computed right here).
    let fs_hz = 8000.0;
    let chosen = [(700.0, 80.0), (1800.0, 150.0)];
    let poles: Vec<Pole> = chosen
        .iter()
        .flat_map(|&(f, b)| {
            let radius = (-std::f64::consts::PI * b / fs_hz).exp();
            let angle = 2.0 * std::f64::consts::PI * f / fs_hz;
            let upper = Pole::new(radius * angle.cos(), radius * angle.sin());
            [upper, upper.conj()]
        })
        .collect();
    let poly = polynomial_from_poles(&poles, 1.0).unwrap();
    let k = predictor_to_reflection(&poly).unwrap();
    let mut areas = vec![1.0f64];
    for &ki in k.values() {
        let prev = *areas.last().unwrap();
        areas.push(prev * (1.0 - ki) / (1.0 + ki));
    }
    let text: String = areas.iter().map(|a| format!("{a}\n")).collect();
    let tmp = TempDir::new().unwrap();
    let area_path = tmp.path().join("vowel.area");
    fs::write(&area_path, text).unwrap();

    let out = run_ok(voxtract_cmd().args([
        "analyze",
        "--area",
        area_path.to_str().unwrap(),
        "--sample-rate",
        "8000",
    ]));
    let got = parse_formant_csv(&stdout_of(&out));
    assert_eq!(got.len(), 2, "expected both constructed resonances: {got:?}");
    for ((f, b), &(want_f, want_b)) in got.into_iter().zip(&chosen) {
        assert!(
            (f - want_f).abs() <= 1e-6 * want_f,
            "frequency {f} vs constructed {want_f}"
        );
        assert!(
            (b - want_b).abs() <= 1e-6 * want_b,
            "bandwidth {b} vs constructed {want_b}"
        );
    }
}

#[test]
fn analyze_wav_recovers_first_formant_within_two_percent() {
    // Synthesize one normal-style utterance from a low-pitched speaker and
    // keep its exact vocal-tract filter; the CLI's estimate from the WAV
    // alone must land within 2% of the filter's first resonance.
    let speakers = default_speakers(9, 7).unwrap();
    let spk = &speakers[0]; // pitch band 100-140 Hz
    let profiles = StyleProfileSet::default();
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let (waveform, filter) = voxtract::style::synthesize_utterance_with_filter(
        spk,
        profiles.profile(TalkingStyle::Normal),
        Excitation::ImpulseTrain,
        0.5,
        8000.0,
        &mut rng,
    )
    .unwrap();
    let exact = extract_formants(&filter, 8000.0, &FormantFilterConfig::default()).unwrap();
    assert!(!exact.is_empty(), "constructed filter must resonate");
    let want_f1 = exact.formants()[0].frequency_hz;

    let tmp = TempDir::new().unwrap();
    let wav_path = tmp.path().join("utterance.wav");
    write_wav(&wav_path, &waveform).unwrap();
    let csv_path = tmp.path().join("formants.csv");
    run_ok(voxtract_cmd().args([
        "analyze",
        "--input",
        wav_path.to_str().unwrap(),
        "--formants-out",
        csv_path.to_str().unwrap(),
    ]));
    let got = parse_formant_csv(&fs::read_to_string(&csv_path).unwrap());
    assert!(!got.is_empty(), "no formants estimated");
    let (f1, _) = got[0];
    assert!(
        (f1 - want_f1).abs() <= 0.02 * want_f1,
        "estimated F1 {f1} vs filter F1 {want_f1} (2% bound)"
    );
}

// ---------------------------------------------------------------------------
// identify
// ---------------------------------------------------------------------------

#[test]
fn identify_scores_a_training_utterance_at_zero() {
    let tmp = TempDir::new().unwrap();
    let corpus_dir = tmp.path().join("corpus");
    run_ok(voxtract_cmd().args([
        "synth-corpus",
        "--out",
        corpus_dir.to_str().unwrap(),
        "--seed",
        "13",
        "--speakers",
        "3",
        "--reps",
        "4",
    ]));
    let models = tmp.path().join("models.json");
    run_ok(voxtract_cmd().args([
        "experiment",
        "--corpus",
        corpus_dir.to_str().unwrap(),
        "--train-reps",
        "2",
        "--test-reps",
        "2",
        "--out",
        tmp.path().join("reports").to_str().unwrap(),
        "--save-models",
        models.to_str().unwrap(),
    ]));

    let training_wav = corpus_dir.join("spk01/normal/0.wav");
    let out = run_ok(voxtract_cmd().args([
        "identify",
        "--models",
        models.to_str().unwrap(),
        "--input",
        training_wav.to_str().unwrap(),
    ]));
    let stdout = stdout_of(&out);
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("rank,speaker,score"));
    let best = lines.next().expect("at least one ranked speaker");
    let cols: Vec<&str> = best.split(',').collect();
    assert_eq!(cols[0], "1");
    assert_eq!(cols[1], "spk01", "training utterance must match its own speaker");
    assert_eq!(
        cols[2].parse::<f64>().unwrap(),
        0.0,
        "a template compared with itself must be at distance zero"
    );
    assert_eq!(stdout.lines().count(), 1 + 3, "one row per enrolled speaker");
}

// ---------------------------------------------------------------------------
// experiment
// ---------------------------------------------------------------------------

#[test]
fn experiment_is_deterministic_and_ranks_normal_highest() {
    let tmp = TempDir::new().unwrap();
    let run = |out_dir: &Path| {
        run_ok(voxtract_cmd().args([
            "experiment",
            "--synth",
            "--seed",
            "11",
            "--speakers",
            "4",
            "--reps",
            "6",
            "--train-reps",
            "3",
            "--test-reps",
            "3",
            "--out",
            out_dir.to_str().unwrap(),
        ]))
    };
    let first_dir = tmp.path().join("first");
    let second_dir = tmp.path().join("second");
    let first = run(&first_dir);
    run(&second_dir);

    for name in ["report.json", "report.csv", "displacement.csv"] {
        let a = fs::read(first_dir.join(name)).unwrap();
        let b = fs::read(second_dir.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }

    let table = parse_summary_table(&stdout_of(&first));
    assert_eq!(table.len(), 5, "one summary row per style");
    let normal = table.iter().find(|(s, _, _)| s == "normal").unwrap().1;
    for (style, rate, _) in &table {
        assert!(
            normal >= *rate,
            "normal rate {normal} below {style} rate {rate}"
        );
    }
}

#[test]
fn experiment_hmm_produces_the_same_report_shape() {
    let tmp = TempDir::new().unwrap();
    let out_dir = tmp.path().join("reports");
    let out = run_ok(voxtract_cmd().args([
        "experiment",
        "--synth",
        "--recognizer",
        "hmm",
        "--seed",
        "11",
        "--speakers",
        "3",
        "--reps",
        "6",
        "--train-reps",
        "3",
        "--test-reps",
        "3",
        "--hmm-iterations",
        "5",
        "--out",
        out_dir.to_str().unwrap(),
    ]));
    let table = parse_summary_table(&stdout_of(&out));
    assert_eq!(table.len(), 5, "hmm summary must cover every style");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["recognizer"], "hmm");
    assert_eq!(report["styles"].as_object().unwrap().len(), 5);
    let rate_csv = fs::read_to_string(out_dir.join("report.csv")).unwrap();
    assert!(rate_csv.starts_with("style,recognition_rate\n"));
    assert_eq!(rate_csv.lines().count(), 6);
}

#[test]
fn config_file_beats_defaults_and_flags_beat_config() {
    let tmp = TempDir::new().unwrap();
    let config_path = tmp.path().join("voxtract.toml");
    fs::write(&config_path, "[synth-corpus]\nspeakers = 3\nseed = 5\n").unwrap();

    // file value (3 speakers) overrides the built-in default (9)
    let from_file = run_ok(voxtract_cmd().args([
        "synth-corpus",
        "--config",
        config_path.to_str().unwrap(),
        "--out",
        tmp.path().join("a").to_str().unwrap(),
        "--reps",
        "1",
        "--styles",
        "normal",
    ]));
    assert!(stdout_of(&from_file).contains("wrote 3 utterances"));
    assert!(
        stderr_of(&from_file).contains("\"seed\":5"),
        "resolved config echo must show the file-provided seed"
    );

    // an explicit flag (2 speakers) overrides the file
    let from_flag = run_ok(voxtract_cmd().args([
        "synth-corpus",
        "--config",
        config_path.to_str().unwrap(),
        "--out",
        tmp.path().join("b").to_str().unwrap(),
        "--reps",
        "1",
        "--styles",
        "normal",
        "--speakers",
        "2",
    ]));
    assert!(stdout_of(&from_flag).contains("wrote 2 utterances"));
}

#[test]
fn experiment_fails_cleanly_when_out_dir_cannot_be_created() {
    let tmp = TempDir::new().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "not a directory").unwrap();
    let out = voxtract_cmd()
        .args([
            "experiment",
            "--synth",
            "--speakers",
            "2",
            "--reps",
            "2",
            "--train-reps",
            "1",
            "--test-reps",
            "1",
            "--out",
            blocker.join("sub").to_str().unwrap(),
        ])
        .output()
        .expect("binary spawns");
    assert!(
        !out.status.success(),
        "experiment must fail when the output directory cannot be created"
    );
    assert!(
        stderr_of(&out).contains("cannot create output directory"),
        "stderr must explain the failure: {}",
        stderr_of(&out)
    );
}
