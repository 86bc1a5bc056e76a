//! Command-line surface for the voxtract toolkit: corpus synthesis, formant
//! analysis, speaker identification, and the styled-speech experiment.
//!
//! Every subcommand resolves its configuration as built-in defaults, then
//! values from an optional TOML config file, then command-line flags (flags
//! win), echoes the fully-resolved configuration to stderr, and exits 0 only
//! when the requested artifact was fully written. All randomness flows from
//! the single `--seed` value.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use voxtract::style::Excitation;
use voxtract::{
    default_speakers, extract_features, extract_formants, generate_corpus, lpc_to_cepstrum,
    load_corpus, load_recognizer, rank_speakers, read_area_file, read_wav, reflection_to_predictor,
    run_experiment, save_corpus, save_recognizer, train_recognizer, utterance_formants,
    AnalysisConfig, Corpus, CorpusConfig, ExperimentConfig, FeatureConfig, FeatureSequence,
    Recognizer, StyleProfileSet, TalkingStyle, TrainConfig, area_to_reflection,
};

const CONFIG_HELP: &str =
    "TOML config file with optional [synth-corpus], [analyze], [experiment] sections; \
     flag values override file values";

#[derive(Parser)]
#[command(
    name = "voxtract",
    version,
    about = "Vocal-tract analysis and styled-speech speaker identification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a styled-speech corpus as a directory tree with a manifest
    SynthCorpus(SynthCorpusArgs),
    /// Estimate formants (and optionally cepstra) from a WAV or area-function file
    Analyze(AnalyzeArgs),
    /// Rank enrolled speakers for one utterance against saved models
    Identify(IdentifyArgs),
    /// Run the styled-speech recognition experiment and write its reports
    Experiment(ExperimentArgs),
}

// ---------------------------------------------------------------------------
// Config file
// ---------------------------------------------------------------------------

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    synth_corpus: CorpusSection,
    #[serde(default)]
    analyze: AnalyzeSection,
    #[serde(default)]
    experiment: ExperimentSection,
}

/// Corpus-shape settings, shared by `synth-corpus` and `experiment --synth`.
#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct CorpusSection {
    seed: Option<u64>,
    speakers: Option<usize>,
    reps: Option<usize>,
    styles: Option<Vec<String>>,
    duration: Option<f64>,
    sample_rate: Option<f64>,
    excitation: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct AnalyzeSection {
    order: Option<usize>,
    frame_len: Option<f64>,
    hop: Option<f64>,
    pre_emphasis: Option<f64>,
    cepstral_dim: Option<usize>,
    sample_rate: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct ExperimentSection {
    recognizer: Option<String>,
    seed: Option<u64>,
    train_reps: Option<usize>,
    test_reps: Option<usize>,
    hmm_states: Option<usize>,
    hmm_symbols: Option<usize>,
    hmm_iterations: Option<usize>,
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("cannot read config file {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("malformed config file {}", p.display()))
        }
    }
}

/// Flag value beats file value beats default.
fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn parse_styles(names: &[String]) -> Result<Vec<TalkingStyle>> {
    let styles = names
        .iter()
        .map(|s| s.trim().parse::<TalkingStyle>())
        .collect::<voxtract::Result<Vec<_>>>()?;
    if styles.is_empty() {
        bail!("style list must not be empty");
    }
    Ok(styles)
}

fn parse_excitation(name: &str) -> Result<Excitation> {
    match name {
        "impulse" | "impulse_train" => Ok(Excitation::ImpulseTrain),
        "noise" => Ok(Excitation::Noise),
        other => bail!("unknown excitation {other:?} (expected impulse or noise)"),
    }
}

fn excitation_name(e: Excitation) -> &'static str {
    match e {
        Excitation::ImpulseTrain => "impulse",
        Excitation::Noise => "noise",
    }
}

fn echo_resolved<T: Serialize>(label: &str, cfg: &T) -> Result<()> {
    eprintln!(
        "resolved {label} config: {}",
        serde_json::to_string(cfg).context("config echo serialization failed")?
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// synth-corpus
// ---------------------------------------------------------------------------

#[derive(Args)]
struct SynthCorpusArgs {
    /// Output directory for the corpus tree and manifest.json
    #[arg(long)]
    out: PathBuf,
    #[arg(long, help = CONFIG_HELP)]
    config: Option<PathBuf>,
    /// Master seed for all corpus randomness [default: 7]
    #[arg(long)]
    seed: Option<u64>,
    /// Number of synthetic speakers [default: 9]
    #[arg(long)]
    speakers: Option<usize>,
    /// Repetitions per speaker and style [default: 9]
    #[arg(long)]
    reps: Option<usize>,
    /// Comma-separated styles [default: normal,shout,slow,loud,soft]
    #[arg(long, value_delimiter = ',')]
    styles: Option<Vec<String>>,
    /// Utterance duration in seconds before style rate scaling [default: 0.5]
    #[arg(long)]
    duration: Option<f64>,
    /// Sample rate in Hz [default: 8000]
    #[arg(long)]
    sample_rate: Option<f64>,
    /// Excitation source: impulse or noise [default: impulse]
    #[arg(long)]
    excitation: Option<String>,
}

/// CLI-level resolved corpus shape, also echoed by `experiment --synth`.
#[derive(Debug, Serialize)]
struct ResolvedCorpus {
    seed: u64,
    speakers: usize,
    reps: usize,
    styles: Vec<TalkingStyle>,
    duration_s: f64,
    sample_rate_hz: f64,
    excitation: &'static str,
}

fn resolve_corpus_config(
    flags: &CorpusFlags,
    file: &CorpusSection,
    seed_override: Option<u64>,
) -> Result<(CorpusConfig, ResolvedCorpus)> {
    let seed = seed_override.unwrap_or_else(|| pick(flags.seed, file.seed, 7));
    let speakers = pick(flags.speakers, file.speakers, 9);
    let reps = pick(flags.reps, file.reps, 9);
    let styles = match (&flags.styles, &file.styles) {
        (Some(s), _) => parse_styles(s)?,
        (None, Some(s)) => parse_styles(s)?,
        (None, None) => TalkingStyle::ALL.to_vec(),
    };
    let duration_s = pick(flags.duration, file.duration, 0.5);
    let sample_rate_hz = pick(flags.sample_rate, file.sample_rate, 8000.0);
    let excitation = match (&flags.excitation, &file.excitation) {
        (Some(e), _) | (None, Some(e)) => parse_excitation(e)?,
        (None, None) => Excitation::ImpulseTrain,
    };
    let cfg = CorpusConfig {
        speakers: default_speakers(speakers, seed)?,
        styles: styles.clone(),
        repetitions: reps,
        duration_s,
        sample_rate_hz,
        excitation,
        profiles: StyleProfileSet::default(),
        master_seed: seed,
    };
    cfg.validate()?;
    let resolved = ResolvedCorpus {
        seed,
        speakers,
        reps,
        styles,
        duration_s,
        sample_rate_hz,
        excitation: excitation_name(excitation),
    };
    Ok((cfg, resolved))
}

/// The corpus-shape flags shared verbatim by `synth-corpus` and
/// `experiment --synth`.
struct CorpusFlags {
    seed: Option<u64>,
    speakers: Option<usize>,
    reps: Option<usize>,
    styles: Option<Vec<String>>,
    duration: Option<f64>,
    sample_rate: Option<f64>,
    excitation: Option<String>,
}

fn cmd_synth_corpus(args: SynthCorpusArgs) -> Result<()> {
    let file = load_file_config(args.config.as_deref())?;
    let flags = CorpusFlags {
        seed: args.seed,
        speakers: args.speakers,
        reps: args.reps,
        styles: args.styles,
        duration: args.duration,
        sample_rate: args.sample_rate,
        excitation: args.excitation,
    };
    let (cfg, resolved) = resolve_corpus_config(&flags, &file.synth_corpus, None)?;
    echo_resolved("synth-corpus", &resolved)?;
    let corpus = generate_corpus(&cfg)?;
    save_corpus(&corpus, &cfg, &args.out)?;
    println!(
        "wrote {} utterances to {}",
        corpus.utterances().len(),
        args.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

#[derive(Args)]
struct AnalyzeArgs {
    /// WAV file to analyze (formants estimated by LPC)
    #[arg(long, conflicts_with = "area", required_unless_present = "area")]
    input: Option<PathBuf>,
    /// Area-function file: exact tube-model chain, no estimation
    #[arg(long)]
    area: Option<PathBuf>,
    #[arg(long, help = CONFIG_HELP)]
    config: Option<PathBuf>,
    /// LPC / predictor order [default: 8]
    #[arg(long)]
    order: Option<usize>,
    /// Analysis frame length in seconds [default: 0.03]
    #[arg(long)]
    frame_len: Option<f64>,
    /// Analysis hop in seconds [default: 0.01]
    #[arg(long)]
    hop: Option<f64>,
    /// Pre-emphasis coefficient in [0,1]; 0 disables [default: 0]
    #[arg(long)]
    pre_emphasis: Option<f64>,
    /// Cepstral vector dimension for --cepstra-out [default: 12]
    #[arg(long)]
    cepstral_dim: Option<usize>,
    /// Sample rate assumed for --area input [default: 8000]
    #[arg(long)]
    sample_rate: Option<f64>,
    /// Write the formant CSV here instead of stdout
    #[arg(long)]
    formants_out: Option<PathBuf>,
    /// Also write a cepstral-coefficient CSV here
    #[arg(long)]
    cepstra_out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct ResolvedAnalyze {
    input: Option<PathBuf>,
    area: Option<PathBuf>,
    order: usize,
    frame_len_s: f64,
    hop_s: f64,
    pre_emphasis: f64,
    cepstral_dim: usize,
    sample_rate_hz: f64,
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<()> {
    let file = load_file_config(args.config.as_deref())?;
    let sec = &file.analyze;
    let resolved = ResolvedAnalyze {
        input: args.input.clone(),
        area: args.area.clone(),
        order: pick(args.order, sec.order, voxtract::lpc::DEFAULT_LPC_ORDER),
        frame_len_s: pick(args.frame_len, sec.frame_len, voxtract::eval::DEFAULT_FRAME_LEN_S),
        hop_s: pick(args.hop, sec.hop, voxtract::eval::DEFAULT_HOP_S),
        pre_emphasis: pick(args.pre_emphasis, sec.pre_emphasis, 0.0),
        cepstral_dim: pick(
            args.cepstral_dim,
            sec.cepstral_dim,
            voxtract::cepstra::DEFAULT_CEPSTRAL_DIM,
        ),
        sample_rate_hz: pick(args.sample_rate, sec.sample_rate, 8000.0),
    };
    echo_resolved("analyze", &resolved)?;

    let (formants, cepstra) = match (&args.input, &args.area) {
        (Some(wav_path), None) => {
            let w = read_wav(wav_path)?;
            let analysis = AnalysisConfig {
                frame_len_s: resolved.frame_len_s,
                hop_s: resolved.hop_s,
                lpc_order: resolved.order,
                pre_emphasis: resolved.pre_emphasis,
                ..AnalysisConfig::default()
            };
            let formants = utterance_formants(&w, &analysis)?;
            let cepstra = if args.cepstra_out.is_some() {
                let fc = FeatureConfig {
                    frame_len_s: resolved.frame_len_s,
                    hop_s: resolved.hop_s,
                    lpc_order: resolved.order,
                    cepstral_dim: resolved.cepstral_dim,
                    pre_emphasis: resolved.pre_emphasis,
                };
                Some(extract_features(&w, &fc)?)
            } else {
                None
            };
            (formants, cepstra)
        }
        (None, Some(area_path)) => {
            // exact chain: areas -> reflection -> predictor -> formants
            let area = read_area_file(area_path)?;
            let k = area_to_reflection(&area);
            let poly = reflection_to_predictor(&k, 1.0)?;
            let formants = extract_formants(
                &poly,
                resolved.sample_rate_hz,
                &voxtract::FormantFilterConfig::default(),
            )?;
            let cepstra = if args.cepstra_out.is_some() {
                let c = lpc_to_cepstrum(&poly, resolved.cepstral_dim)?;
                Some(FeatureSequence::new(vec![c])?)
            } else {
                None
            };
            (formants, cepstra)
        }
        // clap enforces exactly one input kind; this is unreachable
        _ => bail!("exactly one of --input or --area is required"),
    };

    match &args.formants_out {
        Some(path) => {
            formants.write_csv(path)?;
            println!("wrote formants to {}", path.display());
        }
        None => print!("{}", formants.to_csv()),
    }
    if let (Some(path), Some(seq)) = (&args.cepstra_out, cepstra) {
        seq.write_csv(path)?;
        println!("wrote cepstra to {}", path.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// identify
// ---------------------------------------------------------------------------

#[derive(Args)]
struct IdentifyArgs {
    /// Trained recognizer JSON written by `experiment --save-models`
    #[arg(long)]
    models: PathBuf,
    /// WAV file of the utterance to identify
    #[arg(long)]
    input: PathBuf,
    /// Print only the best N speakers [default: all]
    #[arg(long)]
    top: Option<usize>,
}

#[derive(Debug, Serialize)]
struct ResolvedIdentify<'a> {
    models: &'a Path,
    input: &'a Path,
    top: Option<usize>,
}

fn cmd_identify(args: IdentifyArgs) -> Result<()> {
    echo_resolved(
        "identify",
        &ResolvedIdentify {
            models: &args.models,
            input: &args.input,
            top: args.top,
        },
    )?;
    let recognizer = load_recognizer(&args.models)?;
    let w = read_wav(&args.input)?;
    let ranked = rank_speakers(&recognizer, &w)?;
    let shown = args.top.unwrap_or(ranked.len()).min(ranked.len());
    println!("rank,speaker,score");
    for (i, (speaker, score)) in ranked[..shown].iter().enumerate() {
        println!("{},{},{}", i + 1, speaker, score);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// experiment
// ---------------------------------------------------------------------------

#[derive(Args)]
struct ExperimentArgs {
    /// Directory holding a corpus written by synth-corpus
    #[arg(long, conflicts_with = "synth", required_unless_present = "synth")]
    corpus: Option<PathBuf>,
    /// Synthesize the corpus in memory instead of loading one
    #[arg(long)]
    synth: bool,
    /// Output directory for report.json / report.csv / displacement.csv [default: .]
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, help = CONFIG_HELP)]
    config: Option<PathBuf>,
    /// Recognizer: dtw or hmm [default: dtw]
    #[arg(long)]
    recognizer: Option<String>,
    /// Master seed for corpus synthesis and training [default: 7]
    #[arg(long)]
    seed: Option<u64>,
    /// Normal-style repetitions used for training [default: 5]
    #[arg(long)]
    train_reps: Option<usize>,
    /// Held-out repetitions per style used for testing [default: 4]
    #[arg(long)]
    test_reps: Option<usize>,
    /// HMM states [default: 5]
    #[arg(long)]
    hmm_states: Option<usize>,
    /// HMM codebook size [default: 32]
    #[arg(long)]
    hmm_symbols: Option<usize>,
    /// Baum-Welch iterations [default: 20]
    #[arg(long)]
    hmm_iterations: Option<usize>,
    /// Also save the trained recognizer as JSON for `identify`
    #[arg(long)]
    save_models: Option<PathBuf>,
    /// Number of synthetic speakers (with --synth) [default: 9]
    #[arg(long)]
    speakers: Option<usize>,
    /// Repetitions per speaker and style [default: 9]
    #[arg(long)]
    reps: Option<usize>,
    /// Comma-separated styles [default: normal,shout,slow,loud,soft]
    #[arg(long, value_delimiter = ',')]
    styles: Option<Vec<String>>,
    /// Utterance duration in seconds before style rate scaling [default: 0.5]
    #[arg(long)]
    duration: Option<f64>,
    /// Sample rate in Hz [default: 8000]
    #[arg(long)]
    sample_rate: Option<f64>,
    /// Excitation source: impulse or noise [default: impulse]
    #[arg(long)]
    excitation: Option<String>,
}

fn cmd_experiment(args: ExperimentArgs) -> Result<()> {
    let file = load_file_config(args.config.as_deref())?;
    let sec = &file.experiment;
    let seed = pick(args.seed, sec.seed, 7);
    let recognizer = match (&args.recognizer, &sec.recognizer) {
        (Some(r), _) | (None, Some(r)) => r.parse::<Recognizer>()?,
        (None, None) => Recognizer::Dtw,
    };
    let mut cfg = ExperimentConfig::default_with_seed(seed);
    cfg.recognizer = recognizer;
    cfg.train_repetitions = pick(args.train_reps, sec.train_reps, cfg.train_repetitions);
    cfg.test_repetitions = pick(args.test_reps, sec.test_reps, cfg.test_repetitions);
    cfg.hmm = TrainConfig {
        num_states: pick(args.hmm_states, sec.hmm_states, cfg.hmm.num_states),
        num_symbols: pick(args.hmm_symbols, sec.hmm_symbols, cfg.hmm.num_symbols),
        iterations: pick(args.hmm_iterations, sec.hmm_iterations, cfg.hmm.iterations),
        ..cfg.hmm
    };
    echo_resolved("experiment", &cfg)?;

    let corpus: Corpus = if args.synth {
        let flags = CorpusFlags {
            seed: None, // the experiment seed drives synthesis
            speakers: args.speakers,
            reps: args.reps,
            styles: args.styles.clone(),
            duration: args.duration,
            sample_rate: args.sample_rate,
            excitation: args.excitation.clone(),
        };
        let (corpus_cfg, resolved) =
            resolve_corpus_config(&flags, &file.synth_corpus, Some(seed))?;
        echo_resolved("synthesized-corpus", &resolved)?;
        generate_corpus(&corpus_cfg)?
    } else {
        let dir = args.corpus.as_deref().expect("clap enforces corpus|synth");
        let (corpus, corpus_cfg) = load_corpus(dir)?;
        eprintln!(
            "loaded corpus: {} utterances, {} speakers, master seed {}",
            corpus.utterances().len(),
            corpus.speaker_ids().len(),
            corpus_cfg.master_seed
        );
        corpus
    };

    let report = run_experiment(&corpus, &cfg)?;

    let out_dir = args.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;
    report.write_json(&out_dir.join("report.json"))?;
    report.write_rate_csv(&out_dir.join("report.csv"))?;
    report.write_displacement_csv(&out_dir.join("displacement.csv"))?;

    if let Some(models_path) = &args.save_models {
        // training is deterministic, so this reproduces the experiment's models
        let trained = train_recognizer(&corpus, &cfg)?;
        save_recognizer(&trained, models_path)?;
        println!("wrote models to {}", models_path.display());
    }

    println!("style,recognition_rate,mean_formant_displacement");
    for style in TalkingStyle::ALL {
        if let Some(result) = report.styles.get(style.name()) {
            println!(
                "{},{:.4},{:.6}",
                style.name(),
                result.recognition_rate,
                result.mean_formant_displacement
            );
        }
    }
    println!("reports written to {}", out_dir.display());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::SynthCorpus(args) => cmd_synth_corpus(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Identify(args) => cmd_identify(args),
        Command::Experiment(args) => cmd_experiment(args),
    }
}
