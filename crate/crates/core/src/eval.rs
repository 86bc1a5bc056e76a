//! Experiment harness: train speaker models on normal-style utterances,
//! score every styled test utterance, and relate the per-style recognition
//! rate to the per-style formant displacement.
//!
//! Protocol: repetitions `0..train_repetitions` of the Normal style are the
//! enrollment data; repetitions `train_repetitions..train_repetitions +
//! test_repetitions` of *every* style are the test set (so the index sets
//! are disjoint by construction). The recognition rate per style is the
//! fraction of its test utterances attributed to the true speaker, pooled
//! over all speakers. Everything is deterministic given the master seed, and
//! a report serializes byte-identically across runs.

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cepstra::{lpc_to_cepstrum, FeatureSequence};
use crate::dtw::{dtw_distance, DtwConfig};
use crate::formants::{
    extract_formants, formant_displacement, Formant, FormantFilterConfig, FormantSet,
};
use crate::hmm::{
    baum_welch_train, forward_log_likelihood, quantize, train_codebook, Codebook, HmmModel,
    TrainConfig,
};
use crate::lpc::levinson_durbin;
use crate::signals::{autocorrelate, frame, pre_emphasize, window_hamming, AutocorrSequence, Waveform};
use crate::style::{Corpus, TalkingStyle};
use crate::{fsutil, Error, Result};

/// Default analysis frame length in seconds.
pub const DEFAULT_FRAME_LEN_S: f64 = 0.030;
/// Default hop between frames in seconds.
pub const DEFAULT_HOP_S: f64 = 0.010;
/// Diagonal load applied to each frame's autocorrelation before the
/// recursion, guarding against exactly singular frames.
const AUTOCORR_RIDGE: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Feature extraction
// ---------------------------------------------------------------------------

/// Front-end settings shared by both recognizers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub frame_len_s: f64,
    pub hop_s: f64,
    pub lpc_order: usize,
    pub cepstral_dim: usize,
    /// First-difference pre-emphasis coefficient; 0 disables. The default is
    /// 0 because the synthetic source is an impulse train with no spectral
    /// tilt to undo.
    pub pre_emphasis: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            frame_len_s: DEFAULT_FRAME_LEN_S,
            hop_s: DEFAULT_HOP_S,
            lpc_order: crate::lpc::DEFAULT_LPC_ORDER,
            cepstral_dim: crate::cepstra::DEFAULT_CEPSTRAL_DIM,
            pre_emphasis: 0.0,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.frame_len_s > 0.0) || !self.frame_len_s.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "frame length must be positive, got {}",
                self.frame_len_s
            )));
        }
        if !(self.hop_s > 0.0) || !self.hop_s.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "hop must be positive, got {}",
                self.hop_s
            )));
        }
        if self.lpc_order == 0 {
            return Err(Error::InvalidParameter("LPC order must be >= 1".into()));
        }
        if self.cepstral_dim == 0 {
            return Err(Error::InvalidParameter("cepstral dimension must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.pre_emphasis) {
            return Err(Error::InvalidParameter(format!(
                "pre-emphasis must lie in [0, 1], got {}",
                self.pre_emphasis
            )));
        }
        Ok(())
    }
}

fn frame_samples(seconds: f64, sample_rate_hz: f64) -> usize {
    (seconds * sample_rate_hz).round() as usize
}

/// Windowed autocorrelation of one frame with the singularity guard applied.
fn guarded_autocorr(f: &crate::signals::Frame, order: usize) -> Result<Option<AutocorrSequence>> {
    let windowed = window_hamming(f)?;
    let r = autocorrelate(&windowed, order)?;
    if r.lag0() <= 0.0 {
        return Ok(None); // silent frame: nothing to model
    }
    let mut v = r.values().to_vec();
    v[0] *= 1.0 + AUTOCORR_RIDGE;
    Ok(Some(AutocorrSequence::new(v)?))
}

/// Converts a waveform to a cepstral feature sequence: pre-emphasis,
/// framing, Hamming window, autocorrelation LPC, cepstral recursion.
pub fn extract_features(w: &Waveform, cfg: &FeatureConfig) -> Result<FeatureSequence> {
    cfg.validate()?;
    let emphasized;
    let w = if cfg.pre_emphasis > 0.0 {
        emphasized = pre_emphasize(w, cfg.pre_emphasis)?;
        &emphasized
    } else {
        w
    };
    let frame_len = frame_samples(cfg.frame_len_s, w.sample_rate_hz()).max(2);
    let hop = frame_samples(cfg.hop_s, w.sample_rate_hz()).max(1);
    let frames = frame(w, frame_len, hop)?;
    let mut vectors = Vec::with_capacity(frames.len());
    for f in &frames {
        let Some(r) = guarded_autocorr(f, cfg.lpc_order)? else {
            continue;
        };
        let analysis = levinson_durbin(&r)?;
        vectors.push(lpc_to_cepstrum(&analysis.polynomial, cfg.cepstral_dim)?);
    }
    if vectors.is_empty() {
        return Err(Error::InvalidWaveform(format!(
            "waveform too short or silent for analysis ({} samples at frame length {})",
            w.len(),
            frame_len
        )));
    }
    FeatureSequence::new(vectors)
}

// ---------------------------------------------------------------------------
// Formant analysis of utterances
// ---------------------------------------------------------------------------

/// Settings for the formant-displacement analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub frame_len_s: f64,
    pub hop_s: f64,
    pub lpc_order: usize,
    pub pre_emphasis: f64,
    pub formant_filter: FormantFilterConfig,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            frame_len_s: DEFAULT_FRAME_LEN_S,
            hop_s: DEFAULT_HOP_S,
            lpc_order: crate::lpc::DEFAULT_LPC_ORDER,
            pre_emphasis: 0.0,
            formant_filter: FormantFilterConfig::default(),
        }
    }
}

/// Formants of one utterance, estimated from a single LPC model fitted to
/// the averaged autocorrelation of the mid-utterance frames (the central
/// half, skipping onset and offset transients).
pub fn utterance_formants(w: &Waveform, cfg: &AnalysisConfig) -> Result<FormantSet> {
    let feature_like = FeatureConfig {
        frame_len_s: cfg.frame_len_s,
        hop_s: cfg.hop_s,
        lpc_order: cfg.lpc_order,
        cepstral_dim: 1, // unused below; reuse the validation rules
        pre_emphasis: cfg.pre_emphasis,
    };
    feature_like.validate()?;
    let emphasized;
    let w_in = if cfg.pre_emphasis > 0.0 {
        emphasized = pre_emphasize(w, cfg.pre_emphasis)?;
        &emphasized
    } else {
        w
    };
    let frame_len = frame_samples(cfg.frame_len_s, w_in.sample_rate_hz()).max(2);
    let hop = frame_samples(cfg.hop_s, w_in.sample_rate_hz()).max(1);
    let frames = frame(w_in, frame_len, hop)?;
    if frames.is_empty() {
        return Err(Error::InvalidWaveform(format!(
            "waveform too short for analysis ({} samples at frame length {})",
            w_in.len(),
            frame_len
        )));
    }
    // central half of the frames; all of them when too few to trim
    let quarter = frames.len() / 4;
    let mid = &frames[quarter..frames.len() - quarter];

    let mut mean = vec![0.0f64; cfg.lpc_order + 1];
    let mut used = 0usize;
    for f in mid {
        if let Some(r) = guarded_autocorr(f, cfg.lpc_order)? {
            for (m, v) in mean.iter_mut().zip(r.values()) {
                *m += v;
            }
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::InvalidWaveform(
            "all mid-utterance frames are silent".into(),
        ));
    }
    for m in &mut mean {
        *m /= used as f64;
    }
    let analysis = levinson_durbin(&AutocorrSequence::new(mean)?)?;
    extract_formants(&analysis.polynomial, w_in.sample_rate_hz(), &cfg.formant_filter)
}

/// Per-style mean formant displacement across a corpus.
///
/// Each speaker's baseline is the per-index mean of the formants of all of
/// that speaker's Normal-style utterances; every utterance is then compared
/// against its speaker's baseline, and the relative frequency displacements
/// are averaged per style.
pub fn displacement_summary(
    corpus: &Corpus,
    cfg: &AnalysisConfig,
) -> Result<BTreeMap<TalkingStyle, f64>> {
    // formants of every utterance, computed once
    let mut formant_sets: BTreeMap<(&str, TalkingStyle, usize), FormantSet> = BTreeMap::new();
    for u in corpus.utterances() {
        formant_sets.insert(
            (u.speaker_id.as_str(), u.style, u.repetition),
            utterance_formants(&u.waveform, cfg)?,
        );
    }

    // per-speaker Normal baseline: per-index mean over the shared indices
    let mut speaker_names: Vec<&str> = formant_sets.keys().map(|(s, _, _)| *s).collect();
    speaker_names.dedup(); // map keys are sorted, so equal names are adjacent
    let mut baselines: BTreeMap<&str, FormantSet> = BTreeMap::new();
    for speaker in speaker_names {
        let sets: Vec<&FormantSet> = formant_sets
            .iter()
            .filter(|((s, style, _), _)| *s == speaker && *style == TalkingStyle::Normal)
            .map(|(_, f)| f)
            .collect();
        if sets.is_empty() {
            return Err(Error::Experiment(format!(
                "speaker {speaker} has no normal-style utterances for a baseline"
            )));
        }
        let shared = sets.iter().map(|f| f.len()).min().unwrap();
        if shared == 0 {
            return Err(Error::Experiment(format!(
                "speaker {speaker} has an empty normal-style formant baseline"
            )));
        }
        let n = sets.len() as f64;
        let mean: Vec<Formant> = (0..shared)
            .map(|i| Formant {
                frequency_hz: sets.iter().map(|f| f.formants()[i].frequency_hz).sum::<f64>() / n,
                bandwidth_hz: sets.iter().map(|f| f.formants()[i].bandwidth_hz).sum::<f64>() / n,
            })
            .collect();
        baselines.insert(speaker, FormantSet::new(mean, corpus.sample_rate_hz())?);
    }

    // aggregate |dF|/F against the baseline, per style
    let mut total: BTreeMap<TalkingStyle, (f64, usize)> = BTreeMap::new();
    for ((speaker, style, _), set) in &formant_sets {
        let baseline = &baselines[speaker];
        let report = formant_displacement(set, baseline)?;
        let entry = total.entry(*style).or_insert((0.0, 0));
        entry.0 += report.mean;
        entry.1 += 1;
    }
    Ok(total
        .into_iter()
        .map(|(style, (sum, count))| (style, sum / count as f64))
        .collect())
}

// ---------------------------------------------------------------------------
// Recognizers
// ---------------------------------------------------------------------------

/// Which recognizer an experiment uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recognizer {
    #[default]
    Dtw,
    Hmm,
}

impl std::fmt::Display for Recognizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Recognizer::Dtw => "dtw",
            Recognizer::Hmm => "hmm",
        })
    }
}

impl std::str::FromStr for Recognizer {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dtw" => Ok(Recognizer::Dtw),
            "hmm" => Ok(Recognizer::Hmm),
            other => Err(Error::InvalidParameter(format!(
                "unknown recognizer {other:?} (expected dtw or hmm)"
            ))),
        }
    }
}

/// Full experiment configuration; embedded verbatim in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub recognizer: Recognizer,
    /// Normal-style repetitions `0..train_repetitions` train the models.
    pub train_repetitions: usize,
    /// Repetitions `train_repetitions..train_repetitions+test_repetitions`
    /// of every style are scored; disjoint from training by construction.
    pub test_repetitions: usize,
    pub feature: FeatureConfig,
    pub dtw: DtwConfig,
    pub hmm: TrainConfig,
    pub analysis: AnalysisConfig,
    pub master_seed: u64,
}

impl ExperimentConfig {
    pub fn default_with_seed(master_seed: u64) -> Self {
        ExperimentConfig {
            recognizer: Recognizer::Dtw,
            train_repetitions: 5,
            test_repetitions: 4,
            feature: FeatureConfig::default(),
            dtw: DtwConfig::default(),
            hmm: TrainConfig::default(),
            analysis: AnalysisConfig::default(),
            master_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.feature.validate()?;
        if self.train_repetitions == 0 {
            return Err(Error::InvalidParameter(
                "need at least one training repetition".into(),
            ));
        }
        if self.test_repetitions == 0 {
            return Err(Error::InvalidParameter(
                "need at least one test repetition".into(),
            ));
        }
        Ok(())
    }
}

/// A trained speaker-identification system, self-describing and persistable
/// as JSON (front-end config, recognizer config, and seed embedded).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainedRecognizer {
    Dtw {
        feature: FeatureConfig,
        dtw: DtwConfig,
        templates: BTreeMap<String, Vec<FeatureSequence>>,
    },
    Hmm {
        feature: FeatureConfig,
        train: TrainConfig,
        master_seed: u64,
        codebook: Codebook,
        models: BTreeMap<String, HmmModel>,
    },
}

impl TrainedRecognizer {
    pub fn speaker_ids(&self) -> Vec<String> {
        match self {
            TrainedRecognizer::Dtw { templates, .. } => templates.keys().cloned().collect(),
            TrainedRecognizer::Hmm { models, .. } => models.keys().cloned().collect(),
        }
    }

    pub fn feature_config(&self) -> &FeatureConfig {
        match self {
            TrainedRecognizer::Dtw { feature, .. } => feature,
            TrainedRecognizer::Hmm { feature, .. } => feature,
        }
    }
}

fn training_features(
    corpus: &Corpus,
    cfg: &ExperimentConfig,
) -> Result<BTreeMap<String, Vec<FeatureSequence>>> {
    let mut by_speaker: BTreeMap<String, Vec<FeatureSequence>> = BTreeMap::new();
    for speaker in corpus.speaker_ids() {
        let mut seqs = Vec::with_capacity(cfg.train_repetitions);
        for rep in 0..cfg.train_repetitions {
            let u = corpus.get(&speaker, TalkingStyle::Normal, rep).ok_or_else(|| {
                Error::Experiment(format!(
                    "speaker {speaker} lacks normal-style training repetition {rep}"
                ))
            })?;
            seqs.push(extract_features(&u.waveform, &cfg.feature)?);
        }
        by_speaker.insert(speaker, seqs);
    }
    Ok(by_speaker)
}

/// Trains the configured recognizer on the Normal-style training
/// repetitions of every speaker in the corpus.
pub fn train_recognizer(corpus: &Corpus, cfg: &ExperimentConfig) -> Result<TrainedRecognizer> {
    cfg.validate()?;
    let features = training_features(corpus, cfg)?;
    match cfg.recognizer {
        Recognizer::Dtw => Ok(TrainedRecognizer::Dtw {
            feature: cfg.feature,
            dtw: cfg.dtw,
            templates: features,
        }),
        Recognizer::Hmm => {
            // one shared codebook over every speaker's training frames
            let all: Vec<_> = features
                .values()
                .flatten()
                .flat_map(|seq| seq.frames().iter().cloned())
                .collect();
            let mut cb_rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.master_seed, "codebook"));
            let codebook = train_codebook(&all, cfg.hmm.num_symbols, &mut cb_rng)?;
            let mut models = BTreeMap::new();
            for (speaker, seqs) in &features {
                let observations = seqs
                    .iter()
                    .map(|s| quantize(s, &codebook))
                    .collect::<Result<Vec<_>>>()?;
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.master_seed, speaker));
                let trained = baum_welch_train(&observations, &cfg.hmm, &mut rng)?;
                models.insert(speaker.clone(), trained.model);
            }
            Ok(TrainedRecognizer::Hmm {
                feature: cfg.feature,
                train: cfg.hmm,
                master_seed: cfg.master_seed,
                codebook,
                models,
            })
        }
    }
}

fn mix_seed(master: u64, label: &str) -> u64 {
    // stable FNV-1a fold of the label into the master seed
    let mut h: u64 = 0xCBF2_9CE4_8422_2325 ^ master.rotate_left(17);
    for &b in label.as_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Scores one waveform against every enrolled speaker.
///
/// Returns `(speaker, score)` pairs ranked best-first: ascending DTW
/// distance, or descending HMM log-likelihood. Ties rank the
/// lexicographically smaller id first.
pub fn rank_speakers(
    recognizer: &TrainedRecognizer,
    w: &Waveform,
) -> Result<Vec<(String, f64)>> {
    let features = extract_features(w, recognizer.feature_config())?;
    let ranked: Vec<(String, f64)> = match recognizer {
        TrainedRecognizer::Dtw { dtw, templates, .. } => {
            if templates.is_empty() {
                return Err(Error::NoCandidates);
            }
            let mut scores = Vec::with_capacity(templates.len());
            for (speaker, seqs) in templates {
                let mut best = f64::INFINITY;
                for t in seqs {
                    best = best.min(dtw_distance(&features, t, dtw)?);
                }
                scores.push((speaker.clone(), best));
            }
            scores.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
            scores
        }
        TrainedRecognizer::Hmm { codebook, models, .. } => {
            if models.is_empty() {
                return Err(Error::NoCandidates);
            }
            let obs = quantize(&features, codebook)?;
            let mut scores = Vec::with_capacity(models.len());
            for (speaker, model) in models {
                scores.push((speaker.clone(), forward_log_likelihood(model, &obs)?));
            }
            scores.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            scores
        }
    };
    debug_assert!(!ranked.is_empty());
    Ok(ranked)
}

/// Saves a trained recognizer as JSON.
pub fn save_recognizer(recognizer: &TrainedRecognizer, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(recognizer)
        .map_err(|e| Error::Experiment(format!("recognizer serialization failed: {e}")))?;
    fsutil::write_atomic(path, format!("{json}\n").as_bytes())
}

/// Loads a recognizer saved by [`save_recognizer`].
pub fn load_recognizer(path: &Path) -> Result<TrainedRecognizer> {
    let text = fsutil::read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Error::MalformedJson {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })
}

// ---------------------------------------------------------------------------
// The experiment
// ---------------------------------------------------------------------------

/// Results for one style.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleResult {
    /// Fraction of this style's test utterances attributed to their true
    /// speaker.
    pub recognition_rate: f64,
    /// Mean relative formant displacement against the Normal baselines.
    pub mean_formant_displacement: f64,
    /// `confusion[true_speaker][predicted_speaker]` = count.
    pub confusion: BTreeMap<String, BTreeMap<String, usize>>,
}

/// Full experiment output; serializes byte-identically for a given corpus
/// and configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleReport {
    pub config: ExperimentConfig,
    /// Keyed by style name, in canonical style order.
    pub styles: BTreeMap<String, StyleResult>,
}

impl StyleReport {
    pub fn rate(&self, style: TalkingStyle) -> Option<f64> {
        self.styles.get(style.name()).map(|r| r.recognition_rate)
    }

    pub fn displacement(&self, style: TalkingStyle) -> Option<f64> {
        self.styles
            .get(style.name())
            .map(|r| r.mean_formant_displacement)
    }

    /// `style,recognition_rate` rows in canonical style order.
    pub fn to_rate_csv(&self) -> String {
        let mut out = String::from("style,recognition_rate\n");
        for style in TalkingStyle::ALL {
            if let Some(r) = self.styles.get(style.name()) {
                out.push_str(&format!("{},{}\n", style.name(), r.recognition_rate));
            }
        }
        out
    }

    /// `style,mean_formant_displacement` rows in canonical style order.
    pub fn to_displacement_csv(&self) -> String {
        let mut out = String::from("style,mean_formant_displacement\n");
        for style in TalkingStyle::ALL {
            if let Some(r) = self.styles.get(style.name()) {
                out.push_str(&format!(
                    "{},{}\n",
                    style.name(),
                    r.mean_formant_displacement
                ));
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map(|j| format!("{j}\n"))
            .map_err(|e| Error::Experiment(format!("report serialization failed: {e}")))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        fsutil::write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn write_rate_csv(&self, path: &Path) -> Result<()> {
        fsutil::write_atomic(path, self.to_rate_csv().as_bytes())
    }

    pub fn write_displacement_csv(&self, path: &Path) -> Result<()> {
        fsutil::write_atomic(path, self.to_displacement_csv().as_bytes())
    }
}

/// Trains on Normal-style repetitions, scores every style's held-out
/// repetitions, and reports per-style rates, displacements, and confusion
/// matrices.
pub fn run_experiment(corpus: &Corpus, cfg: &ExperimentConfig) -> Result<StyleReport> {
    cfg.validate()?;
    let recognizer = train_recognizer(corpus, cfg)?;
    let speakers = corpus.speaker_ids();
    let displacement = displacement_summary(corpus, &cfg.analysis)?;

    let mut styles = BTreeMap::new();
    for style in corpus.styles() {
        let mut confusion: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
        let mut correct = 0usize;
        let mut total = 0usize;
        for speaker in &speakers {
            for rep in cfg.train_repetitions..cfg.train_repetitions + cfg.test_repetitions {
                let u = corpus.get(speaker, style, rep).ok_or_else(|| {
                    Error::Experiment(format!(
                        "corpus lacks test utterance ({speaker}, {style}, {rep})"
                    ))
                })?;
                let ranked = rank_speakers(&recognizer, &u.waveform)?;
                let predicted = ranked[0].0.clone();
                if predicted == *speaker {
                    correct += 1;
                }
                total += 1;
                *confusion
                    .entry(speaker.clone())
                    .or_default()
                    .entry(predicted)
                    .or_default() += 1;
            }
        }
        styles.insert(
            style.name().to_string(),
            StyleResult {
                recognition_rate: correct as f64 / total as f64,
                mean_formant_displacement: *displacement.get(&style).ok_or_else(|| {
                    Error::Experiment(format!("no displacement computed for style {style}"))
                })?,
                confusion,
            },
        );
    }
    Ok(StyleReport {
        config: cfg.clone(),
        styles,
    })
}

// ---------------------------------------------------------------------------
// Rank correlation
// ---------------------------------------------------------------------------

/// Midrank assignment for Spearman correlation.
fn midranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // ranks are 1-based; ties share the average rank of their block
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with midrank tie handling.
pub fn spearman_rho(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::InvalidParameter(
            "rank correlation needs at least two points".into(),
        ));
    }
    let ra = midranks(a);
    let rb = midranks(b);
    let n = a.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - mean) * (y - mean);
        var_a += (x - mean) * (x - mean);
        var_b += (y - mean) * (y - mean);
    }
    if var_a == 0.0 || var_b == 0.0 {
        return Err(Error::InvalidParameter(
            "rank correlation undefined when one variable is constant".into(),
        ));
    }
    Ok(cov / (var_a * var_b).sqrt())
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
