//! Vocal-tract modelling and styled-speech speaker identification.
//!
//! The crate models the vocal tract as an all-pole filter
//! `H(z) = K / (1 + a1 z^-1 + ... + ap z^-p)` and builds everything else on
//! top of that convention:
//!
//! - **`signals`** — waveform conditioning: pre-emphasis, framing, Hamming
//!   windowing, autocorrelation, and strict PCM16 mono WAV I/O.
//! - **`lpc`** — the all-pole layer: Levinson-Durbin analysis, lossless-tube
//!   area functions, reflection coefficients, and the step-up/step-down
//!   recursions between them.
//! - **`formants`** — predictor roots via companion-matrix eigenvalues and
//!   the pole-to-formant mapping `F = theta*fs/(2*pi)`, `B = -ln|z|*fs/pi`.
//! - **`cepstra`** — LPC cepstra (gain term excluded) and feature sequences.
//! - **`style`** — a synthetic five-style corpus generator in which talking
//!   styles act as seeded pole-displacement profiles.
//! - **`dtw`** / **`hmm`** — template and discrete-HMM recognizers over
//!   cepstral features.
//! - **`eval`** — the train-on-normal / test-across-styles experiment
//!   harness with per-style rates and formant-displacement summaries.
//!
//! Sign convention: predictor coefficients are stored for
//! `A(z) = 1 + sum_i a_i z^-i`, so a single resonance at radius `r`, angle
//! `theta` yields `a = [-2 r cos(theta), r^2]`. Every routine in the crate,
//! including the Levinson-Durbin output, follows this convention.

// Validation guards are written `!(x > 0.0)` rather than `x <= 0.0` on
// purpose: the negated form also rejects NaN, so malformed input fails
// closed instead of slipping through a comparison that is false for NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cepstra;
pub mod dtw;
pub mod eval;
pub mod formants;
mod fsutil;
pub mod hmm;
pub mod lpc;
pub mod signals;
pub mod style;

pub use cepstra::{lpc_to_cepstrum, CepstralVector, FeatureSequence};
pub use dtw::{dtw_distance, dtw_identify, DtwConfig};
pub use eval::{
    displacement_summary, extract_features, load_recognizer, rank_speakers, run_experiment,
    save_recognizer, spearman_rho, train_recognizer, utterance_formants, AnalysisConfig,
    ExperimentConfig, FeatureConfig, Recognizer, StyleReport, StyleResult, TrainedRecognizer,
};
pub use hmm::{
    baum_welch_train, forward_log_likelihood, hmm_identify, quantize, train_codebook, Codebook,
    HmmModel, ObservationSequence, TrainConfig, TrainedHmm,
};
pub use formants::{
    extract_formants, formant_displacement, pole_to_formant, polynomial_roots, Formant,
    FormantFilterConfig, FormantSet, Pole,
};
pub use lpc::{
    area_to_reflection, levinson_durbin, predictor_to_reflection, read_area_file,
    reflection_to_predictor, AreaFunction, LpcAnalysis, PredictorPolynomial, ReflectionCoeffs,
};
pub use signals::{
    autocorrelate, frame, pre_emphasize, read_wav, window_hamming, write_wav, Waveform,
};
pub use style::{
    default_speakers, generate_corpus, load_corpus, perturb_poles, save_corpus,
    synthesize_utterance, Corpus, CorpusConfig, SpeakerSpec, StyleProfile, StyleProfileSet,
    TalkingStyle,
};

/// Crate-wide error type. Variants carry enough context to state which
/// contract was violated and by what value.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid waveform: {0}")]
    InvalidWaveform(String),

    #[error("unsupported WAV file: {0}")]
    UnsupportedWav(String),

    #[error("malformed WAV file: {0}")]
    MalformedWav(String),

    #[error("malformed area file: {0}")]
    MalformedAreaFile(String),

    #[error(
        "singular Levinson-Durbin recursion at stage {stage}: |k| = {magnitude:.6} >= 1 \
         (degenerate or perfectly predictable input)"
    )]
    SingularRecursion { stage: usize, magnitude: f64 },

    #[error("polynomial is not minimum-phase: step-down stage {stage} gives |k| = {magnitude:.6} >= 1")]
    NotMinimumPhase { stage: usize, magnitude: f64 },

    #[error("root finding did not converge for coefficients {coeffs:?}")]
    RootsDidNotConverge { coeffs: Vec<f64> },

    #[error("pole at the origin has no finite bandwidth")]
    PoleAtOrigin,

    #[error("pole outside the closed unit disk: radius {radius:.6}")]
    PoleOutsideUnitDisk { radius: f64 },

    #[error("pole angle {angle:.6} rad outside (0, pi]")]
    PoleAngleOutOfRange { angle: f64 },

    #[error("unstable predictor polynomial: {0}")]
    UnstablePolynomial(String),

    #[error("empty formant set: {0}")]
    EmptyFormantSet(String),

    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("band radius {radius} infeasible for lengths {len_a} and {len_b} (need >= {min})")]
    InfeasibleBand {
        radius: usize,
        len_a: usize,
        len_b: usize,
        min: usize,
    },

    #[error("no templates or models to identify against")]
    NoCandidates,

    #[error("codebook needs at least {needed} distinct vectors, got {got}")]
    TooFewDistinctVectors { needed: usize, got: usize },

    #[error("observation symbol {symbol} out of range for {num_symbols} symbols")]
    SymbolOutOfRange { symbol: usize, num_symbols: usize },

    #[error("invalid stochastic matrix: {0}")]
    InvalidModel(String),

    #[error("corpus error: {0}")]
    Corpus(String),

    #[error("experiment error: {0}")]
    Experiment(String),

    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON in {path}: {detail}")]
    MalformedJson {
        path: std::path::PathBuf,
        detail: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<std::path::PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
