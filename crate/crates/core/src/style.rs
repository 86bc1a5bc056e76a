//! Synthetic styled-speech corpus.
//!
//! Each talking style is modelled as a controlled displacement of the poles
//! of a per-speaker base vocal tract: angles shift by a bounded random draw,
//! radii scale by a bounded relative draw, and the style additionally sets a
//! duration (rate) factor and an output gain. Displacement magnitudes are
//! ordered Shout > Loud > Soft > Slow > Normal (= 0), so "stressed" styles
//! move resonances further from the speaker's normal configuration.
//!
//! Utterances are voiced-only: an impulse train at the speaker's pitch
//! (white noise is available as an alternative excitation) drives the
//! perturbed all-pole filter. Everything is a pure function of the master
//! seed and the configuration; per-utterance seeds derive only from
//! (master seed, speaker id, style, repetition), never from generation
//! order.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::formants::{polynomial_from_poles, polynomial_roots, Pole};
use crate::lpc::{area_to_reflection, reflection_to_predictor, AreaFunction, PredictorPolynomial};
use crate::signals::{write_wav, Waveform};
use crate::{fsutil, Error, Result};

/// Default corpus sample rate.
pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 8000.0;
/// Default utterance duration before the style's rate factor is applied.
pub const DEFAULT_DURATION_S: f64 = 0.5;
/// Default number of speakers.
pub const DEFAULT_SPEAKER_COUNT: usize = 9;
/// Default repetitions of the word per speaker and style.
pub const DEFAULT_REPETITIONS: usize = 9;
/// Per-utterance pitch is jittered by a relative draw in ± this value.
pub const DEFAULT_PITCH_JITTER: f64 = 0.03;
/// Default within-speaker pole jitter (radians of angle; half of it in
/// relative radius), giving natural variation between repetitions.
pub const DEFAULT_INTRA_SPEAKER_JITTER: f64 = 0.004;
/// Perturbed pole radii are clamped to this bound to keep every synthesis
/// filter strictly stable.
pub const MAX_POLE_RADIUS: f64 = 0.998;

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// The five talking styles of the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TalkingStyle {
    Normal,
    Shout,
    Slow,
    Loud,
    Soft,
}

impl TalkingStyle {
    /// All styles in canonical order.
    pub const ALL: [TalkingStyle; 5] = [
        TalkingStyle::Normal,
        TalkingStyle::Shout,
        TalkingStyle::Slow,
        TalkingStyle::Loud,
        TalkingStyle::Soft,
    ];

    /// Position in canonical order.
    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&s| s == self).unwrap()
    }

    pub fn name(self) -> &'static str {
        match self {
            TalkingStyle::Normal => "normal",
            TalkingStyle::Shout => "shout",
            TalkingStyle::Slow => "slow",
            TalkingStyle::Loud => "loud",
            TalkingStyle::Soft => "soft",
        }
    }
}

impl fmt::Display for TalkingStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TalkingStyle {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        TalkingStyle::ALL
            .iter()
            .copied()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown talking style {s:?}")))
    }
}

/// How a style displaces poles and shapes an utterance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StyleProfileRaw", into = "StyleProfileRaw")]
pub struct StyleProfile {
    angle_jitter_rad: f64,
    radius_jitter: f64,
    rate_factor: f64,
    gain_factor: f64,
}

#[derive(Serialize, Deserialize)]
struct StyleProfileRaw {
    angle_jitter_rad: f64,
    radius_jitter: f64,
    rate_factor: f64,
    gain_factor: f64,
}

impl StyleProfile {
    pub fn new(
        angle_jitter_rad: f64,
        radius_jitter: f64,
        rate_factor: f64,
        gain_factor: f64,
    ) -> Result<Self> {
        if !(angle_jitter_rad >= 0.0) || !angle_jitter_rad.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "angle jitter must be a nonnegative finite value, got {angle_jitter_rad}"
            )));
        }
        if !(0.0..1.0).contains(&radius_jitter) {
            return Err(Error::InvalidParameter(format!(
                "radius jitter must lie in [0, 1), got {radius_jitter}"
            )));
        }
        if !(rate_factor > 0.0) || !rate_factor.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "rate factor must be positive, got {rate_factor}"
            )));
        }
        if !(gain_factor > 0.0) || !gain_factor.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "gain factor must be positive, got {gain_factor}"
            )));
        }
        Ok(StyleProfile {
            angle_jitter_rad,
            radius_jitter,
            rate_factor,
            gain_factor,
        })
    }

    pub fn angle_jitter_rad(&self) -> f64 {
        self.angle_jitter_rad
    }

    pub fn radius_jitter(&self) -> f64 {
        self.radius_jitter
    }

    pub fn rate_factor(&self) -> f64 {
        self.rate_factor
    }

    pub fn gain_factor(&self) -> f64 {
        self.gain_factor
    }
}

impl TryFrom<StyleProfileRaw> for StyleProfile {
    type Error = Error;
    fn try_from(r: StyleProfileRaw) -> Result<Self> {
        StyleProfile::new(r.angle_jitter_rad, r.radius_jitter, r.rate_factor, r.gain_factor)
    }
}

impl From<StyleProfile> for StyleProfileRaw {
    fn from(p: StyleProfile) -> StyleProfileRaw {
        StyleProfileRaw {
            angle_jitter_rad: p.angle_jitter_rad,
            radius_jitter: p.radius_jitter,
            rate_factor: p.rate_factor,
            gain_factor: p.gain_factor,
        }
    }
}

/// One profile per style.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StyleProfileSet {
    pub normal: StyleProfile,
    pub shout: StyleProfile,
    pub slow: StyleProfile,
    pub loud: StyleProfile,
    pub soft: StyleProfile,
}

impl StyleProfileSet {
    pub fn profile(&self, style: TalkingStyle) -> &StyleProfile {
        match style {
            TalkingStyle::Normal => &self.normal,
            TalkingStyle::Shout => &self.shout,
            TalkingStyle::Slow => &self.slow,
            TalkingStyle::Loud => &self.loud,
            TalkingStyle::Soft => &self.soft,
        }
    }
}

impl Default for StyleProfileSet {
    /// Displacement magnitudes ordered Shout > Loud > Soft > Slow > Normal.
    fn default() -> Self {
        StyleProfileSet {
            normal: StyleProfile::new(0.0, 0.0, 1.0, 1.0).unwrap(),
            shout: StyleProfile::new(0.12, 0.06, 0.9, 2.5).unwrap(),
            slow: StyleProfile::new(0.015, 0.01, 1.5, 1.0).unwrap(),
            loud: StyleProfile::new(0.08, 0.04, 0.95, 1.8).unwrap(),
            soft: StyleProfile::new(0.03, 0.02, 1.0, 0.6).unwrap(),
        }
    }
}

/// A synthetic speaker: a base vocal tract, a pitch, and the small pole
/// jitter that separates one repetition from the next.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpeakerSpecRaw", into = "SpeakerSpecRaw")]
pub struct SpeakerSpec {
    id: String,
    base_areas: AreaFunction,
    pitch_hz: f64,
    intra_speaker_jitter: f64,
}

#[derive(Serialize, Deserialize)]
struct SpeakerSpecRaw {
    id: String,
    base_areas: AreaFunction,
    pitch_hz: f64,
    intra_speaker_jitter: f64,
}

impl SpeakerSpec {
    pub fn new(
        id: impl Into<String>,
        base_areas: AreaFunction,
        pitch_hz: f64,
        intra_speaker_jitter: f64,
    ) -> Result<Self> {
        let id = id.into();
        if id.is_empty()
            || !id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(Error::InvalidParameter(format!(
                "speaker id {id:?} must be non-empty and filesystem-safe \
                 (ASCII alphanumeric, '_', '-')"
            )));
        }
        if !(60.0..=400.0).contains(&pitch_hz) {
            return Err(Error::InvalidParameter(format!(
                "pitch must lie in [60, 400] Hz, got {pitch_hz}"
            )));
        }
        if !(intra_speaker_jitter >= 0.0) || !intra_speaker_jitter.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "intra-speaker jitter must be nonnegative, got {intra_speaker_jitter}"
            )));
        }
        Ok(SpeakerSpec {
            id,
            base_areas,
            pitch_hz,
            intra_speaker_jitter,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn base_areas(&self) -> &AreaFunction {
        &self.base_areas
    }

    pub fn pitch_hz(&self) -> f64 {
        self.pitch_hz
    }

    pub fn intra_speaker_jitter(&self) -> f64 {
        self.intra_speaker_jitter
    }

    /// The speaker's unperturbed synthesis filter (gain 1).
    pub fn base_filter(&self) -> Result<PredictorPolynomial> {
        reflection_to_predictor(&area_to_reflection(&self.base_areas), 1.0)
    }
}

impl TryFrom<SpeakerSpecRaw> for SpeakerSpec {
    type Error = Error;
    fn try_from(r: SpeakerSpecRaw) -> Result<Self> {
        SpeakerSpec::new(r.id, r.base_areas, r.pitch_hz, r.intra_speaker_jitter)
    }
}

impl From<SpeakerSpec> for SpeakerSpecRaw {
    fn from(s: SpeakerSpec) -> SpeakerSpecRaw {
        SpeakerSpecRaw {
            id: s.id,
            base_areas: s.base_areas,
            pitch_hz: s.pitch_hz,
            intra_speaker_jitter: s.intra_speaker_jitter,
        }
    }
}

/// Excitation source for synthesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Excitation {
    /// Periodic pulses at the speaker's (jittered) pitch: voiced speech.
    #[default]
    ImpulseTrain,
    /// White noise: an unvoiced alternative.
    Noise,
}

/// One synthesized utterance of the corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub speaker_id: String,
    pub style: TalkingStyle,
    pub repetition: usize,
    pub waveform: Waveform,
}

/// The full styled corpus: one waveform per (speaker, style, repetition).
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    utterances: Vec<Utterance>,
    sample_rate_hz: f64,
}

impl Corpus {
    pub fn new(utterances: Vec<Utterance>) -> Result<Self> {
        if utterances.is_empty() {
            return Err(Error::Corpus("corpus has no utterances".into()));
        }
        let sample_rate_hz = utterances[0].waveform.sample_rate_hz();
        let mut keys = BTreeSet::new();
        for u in &utterances {
            if u.waveform.sample_rate_hz() != sample_rate_hz {
                return Err(Error::Corpus(format!(
                    "mixed sample rates: {} and {}",
                    sample_rate_hz,
                    u.waveform.sample_rate_hz()
                )));
            }
            if !keys.insert((u.speaker_id.clone(), u.style, u.repetition)) {
                return Err(Error::Corpus(format!(
                    "duplicate utterance key ({}, {}, {})",
                    u.speaker_id, u.style, u.repetition
                )));
            }
        }
        Ok(Corpus {
            utterances,
            sample_rate_hz,
        })
    }

    pub fn utterances(&self) -> &[Utterance] {
        &self.utterances
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    /// Sorted distinct speaker ids.
    pub fn speaker_ids(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.utterances.iter().map(|u| u.speaker_id.as_str()).collect();
        set.into_iter().map(str::to_string).collect()
    }

    /// Distinct styles in canonical order.
    pub fn styles(&self) -> Vec<TalkingStyle> {
        let set: BTreeSet<usize> = self.utterances.iter().map(|u| u.style.index()).collect();
        set.into_iter().map(|i| TalkingStyle::ALL[i]).collect()
    }

    pub fn get(&self, speaker_id: &str, style: TalkingStyle, repetition: usize) -> Option<&Utterance> {
        self.utterances
            .iter()
            .find(|u| u.speaker_id == speaker_id && u.style == style && u.repetition == repetition)
    }
}

/// Everything needed to regenerate a corpus; also its on-disk manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub speakers: Vec<SpeakerSpec>,
    pub styles: Vec<TalkingStyle>,
    pub repetitions: usize,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    pub excitation: Excitation,
    pub profiles: StyleProfileSet,
    pub master_seed: u64,
}

impl CorpusConfig {
    /// The stock experiment shape: 9 speakers x 5 styles x 9 repetitions.
    pub fn default_with_seed(master_seed: u64) -> Result<Self> {
        Ok(CorpusConfig {
            speakers: default_speakers(DEFAULT_SPEAKER_COUNT, master_seed)?,
            styles: TalkingStyle::ALL.to_vec(),
            repetitions: DEFAULT_REPETITIONS,
            duration_s: DEFAULT_DURATION_S,
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
            excitation: Excitation::ImpulseTrain,
            profiles: StyleProfileSet::default(),
            master_seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.speakers.is_empty() {
            return Err(Error::InvalidParameter("no speakers configured".into()));
        }
        let mut ids = BTreeSet::new();
        for s in &self.speakers {
            if !ids.insert(s.id()) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate speaker id {:?}",
                    s.id()
                )));
            }
        }
        if self.styles.is_empty() {
            return Err(Error::InvalidParameter("no styles configured".into()));
        }
        let mut styles = BTreeSet::new();
        for &s in &self.styles {
            if !styles.insert(s) {
                return Err(Error::InvalidParameter(format!("duplicate style {s}")));
            }
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidParameter("repetitions must be >= 1".into()));
        }
        if !(self.duration_s > 0.0) || !self.duration_s.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "duration must be positive, got {}",
                self.duration_s
            )));
        }
        if !(self.sample_rate_hz > 0.0) || !self.sample_rate_hz.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sample rate must be positive, got {}",
                self.sample_rate_hz
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Seed derivation
// ---------------------------------------------------------------------------

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Seed for one utterance: a pure function of (master seed, speaker id,
/// style, repetition), independent of generation order.
pub fn utterance_seed(master_seed: u64, speaker_id: &str, style: TalkingStyle, rep: usize) -> u64 {
    let mut h = splitmix64(master_seed ^ fnv1a64(speaker_id.as_bytes()));
    h = splitmix64(h ^ (style.index() as u64 + 1));
    splitmix64(h ^ (rep as u64 + 1))
}

/// Seed for deriving a speaker's tract from the master seed.
fn speaker_seed(master_seed: u64, speaker_id: &str) -> u64 {
    // distinct tag so speaker derivation never collides with utterance seeds
    splitmix64(master_seed ^ fnv1a64(speaker_id.as_bytes()) ^ 0x5045_414B_4552_0001)
}

// ---------------------------------------------------------------------------
// Pole perturbation
// ---------------------------------------------------------------------------

/// Displaces poles according to a style profile.
///
/// Each upper-half-plane pole gets an angle shift drawn from
/// [-angle_jitter, +angle_jitter] and a radius scale of (1 + draw) with the
/// draw from [-radius_jitter, +radius_jitter]; its conjugate partner mirrors
/// the result exactly, so the set stays conjugate-symmetric. Real poles get
/// only the radius scale. Output radii are clamped to [`MAX_POLE_RADIUS`],
/// keeping every perturbed filter strictly stable. A zero-jitter profile
/// returns the poles bit-for-bit unchanged.
///
/// Draws happen in input order (angle before radius per pole), so results
/// are deterministic for a given RNG state.
pub fn perturb_poles<R: Rng>(poles: &[Pole], profile: &StyleProfile, rng: &mut R) -> Vec<Pole> {
    if profile.angle_jitter_rad == 0.0 && profile.radius_jitter == 0.0 {
        return poles.to_vec();
    }
    let mut out: Vec<Option<Pole>> = vec![None; poles.len()];
    // upper-half and real poles draw their own displacement, in input order
    for (i, p) in poles.iter().enumerate() {
        if p.im > 0.0 {
            let d_angle = rng.gen_range(-profile.angle_jitter_rad..=profile.angle_jitter_rad);
            let d_radius = rng.gen_range(-profile.radius_jitter..=profile.radius_jitter);
            let radius = (p.radius() * (1.0 + d_radius)).min(MAX_POLE_RADIUS);
            out[i] = Some(Pole::from_polar(radius, p.angle_rad() + d_angle));
        } else if p.im == 0.0 {
            let d_radius = rng.gen_range(-profile.radius_jitter..=profile.radius_jitter);
            let scaled = p.re * (1.0 + d_radius);
            out[i] = Some(Pole::new(scaled.clamp(-MAX_POLE_RADIUS, MAX_POLE_RADIUS), 0.0));
        }
    }
    // lower-half poles mirror their nearest unconsumed conjugate partner
    let mut consumed = vec![false; poles.len()];
    for (i, p) in poles.iter().enumerate() {
        if p.im >= 0.0 {
            continue;
        }
        let partner = poles
            .iter()
            .enumerate()
            .filter(|(j, q)| q.im > 0.0 && !consumed[*j])
            .min_by(|(_, a), (_, b)| {
                let da = (a.re - p.re).abs() + (a.im + p.im).abs();
                let db = (b.re - p.re).abs() + (b.im + p.im).abs();
                da.total_cmp(&db)
            })
            .map(|(j, _)| j);
        match partner {
            Some(j) => {
                consumed[j] = true;
                out[i] = Some(out[j].unwrap().conj());
            }
            None => {
                // no partner in the input: perturb independently
                let d_angle =
                    rng.gen_range(-profile.angle_jitter_rad..=profile.angle_jitter_rad);
                let d_radius = rng.gen_range(-profile.radius_jitter..=profile.radius_jitter);
                let radius = (p.radius() * (1.0 + d_radius)).min(MAX_POLE_RADIUS);
                out[i] = Some(Pole::from_polar(radius, p.angle_rad() + d_angle));
            }
        }
    }
    out.into_iter().map(Option::unwrap).collect()
}

// ---------------------------------------------------------------------------
// Synthesis
// ---------------------------------------------------------------------------

/// Synthesizes one utterance and also returns the exact all-pole filter that
/// produced it (gain 1), which is useful as an analysis oracle.
///
/// Pipeline: base areas -> reflection -> predictor -> poles -> intra-speaker
/// jitter -> style displacement -> rebuilt polynomial -> excitation filtered
/// through it -> gain factor -> peak normalization to 0.9 -> quantization to
/// the 16-bit grid (so saved and in-memory corpora are identical).
pub fn synthesize_utterance_with_filter<R: Rng>(
    spk: &SpeakerSpec,
    profile: &StyleProfile,
    excitation: Excitation,
    duration_s: f64,
    sample_rate_hz: f64,
    rng: &mut R,
) -> Result<(Waveform, PredictorPolynomial)> {
    if !(duration_s > 0.0) || !duration_s.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "duration must be positive, got {duration_s}"
        )));
    }
    if !(sample_rate_hz > 0.0) || !sample_rate_hz.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sample rate must be positive, got {sample_rate_hz}"
        )));
    }

    // tract: base poles, intra-speaker variation, then the style displacement
    let base = spk.base_filter()?;
    let poles = polynomial_roots(&base)?;
    let intra = StyleProfile::new(
        spk.intra_speaker_jitter,
        (spk.intra_speaker_jitter * 0.5).min(0.5),
        1.0,
        1.0,
    )?;
    let poles = perturb_poles(&poles, &intra, rng);
    let poles = perturb_poles(&poles, profile, rng);
    let filter = if poles.is_empty() {
        base.clone()
    } else {
        polynomial_from_poles(&poles, 1.0)?
    };

    // excitation; the pitch draw happens for both kinds so the RNG stream
    // layout does not depend on the excitation choice
    let n_samples = ((duration_s * profile.rate_factor * sample_rate_hz).round() as usize).max(16);
    let pitch = spk.pitch_hz * (1.0 + rng.gen_range(-DEFAULT_PITCH_JITTER..=DEFAULT_PITCH_JITTER));
    let mut source = vec![0.0f64; n_samples];
    match excitation {
        Excitation::ImpulseTrain => {
            let period = sample_rate_hz / pitch;
            let mut k = 0usize;
            loop {
                let n = (k as f64 * period).round() as usize;
                if n >= n_samples {
                    break;
                }
                source[n] = 1.0;
                k += 1;
            }
        }
        Excitation::Noise => {
            for s in &mut source {
                *s = rng.gen_range(-1.0..=1.0);
            }
        }
    }

    // all-pole filter: y[n] = K x[n] - sum_i alpha_i y[n-i]
    let alphas = filter.coeffs();
    let k_gain = filter.gain();
    let mut samples = vec![0.0f64; n_samples];
    for n in 0..n_samples {
        let mut acc = k_gain * source[n];
        for (i, &a) in alphas.iter().enumerate() {
            if n > i {
                acc -= a * samples[n - 1 - i];
            }
        }
        samples[n] = acc;
    }

    // gain, then peak normalization to 0.9 and quantization to the PCM grid
    for s in &mut samples {
        *s *= profile.gain_factor;
    }
    let peak = samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if peak > 0.0 {
        let scale = 0.9 / peak;
        for s in &mut samples {
            *s *= scale;
        }
    }
    let mut waveform = Waveform::new(samples, sample_rate_hz)?;
    waveform.quantize_pcm16();
    Ok((waveform, filter))
}

/// Synthesizes one utterance (see [`synthesize_utterance_with_filter`]).
pub fn synthesize_utterance<R: Rng>(
    spk: &SpeakerSpec,
    profile: &StyleProfile,
    excitation: Excitation,
    duration_s: f64,
    sample_rate_hz: f64,
    rng: &mut R,
) -> Result<Waveform> {
    synthesize_utterance_with_filter(spk, profile, excitation, duration_s, sample_rate_hz, rng)
        .map(|(w, _)| w)
}

// ---------------------------------------------------------------------------
// Speaker generation
// ---------------------------------------------------------------------------

/// Vowel-like 9-section area templates (glottis to lips, relative areas).
/// Speakers cycle through these and add per-section scatter. Each template
/// alternates wide cavities with constrictions, which produces sharp,
/// well-separated resonances; the comment gives the unperturbed formants at
/// 8 kHz.
const AREA_TEMPLATES: [[f64; 9]; 9] = [
    // 550 / 1181 / 3000 / 3547 Hz
    [4.0, 6.0, 7.0, 3.0, 0.9, 2.0, 4.0, 1.5, 0.4],
    // 320 / 1857 / 2705 / 3560 Hz
    [2.0, 1.2, 1.0, 1.8, 3.2, 5.0, 6.0, 3.0, 1.0],
    // 416 / 814 / 2635 / 3608 Hz
    [1.0, 3.5, 6.5, 6.0, 2.2, 0.8, 1.8, 4.0, 1.2],
    // 352 / 1496 / 2700 / 3754 Hz
    [3.0, 5.5, 2.0, 0.7, 2.0, 5.0, 7.0, 2.5, 0.8],
    // 374 / 995 / 2993 / 3594 Hz
    [1.2, 2.8, 5.5, 2.0, 0.8, 2.2, 5.5, 3.0, 0.7],
    // 442 / 1451 / 2889 / 3586 Hz
    [5.0, 7.0, 3.5, 1.2, 0.8, 2.5, 5.5, 2.0, 0.5],
    // 384 / 859 / 2723 / 3622 Hz
    [1.0, 2.2, 4.8, 6.8, 2.5, 0.8, 2.0, 4.5, 1.0],
    // 430 / 924 / 2788 / 3550 Hz
    [2.0, 5.0, 7.5, 3.5, 1.0, 1.0, 3.0, 5.0, 0.8],
    // 440 / 2700 / 3683 Hz (no mid resonance: a distinctive spectrum)
    [3.0, 1.0, 2.8, 6.0, 6.5, 2.0, 0.7, 1.8, 0.8],
];

/// Generates `count` distinct speakers from the master seed: each takes a
/// vowel template with +/-10% per-section scatter, a pitch from the low band
/// (first third of speakers, 100-140 Hz) or the high band (180-240 Hz), and
/// the default intra-speaker jitter.
pub fn default_speakers(count: usize, master_seed: u64) -> Result<Vec<SpeakerSpec>> {
    if count == 0 {
        return Err(Error::InvalidParameter("speaker count must be >= 1".into()));
    }
    let low_band_count = count.div_ceil(3);
    (0..count)
        .map(|i| {
            let id = format!("spk{:02}", i + 1);
            let mut rng = ChaCha8Rng::seed_from_u64(speaker_seed(master_seed, &id));
            let template = &AREA_TEMPLATES[i % AREA_TEMPLATES.len()];
            let areas: Vec<f64> = template
                .iter()
                .map(|a| a * (1.0 + rng.gen_range(-0.10..=0.10)))
                .collect();
            let (lo, hi) = if i < low_band_count {
                (100.0, 140.0)
            } else {
                (180.0, 240.0)
            };
            let pitch = lo + rng.gen_range(0.0..=1.0) * (hi - lo);
            SpeakerSpec::new(
                id,
                AreaFunction::new(areas)?,
                pitch,
                DEFAULT_INTRA_SPEAKER_JITTER,
            )
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Corpus generation and persistence
// ---------------------------------------------------------------------------

/// Generates the full speakers x styles x repetitions corpus.
///
/// Bit-reproducible: utterance seeds derive only from the master seed and
/// the (speaker, style, repetition) key.
pub fn generate_corpus(cfg: &CorpusConfig) -> Result<Corpus> {
    cfg.validate()?;
    let mut utterances =
        Vec::with_capacity(cfg.speakers.len() * cfg.styles.len() * cfg.repetitions);
    for spk in &cfg.speakers {
        for &style in &cfg.styles {
            for rep in 0..cfg.repetitions {
                let seed = utterance_seed(cfg.master_seed, spk.id(), style, rep);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let waveform = synthesize_utterance(
                    spk,
                    cfg.profiles.profile(style),
                    cfg.excitation,
                    cfg.duration_s,
                    cfg.sample_rate_hz,
                    &mut rng,
                )?;
                utterances.push(Utterance {
                    speaker_id: spk.id().to_string(),
                    style,
                    repetition: rep,
                    waveform,
                });
            }
        }
    }
    Corpus::new(utterances)
}

/// Name of the corpus manifest file.
pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes the corpus as `<dir>/<speaker>/<style>/<rep>.wav` plus a
/// `manifest.json` holding the full generating configuration.
pub fn save_corpus(corpus: &Corpus, cfg: &CorpusConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for u in corpus.utterances() {
        let sub = dir.join(&u.speaker_id).join(u.style.name());
        std::fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
        write_wav(&sub.join(format!("{}.wav", u.repetition)), &u.waveform)?;
    }
    let json = serde_json::to_string_pretty(cfg)
        .map_err(|e| Error::Corpus(format!("manifest serialization failed: {e}")))?;
    fsutil::write_atomic(&dir.join(MANIFEST_FILE), format!("{json}\n").as_bytes())
}

/// Loads a corpus saved by [`save_corpus`], returning the utterances and the
/// manifest configuration.
pub fn load_corpus(dir: &Path) -> Result<(Corpus, CorpusConfig)> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = fsutil::read_text(&manifest_path)?;
    let cfg: CorpusConfig = serde_json::from_str(&text).map_err(|e| Error::MalformedJson {
        path: manifest_path.clone(),
        detail: e.to_string(),
    })?;
    cfg.validate()?;
    let mut utterances = Vec::new();
    for spk in &cfg.speakers {
        for &style in &cfg.styles {
            for rep in 0..cfg.repetitions {
                let path = dir
                    .join(spk.id())
                    .join(style.name())
                    .join(format!("{rep}.wav"));
                let waveform = crate::signals::read_wav(&path)?;
                if waveform.sample_rate_hz() != cfg.sample_rate_hz {
                    return Err(Error::Corpus(format!(
                        "{} has sample rate {}, manifest says {}",
                        path.display(),
                        waveform.sample_rate_hz(),
                        cfg.sample_rate_hz
                    )));
                }
                utterances.push(Utterance {
                    speaker_id: spk.id().to_string(),
                    style,
                    repetition: rep,
                    waveform,
                });
            }
        }
    }
    Ok((Corpus::new(utterances)?, cfg))
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
