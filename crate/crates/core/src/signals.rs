//! Waveform conditioning ahead of LPC estimation.
//!
//! The pipeline is the classical autocorrelation front end: pre-emphasis,
//! fixed-length framing, Hamming windowing, then biased unnormalized
//! autocorrelation. WAV I/O is deliberately strict: PCM 16-bit signed
//! little-endian mono only, everything else is rejected with an error that
//! names the offending field.

use std::path::Path;

use crate::fsutil;
use crate::{Error, Result};

/// Default pre-emphasis coefficient: flattens glottal tilt so higher
/// formants stay resolvable.
pub const DEFAULT_PRE_EMPHASIS: f64 = 0.95;

/// Samples are normalized by this on read and scaled by it on write, so
/// 16-bit PCM maps onto [-1, 1).
const PCM16_SCALE: f64 = 32768.0;

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// A mono waveform with its sampling rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate_hz: f64,
}

impl Waveform {
    /// Builds a waveform, checking that the rate is positive, the signal is
    /// nonempty, and every sample is finite.
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz > 0.0) || !sample_rate_hz.is_finite() {
            return Err(Error::InvalidWaveform(format!(
                "sample rate must be positive and finite, got {sample_rate_hz}"
            )));
        }
        if samples.is_empty() {
            return Err(Error::InvalidWaveform("empty sample buffer".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidWaveform(format!(
                "non-finite sample {} at index {i}",
                samples[i]
            )));
        }
        Ok(Waveform {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    /// Snaps every sample onto the 16-bit PCM grid (round to nearest step of
    /// 1/32768, clamped to the representable range). After this, a WAV
    /// write/read round trip reproduces the waveform exactly.
    pub fn quantize_pcm16(&mut self) {
        for s in &mut self.samples {
            *s = f64::from(sample_to_i16(*s)) / PCM16_SCALE;
        }
    }
}

/// A fixed-length analysis frame cut from a waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    samples: Vec<f64>,
    start_index: usize,
}

impl Frame {
    pub fn new(samples: Vec<f64>, start_index: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidParameter("empty frame".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite frame sample {} at index {i}",
                samples[i]
            )));
        }
        Ok(Frame {
            samples,
            start_index,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn start_index(&self) -> usize {
        self.start_index
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Autocorrelation values `r[0..=p]`, lag 0 first.
///
/// Invariants: `r[0] >= 0` and `|r[k]| <= r[0]` (tolerating rounding at the
/// 1e-9 relative level, since the sums are computed in floating point).
#[derive(Debug, Clone, PartialEq)]
pub struct AutocorrSequence {
    values: Vec<f64>,
}

impl AutocorrSequence {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("empty autocorrelation".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "non-finite autocorrelation value".into(),
            ));
        }
        let r0 = values[0];
        if r0 < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "negative zero-lag autocorrelation {r0}"
            )));
        }
        let bound = r0 * (1.0 + 1e-9);
        if let Some(k) = values.iter().position(|v| v.abs() > bound) {
            return Err(Error::InvalidParameter(format!(
                "autocorrelation |r[{k}]| = {} exceeds r[0] = {r0}",
                values[k].abs()
            )));
        }
        Ok(AutocorrSequence { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Model order implied by this sequence: `len - 1`.
    pub fn order(&self) -> usize {
        self.values.len() - 1
    }

    pub fn lag0(&self) -> f64 {
        self.values[0]
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// First-order high-pass `y[n] = x[n] - coeff * x[n-1]`, with `y[0] = x[0]`.
///
/// `coeff` must lie in `[0, 1]`; 0 is the identity, 1 is full differencing.
pub fn pre_emphasize(w: &Waveform, coeff: f64) -> Result<Waveform> {
    if !(0.0..=1.0).contains(&coeff) {
        return Err(Error::InvalidParameter(format!(
            "pre-emphasis coefficient must be in [0, 1], got {coeff}"
        )));
    }
    let x = w.samples();
    let mut y = Vec::with_capacity(x.len());
    y.push(x[0]);
    for n in 1..x.len() {
        y.push(x[n] - coeff * x[n - 1]);
    }
    Waveform::new(y, w.sample_rate_hz())
}

/// Cuts the waveform into frames at offsets `0, hop, 2*hop, ...`; any final
/// partial frame is dropped. Returns no frames when the signal is shorter
/// than `frame_len`.
pub fn frame(w: &Waveform, frame_len: usize, hop: usize) -> Result<Vec<Frame>> {
    if frame_len == 0 {
        return Err(Error::InvalidParameter("frame_len must be >= 1".into()));
    }
    if hop == 0 {
        return Err(Error::InvalidParameter("hop must be >= 1".into()));
    }
    let x = w.samples();
    let mut frames = Vec::new();
    let mut start = 0usize;
    while start + frame_len <= x.len() {
        frames.push(Frame {
            samples: x[start..start + frame_len].to_vec(),
            start_index: start,
        });
        start += hop;
    }
    Ok(frames)
}

/// Applies the Hamming window `w[n] = 0.54 - 0.46 cos(2 pi n / (N-1))`.
pub fn window_hamming(f: &Frame) -> Result<Frame> {
    let n = f.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "Hamming window needs frame length >= 2, got {n}"
        )));
    }
    let denom = (n - 1) as f64;
    let samples = f
        .samples()
        .iter()
        .enumerate()
        .map(|(i, &s)| s * (0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / denom).cos()))
        .collect();
    Ok(Frame {
        samples,
        start_index: f.start_index,
    })
}

/// Biased, unnormalized autocorrelation `r[k] = sum_n x[n] x[n+k]` for
/// `k = 0..=max_lag`. Requires `max_lag < frame length`.
pub fn autocorrelate(f: &Frame, max_lag: usize) -> Result<AutocorrSequence> {
    let x = f.samples();
    if max_lag >= x.len() {
        return Err(Error::InvalidParameter(format!(
            "max_lag {max_lag} must be smaller than frame length {}",
            x.len()
        )));
    }
    let mut values = Vec::with_capacity(max_lag + 1);
    for k in 0..=max_lag {
        let mut acc = 0.0;
        for n in 0..x.len() - k {
            acc += x[n] * x[n + k];
        }
        values.push(acc);
    }
    AutocorrSequence::new(values)
}

// ---------------------------------------------------------------------------
// WAV I/O (PCM 16-bit signed LE mono only)
// ---------------------------------------------------------------------------

fn sample_to_i16(s: f64) -> i16 {
    let scaled = (s * PCM16_SCALE).round();
    scaled.clamp(f64::from(i16::MIN), f64::from(i16::MAX)) as i16
}

/// Reads a WAV file, accepting only PCM 16-bit signed little-endian mono.
/// Samples are normalized by 32768 into [-1, 1). Unknown chunks are skipped;
/// unsupported encodings are rejected with the reason.
pub fn read_wav(path: &Path) -> Result<Waveform> {
    let bytes = fsutil::read_bytes(path)?;
    parse_wav(&bytes)
}

fn parse_wav(bytes: &[u8]) -> Result<Waveform> {
    let malformed = |msg: &str| Error::MalformedWav(msg.to_string());
    if bytes.len() < 12 {
        return Err(malformed("file shorter than the 12-byte RIFF header"));
    }
    if &bytes[0..4] != b"RIFF" {
        return Err(malformed("missing RIFF magic"));
    }
    if &bytes[8..12] != b"WAVE" {
        return Err(malformed("RIFF form type is not WAVE"));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None; // (format, channels, rate, bits)
    let mut data: Option<&[u8]> = None;
    let mut pos = 12usize;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap()) as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .ok_or_else(|| malformed("chunk size overflows"))?;
        if body_end > bytes.len() {
            return Err(malformed("chunk extends past end of file"));
        }
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(malformed("fmt chunk shorter than 16 bytes"));
                }
                let format = u16::from_le_bytes(body[0..2].try_into().unwrap());
                let channels = u16::from_le_bytes(body[2..4].try_into().unwrap());
                let rate = u32::from_le_bytes(body[4..8].try_into().unwrap());
                let bits = u16::from_le_bytes(body[14..16].try_into().unwrap());
                fmt = Some((format, channels, rate, bits));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        // chunks are word-aligned: odd sizes carry a pad byte
        pos = body_end + (size & 1);
    }

    let (format, channels, rate, bits) =
        fmt.ok_or_else(|| malformed("no fmt chunk present"))?;
    if format != 1 {
        let name = match format {
            3 => " (IEEE float)",
            6 => " (A-law)",
            7 => " (mu-law)",
            0xFFFE => " (extensible)",
            _ => "",
        };
        return Err(Error::UnsupportedWav(format!(
            "format tag {format}{name}; only PCM (tag 1) is supported"
        )));
    }
    if channels != 1 {
        return Err(Error::UnsupportedWav(format!(
            "{channels} channels; only mono is supported"
        )));
    }
    if bits != 16 {
        return Err(Error::UnsupportedWav(format!(
            "{bits}-bit samples; only 16-bit is supported"
        )));
    }
    if rate == 0 {
        return Err(malformed("sample rate is zero"));
    }
    let data = data.ok_or_else(|| malformed("no data chunk present"))?;
    if data.len() % 2 != 0 {
        return Err(malformed("data chunk has an odd byte count"));
    }
    if data.is_empty() {
        return Err(malformed("data chunk holds no samples"));
    }
    let samples = data
        .chunks_exact(2)
        .map(|b| f64::from(i16::from_le_bytes([b[0], b[1]])) / PCM16_SCALE)
        .collect();
    Waveform::new(samples, f64::from(rate))
}

/// Writes the waveform as PCM 16-bit signed little-endian mono, atomically.
/// Samples are scaled by 32768, rounded to the nearest integer step, and
/// clamped to the 16-bit range. The sample rate must be a whole number of Hz.
pub fn write_wav(path: &Path, w: &Waveform) -> Result<()> {
    let rate = w.sample_rate_hz();
    let rate_int = rate.round();
    if (rate - rate_int).abs() > 1e-6 || rate_int < 1.0 || rate_int > f64::from(u32::MAX) {
        return Err(Error::InvalidParameter(format!(
            "WAV sample rate must be a whole number of Hz in u32 range, got {rate}"
        )));
    }
    let rate_int = rate_int as u32;
    let data_len = w.len() * 2;
    let mut bytes = Vec::with_capacity(44 + data_len);
    bytes.extend_from_slice(b"RIFF");
    bytes.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    bytes.extend_from_slice(b"WAVE");
    bytes.extend_from_slice(b"fmt ");
    bytes.extend_from_slice(&16u32.to_le_bytes());
    bytes.extend_from_slice(&1u16.to_le_bytes()); // PCM
    bytes.extend_from_slice(&1u16.to_le_bytes()); // mono
    bytes.extend_from_slice(&rate_int.to_le_bytes());
    bytes.extend_from_slice(&(rate_int * 2).to_le_bytes()); // byte rate
    bytes.extend_from_slice(&2u16.to_le_bytes()); // block align
    bytes.extend_from_slice(&16u16.to_le_bytes()); // bits per sample
    bytes.extend_from_slice(b"data");
    bytes.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in w.samples() {
        bytes.extend_from_slice(&sample_to_i16(s).to_le_bytes());
    }
    fsutil::write_atomic(path, &bytes)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
