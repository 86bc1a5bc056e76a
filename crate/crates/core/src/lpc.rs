//! All-pole vocal-tract model and the conversions between its
//! parameterizations.
//!
//! The transfer function is `H(z) = K / A(z)` with
//! `A(z) = 1 + a1 z^-1 + ... + ap z^-p`. Note the **plus** signs: the
//! predictor coefficients here are the negatives of the textbook convention
//! `A(z) = 1 - sum a_i z^-i`, and every recursion below is written for the
//! plus form. Three equivalent parameterizations are supported:
//!
//! - predictor coefficients `a_i` (with a gain `K`),
//! - lattice reflection coefficients `k_i`, `|k_i| < 1`,
//! - lossless-tube section areas `A_1..A_{p+1}`, glottis to lips, related by
//!   `k_i = (A_i - A_{i+1}) / (A_i + A_{i+1})`.
//!
//! `levinson_durbin` estimates the model from autocorrelation;
//! `reflection_to_predictor` / `predictor_to_reflection` are the step-up and
//! step-down recursions linking the first two forms.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fsutil;
use crate::signals::AutocorrSequence;
use crate::{Error, Result};

/// Default model order for 8 kHz analysis (rule of thumb: f_s/1000,
/// rounded to even).
pub const DEFAULT_LPC_ORDER: usize = 8;

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Denominator coefficients and gain of the all-pole model
/// `H(z) = gain / (1 + coeffs[0] z^-1 + ... + coeffs[p-1] z^-p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorPolynomial {
    gain: f64,
    coeffs: Vec<f64>,
}

impl PredictorPolynomial {
    pub fn new(gain: f64, coeffs: Vec<f64>) -> Result<Self> {
        if !(gain > 0.0) || !gain.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "predictor gain must be positive and finite, got {gain}"
            )));
        }
        if coeffs.is_empty() {
            return Err(Error::InvalidParameter(
                "predictor order must be >= 1".into(),
            ));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "non-finite predictor coefficient".into(),
            ));
        }
        Ok(PredictorPolynomial { gain, coeffs })
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    /// The coefficients `a_1..a_p` (the leading 1 of `A(z)` is implicit).
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    /// `[1, a_1, ..., a_p]`: `A(z)` cleared of negative powers, i.e. the
    /// monic polynomial `z^p A(z)` in descending powers of `z`.
    pub fn monic_coeffs(&self) -> Vec<f64> {
        let mut m = Vec::with_capacity(self.coeffs.len() + 1);
        m.push(1.0);
        m.extend_from_slice(&self.coeffs);
        m
    }

    /// Evaluates `A(z) = 1 + sum_i a_i z^-i` at a point on or off the unit
    /// circle.
    pub fn a_at(&self, z: Complex64) -> Complex64 {
        let zinv = Complex64::new(1.0, 0.0) / z;
        let mut acc = Complex64::new(0.0, 0.0);
        // Horner in z^-1: a_p, a_p z^-1 + a_{p-1}, ...
        for &c in self.coeffs.iter().rev() {
            acc = (acc + c) * zinv;
        }
        acc + 1.0
    }

    pub fn with_gain(&self, gain: f64) -> Result<Self> {
        PredictorPolynomial::new(gain, self.coeffs.clone())
    }
}

/// Lattice reflection coefficients `k_1..k_p`, each strictly inside (-1, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionCoeffs {
    values: Vec<f64>,
}

impl ReflectionCoeffs {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter(
                "reflection sequence must be non-empty".into(),
            ));
        }
        for (i, &k) in values.iter().enumerate() {
            if !k.is_finite() || k.abs() >= 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "reflection coefficient k[{}] = {k} outside (-1, 1)",
                    i + 1
                )));
            }
        }
        Ok(ReflectionCoeffs { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn order(&self) -> usize {
        self.values.len()
    }
}

/// Cross-sectional areas of the lossless-tube model, glottis first,
/// `p + 1` sections for a model of order `p`. Units are nominal cm^2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct AreaFunction {
    areas: Vec<f64>,
}

impl AreaFunction {
    pub fn new(areas: Vec<f64>) -> Result<Self> {
        if areas.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "area function needs at least 2 sections, got {}",
                areas.len()
            )));
        }
        for (i, &a) in areas.iter().enumerate() {
            if !a.is_finite() || a <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "section area A[{}] = {a} must be positive and finite",
                    i + 1
                )));
            }
        }
        Ok(AreaFunction { areas })
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn sections(&self) -> usize {
        self.areas.len()
    }
}

impl TryFrom<Vec<f64>> for AreaFunction {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        AreaFunction::new(v)
    }
}

impl From<AreaFunction> for Vec<f64> {
    fn from(a: AreaFunction) -> Vec<f64> {
        a.areas
    }
}

/// Everything `levinson_durbin` extracts from one autocorrelation sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct LpcAnalysis {
    pub polynomial: PredictorPolynomial,
    /// Final prediction-error energy `r[0] * prod(1 - k_i^2)`.
    pub residual_energy: f64,
    pub reflection: ReflectionCoeffs,
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Solves the autocorrelation normal equations by the Levinson-Durbin
/// recursion.
///
/// Returns the predictor (gain set to `sqrt(residual_energy)` so `|H|`
/// matches the frame's spectral level), the residual energy, and the
/// reflection coefficients of each stage. Degenerate input (perfectly
/// predictable, so some `|k| >= 1`) is reported with the failing stage.
pub fn levinson_durbin(r: &AutocorrSequence) -> Result<LpcAnalysis> {
    let rv = r.values();
    let p = r.order();
    if p < 1 {
        return Err(Error::InvalidParameter(
            "levinson_durbin needs order >= 1 (at least r[0] and r[1])".into(),
        ));
    }
    if !(rv[0] > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "zero-lag autocorrelation must be positive, got {}",
            rv[0]
        )));
    }

    // a[0..=m] holds the stage-m polynomial with a[0] = 1.
    let mut a = vec![0.0; p + 1];
    a[0] = 1.0;
    let mut energy = rv[0];
    let mut ks = Vec::with_capacity(p);

    for m in 1..=p {
        let mut acc = rv[m];
        for i in 1..m {
            acc += a[i] * rv[m - i];
        }
        let k = -acc / energy;
        if !k.is_finite() || k.abs() >= 1.0 {
            return Err(Error::SingularRecursion {
                stage: m,
                magnitude: k.abs(),
            });
        }
        // symmetric in-place update: a[i] and a[m-i] feed each other
        let prev = a[..m].to_vec();
        for i in 1..m {
            a[i] = prev[i] + k * prev[m - i];
        }
        a[m] = k;
        ks.push(k);
        energy *= 1.0 - k * k;
        if !(energy > 0.0) {
            return Err(Error::SingularRecursion {
                stage: m,
                magnitude: k.abs(),
            });
        }
    }

    Ok(LpcAnalysis {
        polynomial: PredictorPolynomial::new(energy.sqrt(), a[1..=p].to_vec())?,
        residual_energy: energy,
        reflection: ReflectionCoeffs::new(ks)?,
    })
}

/// Maps tube areas to reflection coefficients:
/// `k_i = (A_i - A_{i+1}) / (A_i + A_{i+1})`.
///
/// Positivity of the areas guarantees `|k_i| < 1`, so this cannot fail.
pub fn area_to_reflection(a: &AreaFunction) -> ReflectionCoeffs {
    let areas = a.areas();
    let values = areas
        .windows(2)
        .map(|w| (w[0] - w[1]) / (w[0] + w[1]))
        .collect();
    ReflectionCoeffs::new(values).expect("positive areas always give |k| < 1")
}

/// Step-up recursion: builds the order-p predictor from reflection
/// coefficients. `|k_i| < 1` (guaranteed by the type) makes the result
/// minimum-phase. `gain` is typically 1 for tube-derived models.
pub fn reflection_to_predictor(k: &ReflectionCoeffs, gain: f64) -> Result<PredictorPolynomial> {
    let mut a: Vec<f64> = vec![1.0];
    for (m, &km) in k.values().iter().enumerate() {
        // entering stage m+1; a currently holds [1, a_1..a_m]
        let mut next = a.clone();
        next.push(km);
        for i in 1..=m {
            next[i] = a[i] + km * a[m + 1 - i];
        }
        a = next;
    }
    PredictorPolynomial::new(gain, a[1..].to_vec())
}

/// Step-down recursion: recovers reflection coefficients from a predictor.
/// Fails with the offending stage if the polynomial is not minimum-phase.
pub fn predictor_to_reflection(p: &PredictorPolynomial) -> Result<ReflectionCoeffs> {
    let order = p.order();
    let mut a = p.monic_coeffs();
    let mut ks = vec![0.0; order];
    for m in (1..=order).rev() {
        let km = a[m];
        if !km.is_finite() || km.abs() >= 1.0 {
            return Err(Error::NotMinimumPhase {
                stage: m,
                magnitude: km.abs(),
            });
        }
        ks[m - 1] = km;
        let denom = 1.0 - km * km;
        let prev = a[..m].to_vec();
        for i in 1..m {
            a[i] = (prev[i] - km * prev[m - i]) / denom;
        }
    }
    ReflectionCoeffs::new(ks)
}

/// Magnitude response `gain / |A(e^{j w})|` in dB at `n_points` uniform
/// frequencies spanning `[0, f_s/2]` inclusive.
pub fn frequency_response(
    p: &PredictorPolynomial,
    n_points: usize,
    sample_rate_hz: f64,
) -> Result<Vec<(f64, f64)>> {
    if n_points < 2 {
        return Err(Error::InvalidParameter(format!(
            "frequency response needs n_points >= 2, got {n_points}"
        )));
    }
    if !(sample_rate_hz > 0.0) || !sample_rate_hz.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sample rate must be positive and finite, got {sample_rate_hz}"
        )));
    }
    let nyquist = sample_rate_hz / 2.0;
    let mut out = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let freq = nyquist * i as f64 / (n_points - 1) as f64;
        let omega = 2.0 * std::f64::consts::PI * freq / sample_rate_hz;
        let z = Complex64::new(0.0, omega).exp();
        let mag = p.gain() / p.a_at(z).norm();
        out.push((freq, 20.0 * mag.log10()));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Area-file parsing
// ---------------------------------------------------------------------------

/// Parses the plain-text area format: one positive decimal per line,
/// glottis first; blank lines and `#` comment lines are ignored.
pub fn parse_area_text(text: &str) -> Result<AreaFunction> {
    let mut areas = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let value: f64 = line.parse().map_err(|_| {
            Error::MalformedAreaFile(format!("line {}: expected a number, got {line:?}", lineno + 1))
        })?;
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::MalformedAreaFile(format!(
                "line {}: area must be positive and finite, got {value}",
                lineno + 1
            )));
        }
        areas.push(value);
    }
    if areas.len() < 2 {
        return Err(Error::MalformedAreaFile(format!(
            "need at least 2 sections, found {}",
            areas.len()
        )));
    }
    AreaFunction::new(areas)
}

/// Reads an area function from a file in the [`parse_area_text`] format.
pub fn read_area_file(path: &Path) -> Result<AreaFunction> {
    parse_area_text(&fsutil::read_text(path)?)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
