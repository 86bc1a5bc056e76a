//! LPC-cepstral features.
//!
//! `lpc_to_cepstrum` converts a stable predictor into the cepstrum of its
//! minimum-phase transfer function `1/A(z)` by the standard recursion; the
//! gain-bearing `c0` is excluded by construction, so features are invariant
//! to loudness. A [`FeatureSequence`] is the time-ordered stack of such
//! vectors for one utterance and is the input domain of both recognizers.

use serde::{Deserialize, Serialize};

use crate::lpc::{predictor_to_reflection, PredictorPolynomial};
use crate::{fsutil, Error, Result};

/// Default cepstral dimension.
pub const DEFAULT_CEPSTRAL_DIM: usize = 12;

/// Cepstral coefficients `c_1..c_Q` (quefrency-ordered, `c_0` excluded).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CepstralVector {
    values: Vec<f64>,
}

impl CepstralVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter(
                "cepstral vector must be non-empty".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "non-finite cepstral coefficient".into(),
            ));
        }
        Ok(CepstralVector { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

impl TryFrom<Vec<f64>> for CepstralVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        CepstralVector::new(v)
    }
}

impl From<CepstralVector> for Vec<f64> {
    fn from(c: CepstralVector) -> Vec<f64> {
        c.values
    }
}

/// Time-ordered cepstral vectors of one utterance. All frames share one
/// dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<CepstralVector>", into = "Vec<CepstralVector>")]
pub struct FeatureSequence {
    frames: Vec<CepstralVector>,
}

impl FeatureSequence {
    pub fn new(frames: Vec<CepstralVector>) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::InvalidParameter(
                "feature sequence must contain at least one frame".into(),
            ));
        }
        let dim = frames[0].dim();
        for f in &frames {
            if f.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: f.dim(),
                });
            }
        }
        Ok(FeatureSequence { frames })
    }

    pub fn frames(&self) -> &[CepstralVector] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.frames[0].dim()
    }

    /// CSV rendering, one frame per row, coefficients comma-separated.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for frame in &self.frames {
            let row: Vec<String> = frame.values().iter().map(|v| v.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        fsutil::write_atomic(path, self.to_csv().as_bytes())
    }
}

impl TryFrom<Vec<CepstralVector>> for FeatureSequence {
    type Error = Error;
    fn try_from(v: Vec<CepstralVector>) -> Result<Self> {
        FeatureSequence::new(v)
    }
}

impl From<FeatureSequence> for Vec<CepstralVector> {
    fn from(s: FeatureSequence) -> Vec<CepstralVector> {
        s.frames
    }
}

/// Cepstrum of `1/A(z)` for a stable predictor, coefficients `c_1..c_Q`.
///
/// With `A(z) = 1 + sum a_i z^-i`:
///
/// ```text
/// c_1 = -a_1
/// c_n = -a_n - sum_{k=1}^{n-1} (k/n) c_k a_{n-k}     (n <= p)
/// c_n =       - sum_{k=n-p}^{n-1} (k/n) c_k a_{n-k}  (n > p)
/// ```
///
/// Stability is checked first (step-down recursion); the cepstrum of a
/// non-minimum-phase model is out of contract.
pub fn lpc_to_cepstrum(poly: &PredictorPolynomial, q: usize) -> Result<CepstralVector> {
    if q < 1 {
        return Err(Error::InvalidParameter("cepstral dimension Q >= 1".into()));
    }
    if let Err(e) = predictor_to_reflection(poly) {
        return Err(match e {
            Error::NotMinimumPhase { stage, magnitude } => Error::UnstablePolynomial(format!(
                "step-down stage {stage} gives |k| = {magnitude:.6} >= 1"
            )),
            other => other,
        });
    }
    let a = poly.coeffs();
    let p = a.len();
    let mut c = Vec::with_capacity(q);
    for n in 1..=q {
        let mut acc = if n <= p { -a[n - 1] } else { 0.0 };
        let k_lo = n.saturating_sub(p).max(1);
        for k in k_lo..n {
            acc -= (k as f64 / n as f64) * c[k - 1] * a[n - k - 1];
        }
        c.push(acc);
    }
    CepstralVector::new(c)
}
