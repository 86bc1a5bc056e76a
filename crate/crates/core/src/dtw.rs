//! Dynamic time warping over feature sequences, and the matching
//! minimum-distance template identifier.
//!
//! The alignment uses the symmetric unit-step set {(1,0), (0,1), (1,1)} with
//! Euclidean local distances; both endpoints are anchored. An optional
//! Sakoe-Chiba band `|i - j| <= radius` bounds the warp, and the cumulative
//! distance can be normalized by the summed sequence lengths so templates of
//! different durations compare fairly.

use std::collections::BTreeMap;

use crate::cepstra::FeatureSequence;
use crate::{Error, Result};

/// Step pattern of the alignment lattice. Only the symmetric unit-step set
/// is defined; the variant exists so configurations are self-describing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub enum StepPattern {
    /// Steps {(1,0), (0,1), (1,1)}, all with weight 1.
    #[default]
    Symmetric1,
}

/// Alignment options.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DtwConfig {
    pub step_pattern: StepPattern,
    /// Sakoe-Chiba band half-width; `None` disables the band.
    pub band_radius: Option<usize>,
    /// Divide the cumulative distance by `len_a + len_b`.
    pub normalize: bool,
}

impl Default for DtwConfig {
    fn default() -> Self {
        DtwConfig {
            step_pattern: StepPattern::Symmetric1,
            band_radius: None,
            normalize: true,
        }
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// DTW distance between two sequences of equal feature dimension.
///
/// With a band, the radius must be at least `|len_a - len_b|`, otherwise the
/// end cell is unreachable and the call fails with `InfeasibleBand`.
pub fn dtw_distance(a: &FeatureSequence, b: &FeatureSequence, cfg: &DtwConfig) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let n = a.len();
    let m = b.len();
    if let Some(radius) = cfg.band_radius {
        let min = n.abs_diff(m);
        if radius < min {
            return Err(Error::InfeasibleBand {
                radius,
                len_a: n,
                len_b: m,
                min,
            });
        }
    }
    let in_band = |i: usize, j: usize| match cfg.band_radius {
        Some(r) => i.abs_diff(j) <= r,
        None => true,
    };

    let StepPattern::Symmetric1 = cfg.step_pattern;
    // rolling two-row DP over the cumulative-distance lattice
    let mut prev = vec![f64::INFINITY; m];
    let mut curr = vec![f64::INFINITY; m];
    for i in 0..n {
        for j in 0..m {
            curr[j] = f64::INFINITY;
            if !in_band(i, j) {
                continue;
            }
            let local = euclidean(a.frames()[i].values(), b.frames()[j].values());
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let mut best = f64::INFINITY;
                if i > 0 {
                    best = best.min(prev[j]); // (1,0)
                    if j > 0 {
                        best = best.min(prev[j - 1]); // (1,1)
                    }
                }
                if j > 0 {
                    best = best.min(curr[j - 1]); // (0,1)
                }
                best
            };
            curr[j] = best + local;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    let total = prev[m - 1];
    debug_assert!(total.is_finite(), "feasible band must reach the end cell");
    Ok(if cfg.normalize {
        total / (n + m) as f64
    } else {
        total
    })
}

/// Scores `test` against every template of every speaker and returns the
/// speaker with the smallest DTW distance, together with that distance.
/// Ties break toward the lexicographically smallest speaker id.
pub fn dtw_identify(
    test: &FeatureSequence,
    templates: &BTreeMap<String, Vec<FeatureSequence>>,
    cfg: &DtwConfig,
) -> Result<(String, f64)> {
    let mut best: Option<(&str, f64)> = None;
    for (speaker, seqs) in templates {
        for template in seqs {
            let d = dtw_distance(test, template, cfg)?;
            // strict < keeps the earliest (lexicographically smallest) id on ties
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((speaker, d));
            }
        }
    }
    best.map(|(s, d)| (s.to_string(), d))
        .ok_or(Error::NoCandidates)
}
