//! Discrete-observation hidden Markov model recognizer with a
//! vector-quantization front end.
//!
//! The front end is an LBG-style splitting k-means codebook: start from the
//! global mean, repeatedly keep each centroid and add a perturbed copy, then
//! run Lloyd iterations; empty cells are re-seeded on the worst-quantized
//! point. Because splits only ever *add* centroids, total distortion is
//! non-increasing across stages as well as across Lloyd iterations.
//!
//! Scoring uses the scaled forward recursion (per-step normalization, log
//! accumulation), which matches exhaustive path summation exactly up to
//! rounding. Training is Baum-Welch; the emission M-step maximizes the
//! EM objective *subject to* the configured probability floor (an exact
//! water-filling projection), so the per-iteration log-likelihood keeps the
//! textbook monotonicity guarantee even when flooring engages.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cepstra::{CepstralVector, FeatureSequence};
use crate::{Error, Result};

/// Default codebook size.
pub const DEFAULT_CODEBOOK_SIZE: usize = 32;
/// Default number of HMM states.
pub const DEFAULT_NUM_STATES: usize = 5;
/// Default emission-probability floor.
pub const DEFAULT_EMISSION_FLOOR: f64 = 1e-6;

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Vector-quantization codebook over cepstral space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Codebook {
    centroids: Vec<Vec<f64>>,
}

impl Codebook {
    pub fn new(centroids: Vec<Vec<f64>>) -> Result<Self> {
        if centroids.is_empty() {
            return Err(Error::InvalidParameter(
                "codebook needs at least one centroid".into(),
            ));
        }
        let dim = centroids[0].len();
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "codebook centroids must be non-empty vectors".into(),
            ));
        }
        for c in &centroids {
            if c.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: c.len(),
                });
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(
                    "non-finite centroid component".into(),
                ));
            }
        }
        for i in 0..centroids.len() {
            for j in i + 1..centroids.len() {
                if centroids[i] == centroids[j] {
                    return Err(Error::InvalidParameter(format!(
                        "duplicate centroids at indices {i} and {j}"
                    )));
                }
            }
        }
        Ok(Codebook { centroids })
    }

    pub fn centroids(&self) -> &[Vec<f64>] {
        &self.centroids
    }

    pub fn len(&self) -> usize {
        self.centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.centroids[0].len()
    }
}

impl TryFrom<Vec<Vec<f64>>> for Codebook {
    type Error = Error;
    fn try_from(v: Vec<Vec<f64>>) -> Result<Self> {
        Codebook::new(v)
    }
}

impl From<Codebook> for Vec<Vec<f64>> {
    fn from(c: Codebook) -> Vec<Vec<f64>> {
        c.centroids
    }
}

/// Quantized observation symbols, each in `[0, M)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct ObservationSequence {
    symbols: Vec<usize>,
}

impl ObservationSequence {
    pub fn new(symbols: Vec<usize>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::InvalidParameter(
                "observation sequence must be non-empty".into(),
            ));
        }
        Ok(ObservationSequence { symbols })
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

impl TryFrom<Vec<usize>> for ObservationSequence {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        ObservationSequence::new(v)
    }
}

impl From<ObservationSequence> for Vec<usize> {
    fn from(o: ObservationSequence) -> Vec<usize> {
        o.symbols
    }
}

/// Raw serialized form of a model, validated on load.
#[derive(Serialize, Deserialize)]
struct HmmModelRaw {
    initial: Vec<f64>,
    transition: Vec<Vec<f64>>,
    emission: Vec<Vec<f64>>,
}

/// A discrete HMM: initial distribution, transition matrix, emission matrix.
/// All rows are stochastic (validated to 1e-9 on construction).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HmmModelRaw", into = "HmmModelRaw")]
pub struct HmmModel {
    initial: Vec<f64>,
    transition: Vec<Vec<f64>>,
    emission: Vec<Vec<f64>>,
}

fn check_stochastic_row(row: &[f64], what: &str) -> Result<()> {
    if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidModel(format!(
            "{what} has a negative or non-finite entry"
        )));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidModel(format!("{what} sums to {sum}, not 1")));
    }
    Ok(())
}

impl HmmModel {
    pub fn new(
        initial: Vec<f64>,
        transition: Vec<Vec<f64>>,
        emission: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = initial.len();
        if n == 0 {
            return Err(Error::InvalidModel("zero states".into()));
        }
        if transition.len() != n || transition.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidModel(format!(
                "transition matrix must be {n}x{n}"
            )));
        }
        if emission.len() != n {
            return Err(Error::InvalidModel(format!(
                "emission matrix must have {n} rows"
            )));
        }
        let m = emission[0].len();
        if m == 0 || emission.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidModel(
                "emission rows must share one positive symbol count".into(),
            ));
        }
        check_stochastic_row(&initial, "initial distribution")?;
        for (i, row) in transition.iter().enumerate() {
            check_stochastic_row(row, &format!("transition row {i}"))?;
        }
        for (i, row) in emission.iter().enumerate() {
            check_stochastic_row(row, &format!("emission row {i}"))?;
        }
        Ok(HmmModel {
            initial,
            transition,
            emission,
        })
    }

    pub fn num_states(&self) -> usize {
        self.initial.len()
    }

    pub fn num_symbols(&self) -> usize {
        self.emission[0].len()
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn emission(&self) -> &[Vec<f64>] {
        &self.emission
    }
}

impl TryFrom<HmmModelRaw> for HmmModel {
    type Error = Error;
    fn try_from(r: HmmModelRaw) -> Result<Self> {
        HmmModel::new(r.initial, r.transition, r.emission)
    }
}

impl From<HmmModel> for HmmModelRaw {
    fn from(m: HmmModel) -> HmmModelRaw {
        HmmModelRaw {
            initial: m.initial,
            transition: m.transition,
            emission: m.emission,
        }
    }
}

/// Chain topology used for Baum-Welch initialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// All transitions allowed.
    Ergodic,
    /// States ordered left to right; each state may stay or advance one.
    #[default]
    LeftToRight,
}

/// Baum-Welch training configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub num_states: usize,
    pub num_symbols: usize,
    pub iterations: usize,
    pub topology: Topology,
    /// Emission probabilities are kept at or above this floor by an exact
    /// constrained M-step, preventing zero-probability lockout.
    pub emission_floor: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            num_states: DEFAULT_NUM_STATES,
            num_symbols: DEFAULT_CODEBOOK_SIZE,
            iterations: 20,
            topology: Topology::LeftToRight,
            emission_floor: DEFAULT_EMISSION_FLOOR,
        }
    }
}

/// A trained model together with the log-likelihood of the training set
/// evaluated at the *start* of each iteration (length = `iterations`).
#[derive(Debug, Clone)]
pub struct TrainedHmm {
    pub model: HmmModel,
    pub log_likelihood_trace: Vec<f64>,
}

// ---------------------------------------------------------------------------
// Codebook training and quantization
// ---------------------------------------------------------------------------

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest_centroid(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0usize, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist(point, c);
        // strict < keeps the lowest index on exact ties
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Total squared quantization error of `points` under `centroids`.
fn distortion(points: &[&[f64]], centroids: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .map(|p| nearest_centroid(p, centroids).1)
        .sum()
}

/// Lloyd iterations to convergence, with empty cells re-seeded on the point
/// that is currently worst quantized.
fn lloyd(points: &[&[f64]], centroids: &mut [Vec<f64>]) {
    const MAX_ITERS: usize = 300;
    let dim = points[0].len();
    let mut last = f64::INFINITY;
    for _ in 0..MAX_ITERS {
        let assignment: Vec<usize> = points
            .iter()
            .map(|p| nearest_centroid(p, centroids).0)
            .collect();
        let mut sums = vec![vec![0.0; dim]; centroids.len()];
        let mut counts = vec![0usize; centroids.len()];
        for (p, &a) in points.iter().zip(&assignment) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(*p) {
                *s += v;
            }
        }
        let mut had_empty = false;
        for i in 0..centroids.len() {
            if counts[i] > 0 {
                for (c, s) in centroids[i].iter_mut().zip(&sums[i]) {
                    *c = s / counts[i] as f64;
                }
            } else {
                // relocate onto the worst-quantized point
                had_empty = true;
                let worst = points
                    .iter()
                    .enumerate()
                    .max_by(|(_, a), (_, b)| {
                        nearest_centroid(a, centroids)
                            .1
                            .total_cmp(&nearest_centroid(b, centroids).1)
                    })
                    .map(|(idx, _)| idx)
                    .unwrap();
                centroids[i] = points[worst].to_vec();
            }
        }
        let d = distortion(points, centroids);
        if !had_empty && d >= last - 1e-12 * (1.0 + last) {
            break;
        }
        last = d;
    }
}

/// Trains an `m`-entry codebook by LBG splitting.
///
/// Deterministic for a given RNG seed; fails if the data holds fewer than
/// `m` distinct vectors.
pub fn train_codebook<R: Rng>(
    features: &[CepstralVector],
    m: usize,
    rng: &mut R,
) -> Result<Codebook> {
    if m == 0 {
        return Err(Error::InvalidParameter("codebook size must be >= 1".into()));
    }
    if features.is_empty() {
        return Err(Error::TooFewDistinctVectors { needed: m, got: 0 });
    }
    let dim = features[0].dim();
    if features.iter().any(|f| f.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: features.iter().find(|f| f.dim() != dim).unwrap().dim(),
        });
    }
    let points: Vec<&[f64]> = features.iter().map(|f| f.values()).collect();

    let mut distinct: Vec<&[f64]> = points.clone();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    if distinct.len() < m {
        return Err(Error::TooFewDistinctVectors {
            needed: m,
            got: distinct.len(),
        });
    }
    if distinct.len() == m {
        // each distinct vector its own centroid: the zero-distortion optimum
        return Codebook::new(distinct.into_iter().map(|p| p.to_vec()).collect());
    }

    // per-dimension spread controls the split perturbation scale
    let mut mean = vec![0.0; dim];
    for p in &points {
        for (m, v) in mean.iter_mut().zip(*p) {
            *m += v;
        }
    }
    for v in &mut mean {
        *v /= points.len() as f64;
    }
    let mut std = vec![0.0; dim];
    for p in &points {
        for ((s, v), mu) in std.iter_mut().zip(*p).zip(&mean) {
            *s += (v - mu) * (v - mu);
        }
    }
    for s in &mut std {
        *s = (*s / points.len() as f64).sqrt().max(1e-9);
    }

    let mut centroids = vec![mean];
    lloyd(&points, &mut centroids);
    while centroids.len() < m {
        let want = (centroids.len() * 2).min(m);
        let split_count = want - centroids.len();
        // split the highest-distortion cells first
        let mut cell_cost = vec![0.0f64; centroids.len()];
        for p in &points {
            let (a, d) = nearest_centroid(p, &centroids);
            cell_cost[a] += d;
        }
        let mut order: Vec<usize> = (0..centroids.len()).collect();
        order.sort_by(|&a, &b| cell_cost[b].total_cmp(&cell_cost[a]).then(a.cmp(&b)));
        for &cell in order.iter().take(split_count) {
            // parent stays; child is a deterministic-given-seed nudge away
            let child: Vec<f64> = centroids[cell]
                .iter()
                .zip(&std)
                .map(|(c, s)| {
                    let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                    c + sign * 0.02 * s
                })
                .collect();
            centroids.push(child);
        }
        lloyd(&points, &mut centroids);
    }
    Codebook::new(centroids)
}

/// Maps each frame to its nearest centroid (Euclidean); exact ties go to the
/// lowest index.
pub fn quantize(seq: &FeatureSequence, cb: &Codebook) -> Result<ObservationSequence> {
    if seq.dim() != cb.dim() {
        return Err(Error::DimensionMismatch {
            expected: cb.dim(),
            got: seq.dim(),
        });
    }
    ObservationSequence::new(
        seq.frames()
            .iter()
            .map(|f| nearest_centroid(f.values(), cb.centroids()).0)
            .collect(),
    )
}

// ---------------------------------------------------------------------------
// Forward scoring
// ---------------------------------------------------------------------------

/// `log P(obs | model)` by the scaled forward algorithm.
///
/// Returns `-inf` (a sentinel, not an error) when the observation has zero
/// probability under the model; symbols outside the model's alphabet are an
/// error.
pub fn forward_log_likelihood(model: &HmmModel, obs: &ObservationSequence) -> Result<f64> {
    let n = model.num_states();
    let m = model.num_symbols();
    for &s in obs.symbols() {
        if s >= m {
            return Err(Error::SymbolOutOfRange {
                symbol: s,
                num_symbols: m,
            });
        }
    }
    let symbols = obs.symbols();
    let mut alpha: Vec<f64> = (0..n)
        .map(|i| model.initial[i] * model.emission[i][symbols[0]])
        .collect();
    let mut log_p = 0.0;
    let scale: f64 = alpha.iter().sum();
    if scale <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    alpha.iter_mut().for_each(|a| *a /= scale);
    log_p += scale.ln();

    for &o in &symbols[1..] {
        let mut next = vec![0.0; n];
        for (j, nj) in next.iter_mut().enumerate() {
            let acc: f64 = alpha
                .iter()
                .zip(&model.transition)
                .map(|(a, row)| a * row[j])
                .sum();
            *nj = acc * model.emission[j][o];
        }
        let scale: f64 = next.iter().sum();
        if scale <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        next.iter_mut().for_each(|a| *a /= scale);
        log_p += scale.ln();
        alpha = next;
    }
    Ok(log_p)
}

// ---------------------------------------------------------------------------
// Baum-Welch training
// ---------------------------------------------------------------------------

/// Projects nonnegative weights onto the floored simplex: maximizes
/// `sum_k w_k ln b_k` subject to `b_k >= floor`, `sum b = 1`.
/// Water-filling: `b_k = max(floor, w_k / lambda)` with `lambda` fixed by
/// feasibility; converges in at most `len` passes.
fn floored_row_from_weights(weights: &[f64], floor: f64, out: &mut [f64]) {
    let m = weights.len();
    let total: f64 = weights.iter().sum();
    debug_assert!(total > 0.0);
    debug_assert!(floor * m as f64 <= 1.0);
    let mut floored = vec![false; m];
    loop {
        let floored_count = floored.iter().filter(|&&f| f).count();
        let free_mass: f64 = 1.0 - floor * floored_count as f64;
        let free_weight: f64 = weights
            .iter()
            .zip(&floored)
            .filter(|(_, &f)| !f)
            .map(|(w, _)| w)
            .sum();
        let mut changed = false;
        for k in 0..m {
            if !floored[k] && weights[k] * free_mass < floor * free_weight {
                floored[k] = true;
                changed = true;
            }
        }
        if !changed {
            for k in 0..m {
                out[k] = if floored[k] {
                    floor
                } else {
                    weights[k] * free_mass / free_weight
                };
            }
            return;
        }
    }
}

fn random_stochastic_row<R: Rng>(len: usize, rng: &mut R) -> Vec<f64> {
    let mut row: Vec<f64> = (0..len).map(|_| rng.gen_range(0.5..1.5)).collect();
    let sum: f64 = row.iter().sum();
    row.iter_mut().for_each(|v| *v /= sum);
    row
}

fn initial_model<R: Rng>(cfg: &TrainConfig, rng: &mut R) -> HmmModel {
    let n = cfg.num_states;
    let m = cfg.num_symbols;
    let (initial, transition) = match cfg.topology {
        Topology::Ergodic => {
            let pi = random_stochastic_row(n, rng);
            let a = (0..n).map(|_| random_stochastic_row(n, rng)).collect();
            (pi, a)
        }
        Topology::LeftToRight => {
            let mut pi = vec![0.0; n];
            pi[0] = 1.0;
            let a = (0..n)
                .map(|i| {
                    let mut row = vec![0.0; n];
                    if i + 1 < n {
                        let stay = rng.gen_range(0.5..1.5);
                        let advance = rng.gen_range(0.5..1.5);
                        row[i] = stay / (stay + advance);
                        row[i + 1] = advance / (stay + advance);
                    } else {
                        row[i] = 1.0;
                    }
                    row
                })
                .collect();
            (pi, a)
        }
    };
    // emission rows: random, then projected onto the floored simplex so the
    // starting point already satisfies the constraint set
    let emission = (0..n)
        .map(|_| {
            let raw = random_stochastic_row(m, rng);
            let mut row = vec![0.0; m];
            floored_row_from_weights(&raw, cfg.emission_floor, &mut row);
            row
        })
        .collect();
    HmmModel::new(initial, transition, emission).expect("construction is stochastic")
}

/// Baum-Welch EM over one or more observation sequences.
///
/// The returned trace holds the training-set log-likelihood at the start of
/// each iteration; it is non-decreasing (up to ~1e-12 rounding) because every
/// M-step, including the floored emission update, is an exact maximizer over
/// the constrained parameter set. Rows of zero expected occupancy keep their
/// previous values. Deterministic given the RNG seed.
pub fn baum_welch_train<R: Rng>(
    sequences: &[ObservationSequence],
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<TrainedHmm> {
    if sequences.is_empty() {
        return Err(Error::InvalidParameter(
            "training needs at least one sequence".into(),
        ));
    }
    if cfg.num_states == 0 || cfg.num_symbols == 0 {
        return Err(Error::InvalidParameter(
            "num_states and num_symbols must be >= 1".into(),
        ));
    }
    if !(cfg.emission_floor >= 0.0) || cfg.emission_floor * cfg.num_symbols as f64 >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "emission floor {} infeasible for {} symbols",
            cfg.emission_floor, cfg.num_symbols
        )));
    }
    for seq in sequences {
        for &s in seq.symbols() {
            if s >= cfg.num_symbols {
                return Err(Error::SymbolOutOfRange {
                    symbol: s,
                    num_symbols: cfg.num_symbols,
                });
            }
        }
    }

    let n = cfg.num_states;
    let m = cfg.num_symbols;
    let mut model = initial_model(cfg, rng);
    let mut trace = Vec::with_capacity(cfg.iterations);

    for _ in 0..cfg.iterations {
        // accumulators over all sequences
        let mut pi_acc = vec![0.0; n];
        let mut a_num = vec![vec![0.0; n]; n];
        let mut a_den = vec![0.0; n];
        let mut b_num = vec![vec![0.0; m]; n];
        let mut b_den = vec![0.0; n];
        let mut log_likelihood = 0.0;

        for seq in sequences {
            let o = seq.symbols();
            let t_len = o.len();

            // scaled forward
            let mut alphas = vec![vec![0.0; n]; t_len];
            let mut scales = vec![0.0; t_len];
            for (a0, (pi, em)) in alphas[0]
                .iter_mut()
                .zip(model.initial.iter().zip(&model.emission))
            {
                *a0 = pi * em[o[0]];
            }
            scales[0] = alphas[0].iter().sum();
            if scales[0] <= 0.0 {
                return Err(Error::InvalidModel(
                    "zero-probability sequence during training".into(),
                ));
            }
            alphas[0].iter_mut().for_each(|a| *a /= scales[0]);
            for t in 1..t_len {
                let (done, rest) = alphas.split_at_mut(t);
                let prev = &done[t - 1];
                let cur = &mut rest[0];
                for (j, slot) in cur.iter_mut().enumerate() {
                    let acc: f64 = prev
                        .iter()
                        .zip(&model.transition)
                        .map(|(a, row)| a * row[j])
                        .sum();
                    *slot = acc * model.emission[j][o[t]];
                }
                scales[t] = cur.iter().sum();
                if scales[t] <= 0.0 {
                    return Err(Error::InvalidModel(
                        "zero-probability sequence during training".into(),
                    ));
                }
                let s = scales[t];
                cur.iter_mut().for_each(|a| *a /= s);
            }
            log_likelihood += scales.iter().map(|s| s.ln()).sum::<f64>();

            // scaled backward (same scales)
            let mut betas = vec![vec![0.0; n]; t_len];
            betas[t_len - 1].iter_mut().for_each(|b| *b = 1.0);
            for t in (0..t_len - 1).rev() {
                let (head, tail) = betas.split_at_mut(t + 1);
                let cur = &mut head[t];
                let next_row = &tail[0];
                for (slot, trans_row) in cur.iter_mut().zip(&model.transition) {
                    let acc: f64 = trans_row
                        .iter()
                        .zip(&model.emission)
                        .zip(next_row)
                        .map(|((a_ij, em), b)| a_ij * em[o[t + 1]] * b)
                        .sum();
                    *slot = acc / scales[t + 1];
                }
            }

            // occupancy and transition statistics
            for t in 0..t_len {
                let mut gamma: Vec<f64> = (0..n).map(|i| alphas[t][i] * betas[t][i]).collect();
                let gsum: f64 = gamma.iter().sum();
                gamma.iter_mut().for_each(|g| *g /= gsum);
                if t == 0 {
                    for i in 0..n {
                        pi_acc[i] += gamma[i];
                    }
                }
                for i in 0..n {
                    b_num[i][o[t]] += gamma[i];
                    b_den[i] += gamma[i];
                    if t + 1 < t_len {
                        a_den[i] += gamma[i];
                    }
                }
                if t + 1 < t_len {
                    // xi_t(i,j), normalized over (i,j)
                    let mut xis = vec![vec![0.0; n]; n];
                    let mut xsum = 0.0;
                    for i in 0..n {
                        for j in 0..n {
                            let x = alphas[t][i]
                                * model.transition[i][j]
                                * model.emission[j][o[t + 1]]
                                * betas[t + 1][j];
                            xis[i][j] = x;
                            xsum += x;
                        }
                    }
                    for i in 0..n {
                        for j in 0..n {
                            a_num[i][j] += xis[i][j] / xsum;
                        }
                    }
                }
            }
        }
        trace.push(log_likelihood);

        // M-step
        let pi_sum: f64 = pi_acc.iter().sum();
        for (pi, acc) in model.initial.iter_mut().zip(&pi_acc) {
            *pi = acc / pi_sum;
        }
        for ((row, num), den) in model.transition.iter_mut().zip(&a_num).zip(&a_den) {
            if *den > 0.0 {
                let row_sum: f64 = num.iter().sum();
                if row_sum > 0.0 {
                    for (slot, x) in row.iter_mut().zip(num) {
                        *slot = x / row_sum;
                    }
                }
            }
        }
        for ((row, num), den) in model.emission.iter_mut().zip(&b_num).zip(&b_den) {
            if *den > 0.0 {
                floored_row_from_weights(num, cfg.emission_floor, row);
            }
        }
    }

    Ok(TrainedHmm {
        model,
        log_likelihood_trace: trace,
    })
}

/// Scores the observation against every model and returns the most likely
/// speaker; ties break toward the lexicographically smallest id.
pub fn hmm_identify(
    obs: &ObservationSequence,
    models: &BTreeMap<String, HmmModel>,
) -> Result<(String, f64)> {
    let mut best: Option<(&str, f64)> = None;
    for (speaker, model) in models {
        let ll = forward_log_likelihood(model, obs)?;
        if best.is_none_or(|(_, b)| ll > b) {
            best = Some((speaker, ll));
        }
    }
    best.map(|(s, ll)| (s.to_string(), ll))
        .ok_or(Error::NoCandidates)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cv(values: &[f64]) -> CepstralVector {
        CepstralVector::new(values.to_vec()).unwrap()
    }

    fn obs(symbols: &[usize]) -> ObservationSequence {
        ObservationSequence::new(symbols.to_vec()).unwrap()
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    // ---- codebook ----

    #[test]
    fn single_centroid_is_the_mean() {
        let features = vec![cv(&[0.0, 0.0]), cv(&[2.0, 4.0]), cv(&[4.0, 2.0])];
        let cb = train_codebook(&features, 1, &mut rng(1)).unwrap();
        assert_eq!(cb.len(), 1);
        assert!((cb.centroids()[0][0] - 2.0).abs() < 1e-12);
        assert!((cb.centroids()[0][1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn two_clouds_get_one_centroid_each() {
        let mut features = Vec::new();
        for i in 0..10 {
            let t = i as f64 * 0.01;
            features.push(cv(&[t, -t])); // cloud around origin
            features.push(cv(&[10.0 + t, 10.0 - t])); // cloud around (10, 10)
        }
        let cb = train_codebook(&features, 2, &mut rng(7)).unwrap();
        assert_eq!(cb.len(), 2);
        let near_origin = cb
            .centroids()
            .iter()
            .filter(|c| c[0] >= 0.0 && c[0] <= 0.1 && c[1] >= -0.1 && c[1] <= 0.0)
            .count();
        let near_far = cb
            .centroids()
            .iter()
            .filter(|c| c[0] >= 10.0 && c[0] <= 10.1 && c[1] >= 9.9 && c[1] <= 10.0)
            .count();
        assert_eq!(near_origin, 1, "centroids: {:?}", cb.centroids());
        assert_eq!(near_far, 1, "centroids: {:?}", cb.centroids());
    }

    #[test]
    fn codebook_of_all_distinct_vectors_has_zero_distortion() {
        let features = vec![
            cv(&[0.0]),
            cv(&[1.0]),
            cv(&[5.0]),
            cv(&[9.0]),
            cv(&[0.0]), // duplicate point
        ];
        let cb = train_codebook(&features, 4, &mut rng(3)).unwrap();
        for f in &features {
            let (_, d) = {
                let mut best = (0usize, f64::INFINITY);
                for (i, c) in cb.centroids().iter().enumerate() {
                    let d: f64 = c
                        .iter()
                        .zip(f.values())
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    if d < best.1 {
                        best = (i, d);
                    }
                }
                best
            };
            assert_eq!(d, 0.0);
        }
    }

    #[test]
    fn too_few_distinct_vectors_is_an_error() {
        let features = vec![cv(&[1.0]), cv(&[1.0]), cv(&[2.0])];
        match train_codebook(&features, 3, &mut rng(1)) {
            Err(Error::TooFewDistinctVectors { needed: 3, got: 2 }) => {}
            other => panic!("expected TooFewDistinctVectors, got {other:?}"),
        }
    }

    #[test]
    fn codebook_training_is_deterministic_and_nested_distortion_shrinks() {
        let mut features = Vec::new();
        let mut r = rng(99);
        for _ in 0..200 {
            features.push(cv(&[r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)]));
        }
        let a = train_codebook(&features, 8, &mut rng(5)).unwrap();
        let b = train_codebook(&features, 8, &mut rng(5)).unwrap();
        assert_eq!(a, b);

        let points: Vec<&[f64]> = features.iter().map(|f| f.values()).collect();
        let mut last = f64::INFINITY;
        for m in [1usize, 2, 4, 8, 16] {
            let cb = train_codebook(&features, m, &mut rng(5)).unwrap();
            let d = distortion(&points, cb.centroids());
            assert!(
                d <= last + 1e-9,
                "distortion rose from {last} to {d} at M = {m}"
            );
            last = d;
        }
    }

    // ---- quantize ----

    fn grid_codebook() -> Codebook {
        Codebook::new(vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![5.0, 5.0],
            vec![-1.0, 0.0],
        ])
        .unwrap()
    }

    #[test]
    fn frame_on_centroid_maps_to_it() {
        let seq = FeatureSequence::new(vec![cv(&[5.0, 5.0])]).unwrap();
        let q = quantize(&seq, &grid_codebook()).unwrap();
        assert_eq!(q.symbols(), &[3]);
    }

    #[test]
    fn equidistant_tie_goes_to_lowest_index() {
        // (0,0) is equidistant from centroids 1 (1,0) and 4 (-1,0) at distance 1,
        // but centroid 0 sits on it; move the query so 1 and 4 tie at the minimum
        let cb = Codebook::new(vec![
            vec![9.0, 9.0],
            vec![1.0, 0.0],
            vec![7.0, -3.0],
            vec![8.0, 8.0],
            vec![-1.0, 0.0],
        ])
        .unwrap();
        let seq = FeatureSequence::new(vec![cv(&[0.0, 0.0])]).unwrap();
        let q = quantize(&seq, &cb).unwrap();
        assert_eq!(q.symbols(), &[1]);
    }

    #[test]
    fn hand_grid_assignments() {
        let cb = Codebook::new(vec![vec![0.0], vec![10.0]]).unwrap();
        let seq = FeatureSequence::new(vec![cv(&[1.0]), cv(&[9.0]), cv(&[4.9]), cv(&[5.1])])
            .unwrap();
        let q = quantize(&seq, &cb).unwrap();
        assert_eq!(q.symbols(), &[0, 1, 0, 1]);
    }

    #[test]
    fn quantize_rejects_dimension_mismatch() {
        let seq = FeatureSequence::new(vec![cv(&[1.0])]).unwrap();
        assert!(matches!(
            quantize(&seq, &grid_codebook()),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    // ---- forward ----

    fn uniform_model(n: usize, m: usize) -> HmmModel {
        HmmModel::new(
            vec![1.0 / n as f64; n],
            vec![vec![1.0 / n as f64; n]; n],
            vec![vec![1.0 / m as f64; m]; n],
        )
        .unwrap()
    }

    #[test]
    fn single_state_forward_is_emission_product() {
        let model = HmmModel::new(
            vec![1.0],
            vec![vec![1.0]],
            vec![vec![0.2, 0.3, 0.5]],
        )
        .unwrap();
        let ll = forward_log_likelihood(&model, &obs(&[0, 2, 1, 2])).unwrap();
        let want = 0.2f64.ln() + 0.5f64.ln() + 0.3f64.ln() + 0.5f64.ln();
        assert!((ll - want).abs() < 1e-12);
    }

    #[test]
    fn uniform_model_gives_eighth() {
        let ll = forward_log_likelihood(&uniform_model(2, 2), &obs(&[0, 1, 0])).unwrap();
        assert!((ll - (1.0f64 / 8.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn impossible_observation_returns_neg_infinity() {
        let model = HmmModel::new(
            vec![1.0, 0.0],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![1.0, 0.0], vec![0.5, 0.5]],
        )
        .unwrap();
        let ll = forward_log_likelihood(&model, &obs(&[0, 1])).unwrap();
        assert_eq!(ll, f64::NEG_INFINITY);
    }

    #[test]
    fn forward_rejects_out_of_range_symbols() {
        assert!(matches!(
            forward_log_likelihood(&uniform_model(2, 2), &obs(&[0, 2])),
            Err(Error::SymbolOutOfRange { symbol: 2, num_symbols: 2 })
        ));
    }

    /// Exhaustive path-sum reference: sum over all N^T state paths.
    fn brute_force_likelihood(model: &HmmModel, symbols: &[usize]) -> f64 {
        let n = model.num_states();
        let t_len = symbols.len();
        let mut total = 0.0;
        let mut path = vec![0usize; t_len];
        loop {
            let mut p = model.initial()[path[0]] * model.emission()[path[0]][symbols[0]];
            for t in 1..t_len {
                p *= model.transition()[path[t - 1]][path[t]]
                    * model.emission()[path[t]][symbols[t]];
            }
            total += p;
            // odometer increment
            let mut t = 0;
            loop {
                path[t] += 1;
                if path[t] < n {
                    break;
                }
                path[t] = 0;
                t += 1;
                if t == t_len {
                    return total;
                }
            }
        }
    }

    fn random_model<R: Rng>(n: usize, m: usize, rng: &mut R) -> HmmModel {
        HmmModel::new(
            random_stochastic_row(n, rng),
            (0..n).map(|_| random_stochastic_row(n, rng)).collect(),
            (0..n).map(|_| random_stochastic_row(m, rng)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn forward_matches_exhaustive_path_sum() {
        let mut r = rng(42);
        for _ in 0..25 {
            let n = r.gen_range(1..=4);
            let m = r.gen_range(2..=5);
            let t_len = r.gen_range(1..=6);
            let model = random_model(n, m, &mut r);
            let symbols: Vec<usize> = (0..t_len).map(|_| r.gen_range(0..m)).collect();
            let ll = forward_log_likelihood(&model, &obs(&symbols)).unwrap();
            let brute = brute_force_likelihood(&model, &symbols);
            assert!(
                (ll.exp() - brute).abs() < 1e-10,
                "forward {} vs brute {brute}",
                ll.exp()
            );
        }
    }

    // ---- Baum-Welch ----

    fn assert_stochastic(model: &HmmModel) {
        let tol = 1e-12;
        assert!((model.initial().iter().sum::<f64>() - 1.0).abs() < tol);
        for row in model.transition() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < tol);
            assert!(row.iter().all(|&v| v >= 0.0));
        }
        for row in model.emission() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < tol);
            assert!(row.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn zero_iterations_returns_valid_initialization() {
        let cfg = TrainConfig {
            num_states: 3,
            num_symbols: 4,
            iterations: 0,
            ..TrainConfig::default()
        };
        let out = baum_welch_train(&[obs(&[0, 1, 2, 3])], &cfg, &mut rng(11)).unwrap();
        assert!(out.log_likelihood_trace.is_empty());
        assert_stochastic(&out.model);
        // left-to-right zeros in place
        assert_eq!(out.model.initial()[1], 0.0);
        assert_eq!(out.model.transition()[0][2], 0.0);
    }

    #[test]
    fn repeated_symbol_drives_emission_to_point_mass() {
        let cfg = TrainConfig {
            num_states: 1,
            num_symbols: 3,
            iterations: 10,
            topology: Topology::Ergodic,
            emission_floor: 1e-6,
        };
        let out = baum_welch_train(&[obs(&[2; 20])], &cfg, &mut rng(4)).unwrap();
        let b = &out.model.emission()[0];
        // point mass up to the configured floor on the other symbols
        assert!((b[2] - (1.0 - 2e-6)).abs() < 1e-12, "b = {b:?}");
        assert_eq!(b[0], 1e-6);
        assert_eq!(b[1], 1e-6);
    }

    #[test]
    fn training_is_monotone_and_preserves_stochasticity() {
        let mut r = rng(1234);
        let sequences: Vec<ObservationSequence> = (0..3)
            .map(|_| obs(&(0..30).map(|_| r.gen_range(0..6)).collect::<Vec<_>>()))
            .collect();
        for topology in [Topology::Ergodic, Topology::LeftToRight] {
            let cfg = TrainConfig {
                num_states: 4,
                num_symbols: 6,
                iterations: 30,
                topology,
                emission_floor: 1e-6,
            };
            let out = baum_welch_train(&sequences, &cfg, &mut rng(77)).unwrap();
            assert_stochastic(&out.model);
            assert_eq!(out.log_likelihood_trace.len(), 30);
            for w in out.log_likelihood_trace.windows(2) {
                assert!(
                    w[1] >= w[0] - 1e-9,
                    "log-likelihood dropped: {} -> {} ({topology:?})",
                    w[0],
                    w[1]
                );
            }
        }
    }

    #[test]
    fn training_is_deterministic_given_seed() {
        let sequences = vec![obs(&[0, 1, 1, 2, 0, 2, 2, 1])];
        let cfg = TrainConfig {
            num_states: 3,
            num_symbols: 3,
            iterations: 5,
            ..TrainConfig::default()
        };
        let a = baum_welch_train(&sequences, &cfg, &mut rng(9)).unwrap();
        let b = baum_welch_train(&sequences, &cfg, &mut rng(9)).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.log_likelihood_trace, b.log_likelihood_trace);
    }

    #[test]
    fn training_raises_likelihood_of_training_data_above_init() {
        let sequences = vec![obs(&[0, 0, 1, 1, 2, 2]), obs(&[0, 0, 1, 2, 2, 2])];
        let cfg = TrainConfig {
            num_states: 3,
            num_symbols: 3,
            iterations: 25,
            ..TrainConfig::default()
        };
        let out = baum_welch_train(&sequences, &cfg, &mut rng(2)).unwrap();
        let first = out.log_likelihood_trace[0];
        let last = *out.log_likelihood_trace.last().unwrap();
        assert!(last > first, "no improvement: {first} -> {last}");
    }

    // ---- identify ----

    #[test]
    fn identify_single_model_returns_it() {
        let mut models = BTreeMap::new();
        models.insert("only".to_string(), uniform_model(2, 2));
        let (who, _) = hmm_identify(&obs(&[0, 1]), &models).unwrap();
        assert_eq!(who, "only");
    }

    #[test]
    fn identify_prefers_point_mass_over_uniform() {
        let point = HmmModel::new(
            vec![1.0],
            vec![vec![1.0]],
            vec![vec![1.0 - 2e-6, 1e-6, 1e-6]],
        )
        .unwrap();
        let mut models = BTreeMap::new();
        models.insert("uniform".to_string(), uniform_model(1, 3));
        models.insert("point".to_string(), point);
        let (who, ll) = hmm_identify(&obs(&[0; 6]), &models).unwrap();
        assert_eq!(who, "point");
        assert!(ll > 6.0 * (1.0f64 / 3.0).ln());
    }

    #[test]
    fn identify_ties_break_lexicographically() {
        let mut models = BTreeMap::new();
        models.insert("zeta".to_string(), uniform_model(2, 2));
        models.insert("beta".to_string(), uniform_model(2, 2));
        let (who, _) = hmm_identify(&obs(&[0, 1, 0]), &models).unwrap();
        assert_eq!(who, "beta");
    }

    #[test]
    fn identify_empty_map_fails() {
        let models: BTreeMap<String, HmmModel> = BTreeMap::new();
        assert!(matches!(
            hmm_identify(&obs(&[0]), &models),
            Err(Error::NoCandidates)
        ));
    }

    // ---- persistence ----

    #[test]
    fn model_json_round_trip_and_validation() {
        let model = random_model(3, 4, &mut rng(8));
        let json = serde_json::to_string(&model).unwrap();
        let back: HmmModel = serde_json::from_str(&json).unwrap();
        assert_eq!(model, back);

        // broken row sums must be rejected on load
        let bad = r#"{"initial":[0.5,0.2],"transition":[[1.0,0.0],[0.0,1.0]],"emission":[[0.5,0.5],[0.5,0.5]]}"#;
        assert!(serde_json::from_str::<HmmModel>(bad).is_err());
    }

    #[test]
    fn codebook_json_round_trip_and_validation() {
        let cb = grid_codebook();
        let json = serde_json::to_string(&cb).unwrap();
        let back: Codebook = serde_json::from_str(&json).unwrap();
        assert_eq!(cb, back);

        let dup = "[[1.0,2.0],[1.0,2.0]]";
        assert!(serde_json::from_str::<Codebook>(dup).is_err());
    }

    #[test]
    fn floored_projection_is_exact_on_hand_case() {
        // weights (8, 1, 1) with floor 0.2: symbol shares before flooring are
        // (0.8, 0.1, 0.1); the two light symbols pin at 0.2, the heavy one
        // absorbs the rest.
        let mut out = vec![0.0; 3];
        floored_row_from_weights(&[8.0, 1.0, 1.0], 0.2, &mut out);
        assert!((out[0] - 0.6).abs() < 1e-15);
        assert_eq!(out[1], 0.2);
        assert_eq!(out[2], 0.2);
    }
}
