//! Pole extraction and the pole-to-formant mapping.
//!
//! Roots of the predictor polynomial are found as eigenvalues of its
//! companion matrix (robust at the low orders used here, no initial-guess
//! sensitivity). Each conjugate pole pair is reported once, through its
//! upper-half-plane member, and mapped to a resonance by
//!
//! ```text
//! F = theta * fs / (2 pi)        (frequency, Hz)
//! B = -ln|z| * fs / pi           (bandwidth, Hz)
//! ```

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::fsutil;
use crate::lpc::PredictorPolynomial;
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// A pole of the all-pole model, in the z-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pole {
    pub re: f64,
    pub im: f64,
}

impl Pole {
    pub fn new(re: f64, im: f64) -> Self {
        Pole { re, im }
    }

    pub fn from_polar(radius: f64, angle_rad: f64) -> Self {
        Pole {
            re: radius * angle_rad.cos(),
            im: radius * angle_rad.sin(),
        }
    }

    /// Upper-half-plane pole realizing a resonance at `frequency_hz` with
    /// `bandwidth_hz`, inverting the formant mapping.
    pub fn from_formant(frequency_hz: f64, bandwidth_hz: f64, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if !(frequency_hz > 0.0 && frequency_hz < sample_rate_hz / 2.0) {
            return Err(Error::InvalidParameter(format!(
                "resonance frequency {frequency_hz} Hz outside (0, {})",
                sample_rate_hz / 2.0
            )));
        }
        if !(bandwidth_hz >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "bandwidth must be nonnegative, got {bandwidth_hz}"
            )));
        }
        let radius = (-std::f64::consts::PI * bandwidth_hz / sample_rate_hz).exp();
        let angle = 2.0 * std::f64::consts::PI * frequency_hz / sample_rate_hz;
        Ok(Pole::from_polar(radius, angle))
    }

    pub fn radius(&self) -> f64 {
        self.re.hypot(self.im)
    }

    /// Angle in (-pi, pi].
    pub fn angle_rad(&self) -> f64 {
        self.im.atan2(self.re)
    }

    pub fn conj(&self) -> Self {
        Pole {
            re: self.re,
            im: -self.im,
        }
    }

    fn to_complex(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// One resonance of the vocal-tract model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Formant {
    pub frequency_hz: f64,
    pub bandwidth_hz: f64,
}

/// Formants of one analysis, sorted by strictly ascending frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct FormantSet {
    formants: Vec<Formant>,
    sample_rate_hz: f64,
}

impl FormantSet {
    pub fn new(formants: Vec<Formant>, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz > 0.0) || !sample_rate_hz.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sample rate must be positive and finite, got {sample_rate_hz}"
            )));
        }
        let nyquist = sample_rate_hz / 2.0;
        for (i, f) in formants.iter().enumerate() {
            if !f.frequency_hz.is_finite() || f.frequency_hz < 0.0 || f.frequency_hz > nyquist {
                return Err(Error::InvalidParameter(format!(
                    "formant {i} frequency {} Hz outside [0, {nyquist}]",
                    f.frequency_hz
                )));
            }
            if !f.bandwidth_hz.is_finite() || f.bandwidth_hz < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "formant {i} bandwidth {} Hz is negative",
                    f.bandwidth_hz
                )));
            }
            if i > 0 && formants[i - 1].frequency_hz >= f.frequency_hz {
                return Err(Error::InvalidParameter(format!(
                    "formant frequencies must be strictly ascending ({} then {})",
                    formants[i - 1].frequency_hz, f.frequency_hz
                )));
            }
        }
        Ok(FormantSet {
            formants,
            sample_rate_hz,
        })
    }

    pub fn formants(&self) -> &[Formant] {
        &self.formants
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.formants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.formants.is_empty()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.formants.iter().map(|f| f.frequency_hz).collect()
    }

    /// CSV rendering: `index,frequency_hz,bandwidth_hz`, indices 1-based so
    /// row 1 is F1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,frequency_hz,bandwidth_hz\n");
        for (i, f) in self.formants.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", i + 1, f.frequency_hz, f.bandwidth_hz));
        }
        out
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        fsutil::write_atomic(path, self.to_csv().as_bytes())
    }
}

/// Selection rules applied to raw poles before they count as formants.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FormantFilterConfig {
    /// Resonances below this frequency are discarded (glottal/tilt poles).
    pub min_freq_hz: f64,
    /// Resonances above `fs/2 - margin` are discarded.
    pub nyquist_margin_hz: f64,
    /// Resonances broader than this are discarded (non-formant poles).
    pub max_bandwidth_hz: f64,
}

impl Default for FormantFilterConfig {
    fn default() -> Self {
        FormantFilterConfig {
            min_freq_hz: 50.0,
            nyquist_margin_hz: 50.0,
            max_bandwidth_hz: 700.0,
        }
    }
}

/// Per-index relative formant displacement between a styled analysis and its
/// normal-style baseline, over the first `min(len)` shared indices.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementReport {
    /// `|F_i_styled - F_i_normal| / F_i_normal` per shared index.
    pub per_index: Vec<f64>,
    /// Mean of `per_index`.
    pub mean: f64,
    /// Signed `B_i_styled - B_i_normal` per shared index.
    pub bandwidth_deltas: Vec<f64>,
}

// ---------------------------------------------------------------------------
// Root finding
// ---------------------------------------------------------------------------

const SCHUR_MAX_ITER: usize = 10_000;

/// All `p` roots of `A(z)` in the z-plane (i.e. of the monic `z^p A(z)`).
///
/// Exact zero trailing coefficients are factored out first (each contributes
/// a root at the origin, and their removal keeps the companion matrix away
/// from the defective all-zero case); the rest come from the companion
/// matrix's eigenvalues. Every returned root is verified against the residual
/// bound `|z^p A(z)| <= 1e-8 * max |coeff|`; failure to converge or to meet
/// the bound reports the offending polynomial.
pub fn polynomial_roots(poly: &PredictorPolynomial) -> Result<Vec<Pole>> {
    let monic = poly.monic_coeffs();
    let p = poly.order();

    // strip exact-zero trailing coefficients: roots at the origin
    let mut degree = p;
    while degree > 0 && monic[degree] == 0.0 {
        degree -= 1;
    }
    let mut roots: Vec<Pole> = vec![Pole::new(0.0, 0.0); p - degree];

    if degree > 0 {
        let companion = DMatrix::<f64>::from_fn(degree, degree, |i, j| {
            if j + 1 == degree {
                // last column: negated coefficients, constant term on top
                -monic[degree - i]
            } else if i == j + 1 {
                1.0
            } else {
                0.0
            }
        });
        let schur = nalgebra::linalg::Schur::try_new(companion, f64::EPSILON, SCHUR_MAX_ITER)
            .ok_or_else(|| Error::RootsDidNotConverge {
                coeffs: monic.clone(),
            })?;
        for ev in schur.complex_eigenvalues().iter() {
            roots.push(Pole::new(ev.re, ev.im));
        }
    }

    // residual check against the full monic polynomial
    let max_coeff = monic.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    for root in &roots {
        let z = root.to_complex();
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in &monic {
            acc = acc * z + c;
        }
        if acc.norm() > 1e-8 * max_coeff {
            return Err(Error::RootsDidNotConverge {
                coeffs: monic.clone(),
            });
        }
    }

    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(roots)
}

/// Rebuilds a predictor polynomial from a conjugate-closed pole set
/// (the inverse of [`polynomial_roots`], up to ordering).
///
/// The product of the `(1 - z_i z^-1)` factors is computed in complex
/// arithmetic; if the input set is not conjugate-symmetric the imaginary
/// residue exceeds tolerance and an error is returned.
pub fn polynomial_from_poles(poles: &[Pole], gain: f64) -> Result<PredictorPolynomial> {
    if poles.is_empty() {
        return Err(Error::InvalidParameter(
            "need at least one pole to build a polynomial".into(),
        ));
    }
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for pole in poles {
        let z = pole.to_complex();
        let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
        for (i, &c) in coeffs.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * z;
        }
        coeffs = next;
    }
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    if coeffs.iter().any(|c| c.im.abs() > 1e-9 * scale) {
        return Err(Error::InvalidParameter(
            "pole set is not conjugate-symmetric; coefficients would be complex".into(),
        ));
    }
    PredictorPolynomial::new(gain, coeffs[1..].iter().map(|c| c.re).collect())
}

// ---------------------------------------------------------------------------
// Formant mapping
// ---------------------------------------------------------------------------

/// Maps an upper-half-plane pole to its resonance frequency and bandwidth.
///
/// Requires `0 < radius <= 1` and `0 < angle <= pi`; a pole at the origin has
/// no finite bandwidth and is rejected.
pub fn pole_to_formant(pole: &Pole, sample_rate_hz: f64) -> Result<Formant> {
    if !(sample_rate_hz > 0.0) || !sample_rate_hz.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sample rate must be positive and finite, got {sample_rate_hz}"
        )));
    }
    let radius = pole.radius();
    if !radius.is_finite() {
        return Err(Error::InvalidParameter("non-finite pole".into()));
    }
    if radius == 0.0 {
        return Err(Error::PoleAtOrigin);
    }
    if radius > 1.0 {
        return Err(Error::PoleOutsideUnitDisk { radius });
    }
    let angle = pole.angle_rad();
    if !(angle > 0.0 && angle <= std::f64::consts::PI) {
        return Err(Error::PoleAngleOutOfRange { angle });
    }
    Ok(Formant {
        frequency_hz: angle * sample_rate_hz / (2.0 * std::f64::consts::PI),
        bandwidth_hz: -radius.ln() * sample_rate_hz / std::f64::consts::PI,
    })
}

/// Extracts the formant set of a stable predictor polynomial.
///
/// Strictly-upper-half-plane poles (each conjugate pair's positive-angle
/// member) are mapped through [`pole_to_formant`] and kept when the frequency
/// lies in `[min_freq, fs/2 - margin]` and the bandwidth is at most `max_bw`.
/// Real poles carry no resonance and poles outside the unit disk are not
/// resonances of a stable model; both are skipped. In the measure-zero case
/// of two pairs at the same frequency, the narrower resonance wins.
pub fn extract_formants(
    poly: &PredictorPolynomial,
    sample_rate_hz: f64,
    cfg: &FormantFilterConfig,
) -> Result<FormantSet> {
    if !(cfg.min_freq_hz >= 0.0 && cfg.nyquist_margin_hz >= 0.0 && cfg.max_bandwidth_hz > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "invalid formant filter config: {cfg:?}"
        )));
    }
    let roots = polynomial_roots(poly)?;
    let high = sample_rate_hz / 2.0 - cfg.nyquist_margin_hz;
    let mut formants: Vec<Formant> = Vec::new();
    for pole in roots.iter().filter(|p| p.im > 0.0 && p.radius() <= 1.0) {
        let f = pole_to_formant(pole, sample_rate_hz)?;
        if f.frequency_hz >= cfg.min_freq_hz
            && f.frequency_hz <= high
            && f.bandwidth_hz <= cfg.max_bandwidth_hz
        {
            formants.push(f);
        }
    }
    formants.sort_by(|a, b| {
        a.frequency_hz
            .total_cmp(&b.frequency_hz)
            .then(a.bandwidth_hz.total_cmp(&b.bandwidth_hz))
    });
    formants.dedup_by(|b, a| {
        // keep `a` (sorted first, narrower) when frequencies tie exactly
        a.frequency_hz == b.frequency_hz
    });
    FormantSet::new(formants, sample_rate_hz)
}

/// Relative frequency displacement of a styled formant set against its
/// normal-style baseline, over the shared leading indices.
pub fn formant_displacement(
    styled: &FormantSet,
    normal: &FormantSet,
) -> Result<DisplacementReport> {
    if styled.is_empty() {
        return Err(Error::EmptyFormantSet("styled set has no formants".into()));
    }
    if normal.is_empty() {
        return Err(Error::EmptyFormantSet("normal set has no formants".into()));
    }
    let n = styled.len().min(normal.len());
    let mut per_index = Vec::with_capacity(n);
    let mut bandwidth_deltas = Vec::with_capacity(n);
    for i in 0..n {
        let s = styled.formants()[i];
        let b = normal.formants()[i];
        if b.frequency_hz <= 0.0 {
            return Err(Error::InvalidParameter(
                "normal baseline has a zero-frequency formant".into(),
            ));
        }
        per_index.push((s.frequency_hz - b.frequency_hz).abs() / b.frequency_hz);
        bandwidth_deltas.push(s.bandwidth_hz - b.bandwidth_hz);
    }
    let mean = per_index.iter().sum::<f64>() / n as f64;
    Ok(DisplacementReport {
        per_index,
        mean,
        bandwidth_deltas,
    })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lpc::{reflection_to_predictor, ReflectionCoeffs};

    const FS: f64 = 8000.0;

    fn poly(coeffs: &[f64]) -> PredictorPolynomial {
        PredictorPolynomial::new(1.0, coeffs.to_vec()).unwrap()
    }

    // ---- polynomial_roots ----

    #[test]
    fn linear_polynomial_root() {
        let roots = polynomial_roots(&poly(&[-0.5])).unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0].re - 0.5).abs() < 1e-12);
        assert!(roots[0].im.abs() < 1e-12);
    }

    #[test]
    fn conjugate_pair_recovered() {
        let (r, theta) = (0.9, std::f64::consts::FRAC_PI_4);
        let p = poly(&[-2.0 * r * theta.cos(), r * r]);
        let roots = polynomial_roots(&p).unwrap();
        assert_eq!(roots.len(), 2);
        let upper = roots.iter().find(|z| z.im > 0.0).unwrap();
        assert!((upper.radius() - r).abs() < 1e-12);
        assert!((upper.angle_rad() - theta).abs() < 1e-12);
        let lower = roots.iter().find(|z| z.im < 0.0).unwrap();
        assert_eq!(upper.re, lower.re);
        assert_eq!(upper.im, -lower.im);
    }

    #[test]
    fn zero_polynomial_roots_at_origin() {
        let roots = polynomial_roots(&poly(&[0.0, 0.0, 0.0])).unwrap();
        assert_eq!(roots.len(), 3);
        for z in roots {
            assert_eq!(z.re, 0.0);
            assert_eq!(z.im, 0.0);
        }
    }

    #[test]
    fn roots_rebuild_their_polynomial() {
        // random-ish stable polynomial via reflection coefficients
        let k = ReflectionCoeffs::new(vec![0.4, -0.3, 0.2, 0.55, -0.15, 0.05]).unwrap();
        let p = reflection_to_predictor(&k, 1.0).unwrap();
        let roots = polynomial_roots(&p).unwrap();
        let rebuilt = polynomial_from_poles(&roots, 1.0).unwrap();
        for (a, b) in p.coeffs().iter().zip(rebuilt.coeffs()) {
            assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn polynomial_from_poles_rejects_unpaired_complex() {
        let err = polynomial_from_poles(&[Pole::new(0.3, 0.4)], 1.0).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    // ---- pole_to_formant ----

    #[test]
    fn quarter_circle_angle_maps_to_quarter_nyquist() {
        let z = Pole::from_polar(0.9, std::f64::consts::FRAC_PI_2);
        let f = pole_to_formant(&z, FS).unwrap();
        assert!((f.frequency_hz - 2000.0).abs() < 1e-9);
    }

    #[test]
    fn unit_circle_pole_has_zero_bandwidth() {
        let z = Pole::from_polar(1.0, 1.0);
        let f = pole_to_formant(&z, FS).unwrap();
        assert_eq!(f.bandwidth_hz, 0.0);
    }

    #[test]
    fn bandwidth_formula_spot_value() {
        let z = Pole::from_polar(0.95, 1.0);
        let f = pole_to_formant(&z, FS).unwrap();
        let exact = -(0.95f64).ln() * FS / std::f64::consts::PI;
        assert!((f.bandwidth_hz - exact).abs() < 1e-9);
        // published rounding of the same quantity
        assert!((f.bandwidth_hz - 130.614).abs() < 5e-3);
        assert!((f.bandwidth_hz - 130.61730158794316).abs() < 1e-9);
    }

    #[test]
    fn pole_to_formant_rejects_out_of_contract_poles() {
        assert!(matches!(
            pole_to_formant(&Pole::new(0.0, 0.0), FS),
            Err(Error::PoleAtOrigin)
        ));
        assert!(matches!(
            pole_to_formant(&Pole::from_polar(1.1, 1.0), FS),
            Err(Error::PoleOutsideUnitDisk { .. })
        ));
        assert!(matches!(
            pole_to_formant(&Pole::from_polar(0.9, -0.5), FS),
            Err(Error::PoleAngleOutOfRange { .. })
        ));
        assert!(matches!(
            pole_to_formant(&Pole::new(0.9, 0.0), FS),
            Err(Error::PoleAngleOutOfRange { .. })
        ));
    }

    #[test]
    fn bandwidth_shrinks_as_radius_approaches_one() {
        let angle = 1.2;
        let mut last = f64::INFINITY;
        for radius in [0.7, 0.8, 0.9, 0.95, 0.99, 0.999] {
            let f = pole_to_formant(&Pole::from_polar(radius, angle), FS).unwrap();
            assert!(f.bandwidth_hz > 0.0);
            assert!(f.bandwidth_hz < last);
            last = f.bandwidth_hz;
        }
    }

    // ---- extract_formants ----

    fn poly_from_resonances(resonances: &[(f64, f64)]) -> PredictorPolynomial {
        let mut poles = Vec::new();
        for &(f, b) in resonances {
            let z = Pole::from_formant(f, b, FS).unwrap();
            poles.push(z);
            poles.push(z.conj());
        }
        polynomial_from_poles(&poles, 1.0).unwrap()
    }

    #[test]
    fn recovers_constructed_resonances_exactly() {
        let p = poly_from_resonances(&[(500.0, 60.0), (1500.0, 90.0)]);
        let set = extract_formants(&p, FS, &FormantFilterConfig::default()).unwrap();
        assert_eq!(set.len(), 2);
        let f = set.formants();
        assert!((f[0].frequency_hz - 500.0).abs() / 500.0 < 1e-6);
        assert!((f[0].bandwidth_hz - 60.0).abs() / 60.0 < 1e-6);
        assert!((f[1].frequency_hz - 1500.0).abs() / 1500.0 < 1e-6);
        assert!((f[1].bandwidth_hz - 90.0).abs() / 90.0 < 1e-6);
    }

    #[test]
    fn memoryless_polynomial_has_no_formants() {
        let set =
            extract_formants(&poly(&[0.0, 0.0]), FS, &FormantFilterConfig::default()).unwrap();
        assert!(set.is_empty());
    }

    #[test]
    fn filter_rules_drop_out_of_band_poles() {
        let cfg = FormantFilterConfig::default();
        // too broad: 900 Hz bandwidth
        let broad = poly_from_resonances(&[(1000.0, 900.0)]);
        assert!(extract_formants(&broad, FS, &cfg).unwrap().is_empty());
        // too low: below min_freq
        let low = poly_from_resonances(&[(30.0, 80.0)]);
        assert!(extract_formants(&low, FS, &cfg).unwrap().is_empty());
        // too close to Nyquist under the 50 Hz margin
        let high = poly_from_resonances(&[(3980.0, 80.0)]);
        assert!(extract_formants(&high, FS, &cfg).unwrap().is_empty());
        // a keeper passes
        let ok = poly_from_resonances(&[(700.0, 120.0)]);
        assert_eq!(extract_formants(&ok, FS, &cfg).unwrap().len(), 1);
    }

    #[test]
    fn formant_sets_sorted_strictly_ascending() {
        let p = poly_from_resonances(&[(2500.0, 100.0), (400.0, 70.0), (1200.0, 90.0)]);
        let set = extract_formants(&p, FS, &FormantFilterConfig::default()).unwrap();
        let freqs = set.frequencies();
        assert_eq!(freqs.len(), 3);
        assert!(freqs.windows(2).all(|w| w[0] < w[1]), "{freqs:?}");
    }

    // ---- displacement ----

    fn set(entries: &[(f64, f64)]) -> FormantSet {
        FormantSet::new(
            entries
                .iter()
                .map(|&(f, b)| Formant {
                    frequency_hz: f,
                    bandwidth_hz: b,
                })
                .collect(),
            FS,
        )
        .unwrap()
    }

    #[test]
    fn identical_sets_have_zero_displacement() {
        let a = set(&[(500.0, 60.0), (1500.0, 90.0)]);
        let rep = formant_displacement(&a, &a).unwrap();
        assert_eq!(rep.mean, 0.0);
        assert_eq!(rep.per_index, vec![0.0, 0.0]);
        assert_eq!(rep.bandwidth_deltas, vec![0.0, 0.0]);
    }

    #[test]
    fn single_formant_displacement_arithmetic() {
        let styled = set(&[(550.0, 80.0)]);
        let normal = set(&[(500.0, 60.0)]);
        let rep = formant_displacement(&styled, &normal).unwrap();
        assert!((rep.mean - 0.10).abs() < 1e-12);
        assert!((rep.bandwidth_deltas[0] - 20.0).abs() < 1e-12);
    }

    #[test]
    fn displacement_mean_over_two_indices() {
        let styled = set(&[(550.0, 60.0), (1500.0, 90.0)]);
        let normal = set(&[(500.0, 60.0), (1500.0, 90.0)]);
        let rep = formant_displacement(&styled, &normal).unwrap();
        assert!((rep.mean - 0.05).abs() < 1e-12);
    }

    #[test]
    fn displacement_rejects_empty_sets() {
        let a = set(&[(500.0, 60.0)]);
        let empty = FormantSet::new(vec![], FS).unwrap();
        assert!(matches!(
            formant_displacement(&a, &empty),
            Err(Error::EmptyFormantSet(_))
        ));
        assert!(matches!(
            formant_displacement(&empty, &a),
            Err(Error::EmptyFormantSet(_))
        ));
    }

    // ---- CSV ----

    #[test]
    fn csv_rendering_is_stable() {
        let s = set(&[(500.0, 60.0), (1500.5, 90.25)]);
        assert_eq!(
            s.to_csv(),
            "index,frequency_hz,bandwidth_hz\n1,500,60\n2,1500.5,90.25\n"
        );
    }

    #[test]
    fn formant_set_rejects_unsorted_and_out_of_range() {
        assert!(FormantSet::new(
            vec![
                Formant {
                    frequency_hz: 900.0,
                    bandwidth_hz: 60.0
                },
                Formant {
                    frequency_hz: 500.0,
                    bandwidth_hz: 60.0
                },
            ],
            FS
        )
        .is_err());
        assert!(FormantSet::new(
            vec![Formant {
                frequency_hz: 4500.0,
                bandwidth_hz: 60.0
            }],
            FS
        )
        .is_err());
        assert!(FormantSet::new(
            vec![Formant {
                frequency_hz: 500.0,
                bandwidth_hz: -1.0
            }],
            FS
        )
        .is_err());
    }
}
