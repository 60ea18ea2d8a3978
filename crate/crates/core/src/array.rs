//! Array geometry, steering vectors and beamforming gains for a linear
//! movable-antenna array. All lengths are in wavelengths, all angles in
//! radians.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on the weight-norm budget when validating.
pub const TOL_NORM: f64 = 1e-8;
/// Slack allowed on box, spacing and interference constraints when validating.
pub const TOL_FEAS: f64 = 1e-6;
/// Minimum spatial-frequency separation `|cos a - cos b|` between any signal and
/// interference direction.
pub const MIN_COS_SEPARATION: f64 = 1e-3;

/// Full problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub n_antennas: usize,
    /// Length `D` of the line segment the antennas move on.
    pub aperture: f64,
    /// Minimum distance `D0` between adjacent antennas.
    pub min_spacing: f64,
    /// Cap `eta` on the gain toward every interference direction.
    pub interference_cap: f64,
    pub signal_dirs: Vec<f64>,
    pub interference_dirs: Vec<f64>,
    pub eps_outer: f64,
    pub eps_awv: f64,
    pub eps_apv: f64,
    pub max_outer: usize,
    pub max_awv_iters: usize,
    pub max_apv_iters: usize,
    pub rng_seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            n_antennas: 8,
            aperture: 8.0,
            min_spacing: 0.5,
            interference_cap: 0.1,
            signal_dirs: vec![],
            interference_dirs: vec![],
            eps_outer: 1e-4,
            eps_awv: 1e-2,
            eps_apv: 1e-2,
            max_outer: 50,
            max_awv_iters: 100,
            max_apv_iters: 100,
            rng_seed: 0,
        }
    }
}

impl Scenario {
    /// The beam-pattern scenario: 8 antennas on 8 wavelengths, signals at 30 and
    /// 120 degrees, interference at 10 and 150 degrees.
    pub fn fig2() -> Self {
        Self {
            signal_dirs: vec![30f64.to_radians(), 120f64.to_radians()],
            interference_dirs: vec![10f64.to_radians(), 150f64.to_radians()],
            ..Self::default()
        }
    }

    pub fn n_signals(&self) -> usize {
        self.signal_dirs.len()
    }

    pub fn n_interferers(&self) -> usize {
        self.interference_dirs.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        let n = self.n_antennas;
        if n == 0 {
            return bad("n_antennas must be at least 1".into());
        }
        if !(self.aperture > 0.0) || !(self.min_spacing > 0.0) {
            return bad("aperture and min_spacing must be positive".into());
        }
        if (n - 1) as f64 * self.min_spacing > self.aperture * (1.0 + 1e-12) {
            return bad(format!(
                "{} antennas with spacing {} do not fit in aperture {}",
                n, self.min_spacing, self.aperture
            ));
        }
        if !(self.interference_cap >= 0.0) {
            return bad("interference_cap must be non-negative".into());
        }
        if self.signal_dirs.is_empty() {
            return bad("at least one signal direction is required".into());
        }
        for &a in self.signal_dirs.iter().chain(&self.interference_dirs) {
            if !(a > 0.0 && a < PI) {
                return bad(format!("angle {a} rad is outside (0, pi)"));
            }
        }
        for &s in &self.signal_dirs {
            for &i in &self.interference_dirs {
                if (s.cos() - i.cos()).abs() < MIN_COS_SEPARATION {
                    return bad(format!(
                        "signal direction {:.3} deg and interference direction {:.3} deg are not separated",
                        s.to_degrees(),
                        i.to_degrees()
                    ));
                }
            }
        }
        if !(self.eps_outer > 0.0 && self.eps_awv > 0.0 && self.eps_apv > 0.0) {
            return bad("convergence thresholds must be positive".into());
        }
        if self.max_outer == 0 || self.max_awv_iters == 0 || self.max_apv_iters == 0 {
            return bad("iteration caps must be at least 1".into());
        }
        Ok(())
    }
}

/// Antenna position vector, ascending, in wavelengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Apv(pub Vec<f64>);

impl Apv {
    pub fn new(positions: Vec<f64>) -> Self {
        Self(positions)
    }

    /// `n` positions starting at `start`, `spacing` apart.
    pub fn uniform(n: usize, start: f64, spacing: f64) -> Self {
        Self((0..n).map(|i| start + i as f64 * spacing).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Checks box and spacing constraints; returns every violation found.
    pub fn violations(&self, aperture: f64, min_spacing: f64, tol: f64) -> Vec<Violation> {
        let x = &self.0;
        let mut out = Vec::new();
        if let Some(&first) = x.first() {
            if first < -tol {
                out.push(Violation::BelowOrigin { position: first });
            }
        }
        if let Some(&last) = x.last() {
            if last > aperture + tol {
                out.push(Violation::BeyondAperture {
                    position: last,
                    aperture,
                });
            }
        }
        for n in 1..x.len() {
            let gap = x[n] - x[n - 1];
            if gap < min_spacing - tol {
                out.push(Violation::Spacing {
                    index: n,
                    gap,
                    required: min_spacing,
                });
            }
        }
        out
    }
}

/// Complex antenna weight vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<[f64; 2]>", from = "Vec<[f64; 2]>")]
pub struct Awv(pub Vec<Complex64>);

impl From<Awv> for Vec<[f64; 2]> {
    fn from(w: Awv) -> Self {
        w.0.iter().map(|c| [c.re, c.im]).collect()
    }
}

impl From<Vec<[f64; 2]>> for Awv {
    fn from(v: Vec<[f64; 2]>) -> Self {
        Awv(v.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

impl Awv {
    pub fn new(weights: Vec<Complex64>) -> Self {
        Self(weights)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); n])
    }

    /// `(1/sqrt(n)) * ones`.
    pub fn uniform(n: usize) -> Self {
        Self(vec![Complex64::new(1.0 / (n as f64).sqrt(), 0.0); n])
    }

    /// Unit-norm matched filter toward `theta`.
    pub fn matched(apv: &Apv, theta: f64) -> Self {
        let scale = 1.0 / (apv.len() as f64).sqrt();
        Self(steering_vector(apv, theta).into_iter().map(|a| a * scale).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn amplitudes(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.norm()).collect()
    }

    pub fn phases(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.arg()).collect()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.iter().map(|c| c * s).collect())
    }

    pub fn conj(&self) -> Self {
        Self(self.0.iter().map(|c| c.conj()).collect())
    }

    /// Stacks `[Re w; Im w]`.
    pub fn to_real(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.0.iter().map(|c| c.re).collect();
        v.extend(self.0.iter().map(|c| c.im));
        v
    }

    pub fn from_real(v: &[f64]) -> Self {
        let n = v.len() / 2;
        Self((0..n).map(|i| Complex64::new(v[i], v[n + i])).collect())
    }
}

/// Spatial frequency `2 pi cos(theta)` for unit wavelength.
pub fn spatial_freq(theta: f64) -> f64 {
    2.0 * PI * theta.cos()
}

pub fn steering_vector(apv: &Apv, theta: f64) -> Vec<Complex64> {
    let k = spatial_freq(theta);
    apv.0.iter().map(|&x| Complex64::from_polar(1.0, k * x)).collect()
}

/// `|w^H a(x, theta)|^2`.
pub fn beam_gain(awv: &Awv, apv: &Apv, theta: f64) -> f64 {
    debug_assert_eq!(awv.len(), apv.len());
    let k = spatial_freq(theta);
    let s: Complex64 = awv
        .0
        .iter()
        .zip(&apv.0)
        .map(|(w, &x)| w.conj() * Complex64::from_polar(1.0, k * x))
        .sum();
    s.norm_sqr()
}

pub fn gains(awv: &Awv, apv: &Apv, dirs: &[f64]) -> Vec<f64> {
    dirs.iter().map(|&t| beam_gain(awv, apv, t)).collect()
}

/// `min_k G(w, x, theta_k)`; zero when `dirs` is empty.
pub fn min_gain(awv: &Awv, apv: &Apv, dirs: &[f64]) -> f64 {
    dirs.iter()
        .map(|&t| beam_gain(awv, apv, t))
        .fold(f64::INFINITY, f64::min)
        .min(if dirs.is_empty() { 0.0 } else { f64::INFINITY })
}

/// `max_l G(w, x, phi_l)`; zero when `dirs` is empty.
pub fn max_gain(awv: &Awv, apv: &Apv, dirs: &[f64]) -> f64 {
    dirs.iter().map(|&t| beam_gain(awv, apv, t)).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternPoint {
    pub angle: f64,
    pub gain: f64,
}

impl PatternPoint {
    pub fn gain_db(&self) -> f64 {
        10.0 * self.gain.max(1e-12).log10()
    }
}

pub fn beam_pattern(awv: &Awv, apv: &Apv, grid: &[f64]) -> Vec<PatternPoint> {
    grid.iter()
        .map(|&angle| PatternPoint {
            angle,
            gain: beam_gain(awv, apv, angle),
        })
        .collect()
}

/// Angles `0, step, 2 step, ...` up to and including `pi`.
pub fn angle_grid_deg(step_deg: f64) -> Vec<f64> {
    let n = (180.0 / step_deg).round() as usize;
    (0..=n).map(|i| (i as f64 * step_deg).min(180.0).to_radians()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub apv: Apv,
    pub awv: Awv,
    pub delta: f64,
    pub signal_gains: Vec<f64>,
    pub interference_gains: Vec<f64>,
    pub outer_trace: Vec<f64>,
    pub wall_time: f64,
}

impl Solution {
    /// Evaluates gains for `(apv, awv)` on the scenario's directions.
    pub fn evaluate(apv: Apv, awv: Awv, sc: &Scenario) -> Self {
        let signal_gains = gains(&awv, &apv, &sc.signal_dirs);
        let interference_gains = gains(&awv, &apv, &sc.interference_dirs);
        let delta = signal_gains.iter().copied().fold(f64::INFINITY, f64::min);
        Self {
            apv,
            awv,
            delta: if delta.is_finite() { delta } else { 0.0 },
            signal_gains,
            interference_gains,
            outer_trace: Vec::new(),
            wall_time: 0.0,
        }
    }

    pub fn max_interference(&self) -> f64 {
        self.interference_gains.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Length { apv: usize, awv: usize, expected: usize },
    BelowOrigin { position: f64 },
    BeyondAperture { position: f64, aperture: f64 },
    Spacing { index: usize, gap: f64, required: f64 },
    Norm { norm: f64 },
    Interference { index: usize, gain: f64, cap: f64 },
    Delta { reported: f64, actual: f64 },
}

impl Violation {
    /// How far past the limit the violated quantity is.
    pub fn magnitude(&self) -> f64 {
        match *self {
            Violation::Length { .. } => f64::INFINITY,
            Violation::BelowOrigin { position } => -position,
            Violation::BeyondAperture { position, aperture } => position - aperture,
            Violation::Spacing { gap, required, .. } => required - gap,
            Violation::Norm { norm } => norm - 1.0,
            Violation::Interference { gain, cap, .. } => gain - cap,
            Violation::Delta { reported, actual } => (reported - actual).abs(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn worst(&self) -> f64 {
        self.violations.iter().map(Violation::magnitude).fold(0.0, f64::max)
    }
}

/// Checks a solution against the box, spacing, norm and interference-cap
/// constraints, recomputing gains from `(apv, awv)` rather than trusting the
/// stored values.
pub fn validate_solution(sol: &Solution, sc: &Scenario) -> FeasibilityReport {
    let n = sc.n_antennas;
    let mut violations = Vec::new();
    if sol.apv.len() != n || sol.awv.len() != n {
        violations.push(Violation::Length {
            apv: sol.apv.len(),
            awv: sol.awv.len(),
            expected: n,
        });
        return FeasibilityReport { violations };
    }
    violations.extend(sol.apv.violations(sc.aperture, sc.min_spacing, TOL_FEAS));
    let norm = sol.awv.norm();
    if norm > 1.0 + TOL_NORM {
        violations.push(Violation::Norm { norm });
    }
    for (index, &phi) in sc.interference_dirs.iter().enumerate() {
        let gain = beam_gain(&sol.awv, &sol.apv, phi);
        if gain > sc.interference_cap + TOL_FEAS {
            violations.push(Violation::Interference {
                index,
                gain,
                cap: sc.interference_cap,
            });
        }
    }
    let actual = min_gain(&sol.awv, &sol.apv, &sc.signal_dirs);
    if (sol.delta - actual).abs() > TOL_FEAS * actual.abs().max(1.0) {
        violations.push(Violation::Delta {
            reported: sol.delta,
            actual,
        });
    }
    FeasibilityReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn steering_broadside_is_all_ones() {
        let apv = Apv::new(vec![0.3, 1.7, 2.9]);
        for a in steering_vector(&apv, PI / 2.0) {
            assert_abs_diff_eq!(a.re, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(a.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn steering_endfire_half_wavelength() {
        let a = steering_vector(&Apv::new(vec![0.0, 0.5]), 0.0);
        assert_abs_diff_eq!(a[0].re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a[1].re, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a[1].im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn steering_matches_elementwise_exponentials() {
        // Values from an independent evaluation of exp(j 2 pi x cos 30deg).
        let a = steering_vector(&Apv::new(vec![0.11, 0.87, 1.93]), 30f64.to_radians());
        let expected = [
            (0.826_151_343_001_099_3, 0.563_448_274_873_106_7),
            (0.021_625_674_299_357_946, -0.999_766_137_759_775_3),
            (-0.473_866_129_071_702_3, -0.880_596_895_133_409_3),
        ];
        for (z, (re, im)) in a.iter().zip(expected) {
            assert_abs_diff_eq!(z.re, re, epsilon = 1e-12);
            assert_abs_diff_eq!(z.im, im, epsilon = 1e-12);
        }
    }

    #[test]
    fn uniform_weights_at_broadside_give_n() {
        let apv = Apv::uniform(5, 0.0, 0.7);
        assert_abs_diff_eq!(beam_gain(&Awv::uniform(5), &apv, PI / 2.0), 5.0, epsilon = 1e-12);
    }

    #[test]
    fn null_for_orthogonal_pair() {
        let apv = Apv::new(vec![0.0, 0.5]);
        assert_abs_diff_eq!(beam_gain(&Awv::uniform(2), &apv, 0.0), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn matched_filter_reaches_full_gain() {
        let apv = Apv::new(vec![0.0, 0.6, 1.9, 2.4, 3.3, 4.8, 5.5, 7.2]);
        let t = 1.1;
        assert_abs_diff_eq!(beam_gain(&Awv::matched(&apv, t), &apv, t), 8.0, epsilon = 1e-12);
    }

    #[test]
    fn pattern_single_point_and_pointwise() {
        let apv = Apv::uniform(4, 0.0, 0.5);
        let w = Awv::uniform(4);
        let p = beam_pattern(&w, &apv, &[PI / 2.0]);
        assert_abs_diff_eq!(p[0].gain, 4.0, epsilon = 1e-12);

        let grid = angle_grid_deg(0.5);
        assert_eq!(grid.len(), 361);
        let pat = beam_pattern(&w, &apv, &grid);
        for (pt, &a) in pat.iter().zip(&grid) {
            assert_eq!(pt.gain, beam_gain(&w, &apv, a));
        }
    }

    #[test]
    fn matched_pattern_peaks_at_steering_angle() {
        let apv = Apv::new(vec![0.0, 0.8, 1.7, 2.3, 3.9]);
        let target = 70f64.to_radians();
        let w = Awv::matched(&apv, target);
        let grid = angle_grid_deg(0.5);
        let pat = beam_pattern(&w, &apv, &grid);
        let best = pat.iter().max_by(|a, b| a.gain.partial_cmp(&b.gain).unwrap()).unwrap();
        assert_abs_diff_eq!(best.angle, target, epsilon = 1e-9);
    }

    #[test]
    fn zero_weights_on_uniform_grid_are_feasible() {
        let sc = Scenario::fig2();
        let d = sc.aperture / (sc.n_antennas as f64 + 1.0);
        let apv = Apv::uniform(8, d, d);
        let sol = Solution::evaluate(apv, Awv::zeros(8), &sc);
        let rep = validate_solution(&sol, &sc);
        assert!(rep.is_feasible(), "{rep:?}");
        assert_eq!(sol.delta, 0.0);
    }

    #[test]
    fn tight_spacing_is_flagged() {
        let sc = Scenario {
            n_antennas: 2,
            signal_dirs: vec![1.0],
            ..Scenario::default()
        };
        let sol = Solution::evaluate(Apv::new(vec![1.0, 1.25]), Awv::zeros(2), &sc);
        let rep = validate_solution(&sol, &sc);
        assert!(matches!(rep.violations[..], [Violation::Spacing { index: 1, .. }]));
        assert_abs_diff_eq!(rep.worst(), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn interference_and_norm_violations_are_reported() {
        let sc = Scenario {
            n_antennas: 2,
            signal_dirs: vec![1.0],
            interference_dirs: vec![PI / 2.0],
            ..Scenario::default()
        };
        let sol = Solution::evaluate(Apv::new(vec![0.0, 1.0]), Awv::uniform(2).scaled(1.5), &sc);
        let rep = validate_solution(&sol, &sc);
        assert!(rep.violations.iter().any(|v| matches!(v, Violation::Norm { .. })));
        assert!(rep
            .violations
            .iter()
            .any(|v| matches!(v, Violation::Interference { index: 0, .. })));
    }

    #[test]
    fn scenario_validation() {
        assert!(Scenario::fig2().validate().is_ok());
        let mut sc = Scenario::fig2();
        sc.n_antennas = 20;
        assert!(sc.validate().is_err());
        let mut sc = Scenario::fig2();
        sc.interference_dirs = vec![PI - 30f64.to_radians() + 1e-6, 1.0];
        // cos(150deg) = -cos(30deg) is not a clash; an identical cosine is.
        assert!(sc.validate().is_ok());
        sc.interference_dirs = vec![30f64.to_radians() + 1e-5];
        assert!(sc.validate().is_err());
        let mut sc = Scenario::fig2();
        sc.signal_dirs.push(0.0);
        assert!(sc.validate().is_err());
    }

    fn arb_case() -> impl Strategy<Value = (Vec<(f64, f64)>, Vec<f64>, f64)> {
        (1usize..8).prop_flat_map(|n| {
            (
                prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n),
                prop::collection::vec(0.0f64..10.0, n),
                0.01f64..3.13,
            )
        })
    }

    proptest! {
        #[test]
        fn steering_entries_have_unit_modulus(x in prop::collection::vec(0.0f64..20.0, 1..12), t in 0.01f64..3.13) {
            for a in steering_vector(&Apv::new(x), t) {
                prop_assert!((a.norm() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn gain_bounded_by_n((w, x, t) in arb_case()) {
            let n = w.len();
            let mut awv = Awv::new(w.into_iter().map(|(r, i)| Complex64::new(r, i)).collect());
            let nrm = awv.norm();
            if nrm > 1.0 { awv = awv.scaled(1.0 / nrm); }
            prop_assert!(beam_gain(&awv, &Apv::new(x), t) <= n as f64 + 1e-9);
        }

        #[test]
        fn gain_is_shift_invariant((w, x, t) in arb_case(), c in -50.0f64..50.0) {
            let awv = Awv::new(w.into_iter().map(|(r, i)| Complex64::new(r, i)).collect());
            let shifted = Apv::new(x.iter().map(|v| v + c).collect());
            let g0 = beam_gain(&awv, &Apv::new(x), t);
            let g1 = beam_gain(&awv, &shifted, t);
            prop_assert!((g0 - g1).abs() <= 1e-9 * g0.max(1.0));
        }

        #[test]
        fn gain_conjugate_symmetry((w, x, t) in arb_case()) {
            let awv = Awv::new(w.into_iter().map(|(r, i)| Complex64::new(r, i)).collect());
            let apv = Apv::new(x);
            let g0 = beam_gain(&awv, &apv, t);
            let g1 = beam_gain(&awv.conj(), &apv, PI - t);
            prop_assert!((g0 - g1).abs() <= 1e-9 * g0.max(1.0));
        }
    }
}
