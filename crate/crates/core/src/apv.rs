//! Position optimization for fixed weights by successive convex approximation.
//!
//! With `w_n = |w_n| e^{j arg w_n}` the gain toward spatial frequency `k` is
//!
//! ```text
//! G(x) = sum_{n,m} |w_n w_m| cos(k (x_n - x_m) - (arg w_n - arg w_m))
//! ```
//!
//! Replacing each cosine by the quadratic `cos z0 - sin z0 (z - z0) -/+ 1/2 (z - z0)^2`
//! (a global lower/upper bound on `cos z`) gives a concave lower bound for
//! signal directions and a convex upper bound for interference directions,
//! both tight at the expansion point.

use log::debug;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::array::{beam_gain, min_gain, spatial_freq, Apv, Awv, Scenario, TOL_FEAS};
use crate::convex::{solve_maxmin_qcqp, MaxMinQcqp, Quadratic, SolverSettings};
use crate::error::{Error, Result};

/// `cos z >= cos z0 - sin z0 (z - z0) - (z - z0)^2 / 2`.
pub fn cos_minorizer(z: f64, z0: f64) -> f64 {
    let d = z - z0;
    z0.cos() - z0.sin() * d - 0.5 * d * d
}

/// `cos z <= cos z0 - sin z0 (z - z0) + (z - z0)^2 / 2`.
pub fn cos_majorizer(z: f64, z0: f64) -> f64 {
    let d = z - z0;
    z0.cos() - z0.sin() * d + 0.5 * d * d
}

/// Amplitude/phase split of a weight vector.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightAmplitudeProfile {
    pub amplitudes: Vec<f64>,
    pub phases: Vec<f64>,
    /// `sum_n |w_n|`.
    pub gamma: f64,
    /// Diagonal of `diag(sqrt|w_n|)`.
    pub root_amplitudes: Vec<f64>,
}

impl WeightAmplitudeProfile {
    pub fn new(w: &Awv) -> Self {
        let amplitudes = w.amplitudes();
        let gamma = amplitudes.iter().sum();
        Self {
            root_amplitudes: amplitudes.iter().map(|a| a.sqrt()).collect(),
            phases: w.phases(),
            amplitudes,
            gamma,
        }
    }

    /// `gamma * diag(w_bar) - w_bar w_bar'`, which is PSD.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let n = self.amplitudes.len();
        let a = &self.amplitudes;
        DMatrix::from_fn(n, n, |i, j| {
            let diag = if i == j { self.gamma * a[i] } else { 0.0 };
            diag - a[i] * a[j]
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// Signal direction `k`; surrogate is a global lower bound.
    Signal(usize),
    /// Interference direction `l`; surrogate is a global upper bound.
    Interference(usize),
}

/// `1/2 x' A x + b' x + c`, a one-sided bound on `G(w, x, angle)` tight at
/// `expansion`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateQuadratic {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: f64,
    pub side: Side,
    pub expansion: Apv,
}

impl SurrogateQuadratic {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let v = DVector::from_column_slice(x);
        0.5 * v.dot(&(&self.a * &v)) + self.b.dot(&v) + self.c
    }

    /// Gradient `A x + b` at `x`.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(x);
        (&self.a * v + &self.b).iter().copied().collect()
    }

    pub fn to_quadratic(&self) -> Quadratic {
        Quadratic::new(self.a.clone(), self.b.clone(), self.c)
    }
}

/// Coefficients of the bound for spatial frequency `k`. `curv` is `-1` for the
/// lower bound and `+1` for the upper bound.
fn build_surrogate(w: &Awv, x_i: &Apv, angle: f64, curv: f64, side: Side) -> SurrogateQuadratic {
    let prof = WeightAmplitudeProfile::new(w);
    let k = spatial_freq(angle);
    let n = x_i.len();
    let x = x_i.as_slice();
    let amp = &prof.amplitudes;
    let ph = &prof.phases;

    let a = prof.laplacian() * (2.0 * curv * k * k);
    let mut b = DVector::zeros(n);
    let mut c = 0.0;
    for p in 0..n {
        for q in 0..n {
            let wpq = amp[p] * amp[q];
            if wpq == 0.0 {
                continue;
            }
            let dx = x[p] - x[q];
            let f0 = k * dx - (ph[p] - ph[q]);
            let (s0, c0) = f0.sin_cos();
            b[p] += -2.0 * curv * k * k * wpq * dx - 2.0 * k * wpq * s0;
            c += wpq * (c0 + k * s0 * dx + 0.5 * curv * k * k * dx * dx);
        }
    }
    SurrogateQuadratic {
        a,
        b,
        c,
        side,
        expansion: x_i.clone(),
    }
}

/// Concave quadratic lower bound on `G(w, ., theta)`, tight at `x_i`.
pub fn signal_surrogate(w: &Awv, x_i: &Apv, theta: f64, k: usize) -> SurrogateQuadratic {
    build_surrogate(w, x_i, theta, -1.0, Side::Signal(k))
}

/// Convex quadratic upper bound on `G(w, ., phi)`, tight at `x_i`.
pub fn interference_surrogate(w: &Awv, x_i: &Apv, phi: f64, l: usize) -> SurrogateQuadratic {
    build_surrogate(w, x_i, phi, 1.0, Side::Interference(l))
}

/// Box and spacing constraints as rows `g' x <= h`.
pub(crate) fn geometry_constraints(sc: &Scenario) -> Vec<(DVector<f64>, f64)> {
    let n = sc.n_antennas;
    let mut rows = Vec::with_capacity(n + 1);
    let mut first = DVector::zeros(n);
    first[0] = -1.0;
    rows.push((first, 0.0));
    let mut last = DVector::zeros(n);
    last[n - 1] = 1.0;
    rows.push((last, sc.aperture));
    for i in 1..n {
        let mut r = DVector::zeros(n);
        r[i - 1] = 1.0;
        r[i] = -1.0;
        rows.push((r, -sc.min_spacing));
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApvOutcome {
    pub apv: Apv,
    /// `min_k G` at the start and after every accepted iterate.
    pub trace: Vec<f64>,
    pub surrogate_trace: Vec<f64>,
    pub iterations: usize,
    /// Weights reordered to follow their antennas, for blocks that let
    /// antennas pass each other.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub awv: Option<Awv>,
    /// A subproblem was infeasible or numerically stuck and the loop returned
    /// the last accepted positions.
    pub stalled: bool,
}

fn true_feasible(w: &Awv, x: &Apv, sc: &Scenario) -> bool {
    x.violations(sc.aperture, sc.min_spacing, TOL_FEAS).is_empty()
        && sc
            .interference_dirs
            .iter()
            .all(|&p| beam_gain(w, x, p) <= sc.interference_cap + TOL_FEAS)
}

/// Runs the position SCA loop from `x_init` until the min-gain increase drops
/// below `eps_apv` or `max_apv_iters` subproblems have been solved.
pub fn optimize_apv(w: &Awv, x_init: &Apv, sc: &Scenario, settings: &SolverSettings) -> Result<ApvOutcome> {
    let n = sc.n_antennas;
    if x_init.len() != n || w.len() != n {
        return Err(Error::InvalidInput("position/weight length mismatch".into()));
    }
    let geometry = geometry_constraints(sc);
    let mut x = x_init.clone();
    let mut current = min_gain(w, &x, &sc.signal_dirs);
    let mut trace = vec![current];
    let mut surrogate_trace = Vec::new();
    let mut iterations = 0;
    let mut stalled = false;
    while iterations < sc.max_apv_iters {
        let mut prob = MaxMinQcqp::new(n);
        prob.linear = geometry.clone();
        for (k, &theta) in sc.signal_dirs.iter().enumerate() {
            prob.lower.push(signal_surrogate(w, &x, theta, k).to_quadratic());
        }
        for (l, &phi) in sc.interference_dirs.iter().enumerate() {
            prob.upper.push((
                interference_surrogate(w, &x, phi, l).to_quadratic(),
                sc.interference_cap,
            ));
        }
        iterations += 1;
        let sol = match solve_maxmin_qcqp(&prob, settings, Some(x.as_slice())) {
            Ok(s) => s,
            Err(e @ (Error::Infeasible { .. } | Error::NumericalFailure { .. })) => {
                debug!("apv: stall at iteration {iterations}: {e}");
                stalled = true;
                break;
            }
            Err(e) => return Err(e.in_stage("apv", trace)),
        };
        let cand = Apv::new(sol.v.iter().copied().collect());
        let gain = min_gain(w, &cand, &sc.signal_dirs);
        if gain < current || !true_feasible(w, &cand, sc) {
            debug!("apv: iterate {iterations} not accepted ({gain:.6e} vs {current:.6e})");
            break;
        }
        surrogate_trace.push(sol.delta);
        trace.push(gain);
        x = cand;
        let increase = gain - current;
        current = gain;
        if increase < sc.eps_apv {
            break;
        }
    }
    Ok(ApvOutcome {
        apv: x,
        trace,
        surrogate_trace,
        iterations,
        awv: None,
        stalled,
    })
}
