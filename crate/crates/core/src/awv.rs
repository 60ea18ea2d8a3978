//! Weight optimization for fixed positions by successive convex approximation.
//!
//! Each signal-direction gain `G_k(w) = |w^H a_k|^2` is convex in `w`, so its
//! first-order expansion at `w_t` is a global linear minorizer. Maximizing the
//! smallest minorizer subject to the (already convex) interference caps and the
//! norm budget is a QCQP in the realified weights `[Re w; Im w]`.

use log::debug;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array::{beam_gain, max_gain, min_gain, steering_vector, Apv, Awv, Scenario, TOL_FEAS};
use crate::convex::{solve_maxmin_qcqp, MaxMinQcqp, Quadratic, SolverSettings};
use crate::error::Result;

/// Linear minorizers `G_k(w) >= Re{d_k^H w} + offset_k`, one per signal direction.
#[derive(Debug, Clone, PartialEq)]
pub struct AwvLinearSurrogate {
    pub coeffs: Vec<Vec<Complex64>>,
    pub offsets: Vec<f64>,
    pub expansion: Awv,
}

impl AwvLinearSurrogate {
    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn eval(&self, k: usize, w: &Awv) -> f64 {
        let lin: Complex64 = self.coeffs[k].iter().zip(w.as_slice()).map(|(d, x)| d.conj() * x).sum();
        lin.re + self.offsets[k]
    }

    pub fn min_value(&self, w: &Awv) -> f64 {
        (0..self.len()).map(|k| self.eval(k, w)).fold(f64::INFINITY, f64::min)
    }

    /// Realified form: gradient `[Re d; Im d]` with respect to `[Re w; Im w]`.
    pub fn real_gradient(&self, k: usize) -> Vec<f64> {
        let d = &self.coeffs[k];
        d.iter().map(|c| c.re).chain(d.iter().map(|c| c.im)).collect()
    }

    fn to_quadratic(&self, k: usize) -> Quadratic {
        Quadratic::linear(DVector::from_vec(self.real_gradient(k)), self.offsets[k])
    }
}

/// First-order expansion of every signal-direction gain at `w_t`:
/// `d_k = 2 a_k a_k^H w_t`, `offset_k = -G(w_t, x, theta_k)`.
pub fn build_awv_surrogate(w_t: &Awv, apv: &Apv, sc: &Scenario) -> AwvLinearSurrogate {
    let mut coeffs = Vec::with_capacity(sc.n_signals());
    let mut offsets = Vec::with_capacity(sc.n_signals());
    for &theta in &sc.signal_dirs {
        let a = steering_vector(apv, theta);
        // a^H w_t
        let proj: Complex64 = a.iter().zip(w_t.as_slice()).map(|(ai, wi)| ai.conj() * wi).sum();
        coeffs.push(a.iter().map(|ai| ai * proj * 2.0).collect());
        offsets.push(-proj.norm_sqr());
    }
    AwvLinearSurrogate {
        coeffs,
        offsets,
        expansion: w_t.clone(),
    }
}

/// `w^H a a^H w` as a real quadratic `1/2 v' A v` in `v = [Re w; Im w]`.
pub(crate) fn realified_gain(a: &[Complex64]) -> Quadratic {
    let n = a.len();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let g = a[i] * a[j].conj();
            m[(i, j)] = 2.0 * g.re;
            m[(n + i, n + j)] = 2.0 * g.re;
            m[(i, n + j)] = -2.0 * g.im;
            m[(n + i, j)] = 2.0 * g.im;
        }
    }
    Quadratic::new(m, DVector::zeros(2 * n), 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AwvOutcome {
    pub awv: Awv,
    /// `min_k G` at the start and after every accepted iterate.
    pub trace: Vec<f64>,
    /// Optimal values of each solved subproblem.
    pub surrogate_trace: Vec<f64>,
    pub iterations: usize,
    /// The starting weights had to be shrunk to satisfy the caps.
    pub shrunk_start: bool,
}

fn violates_caps(w: &Awv, apv: &Apv, sc: &Scenario) -> bool {
    w.norm() > 1.0 || max_gain(w, apv, &sc.interference_dirs) > sc.interference_cap
}

/// Runs the weight SCA loop from `w_init` until the min-gain increase drops
/// below `eps_awv` or `max_awv_iters` subproblems have been solved.
pub fn optimize_awv(apv: &Apv, w_init: &Awv, sc: &Scenario, settings: &SolverSettings) -> Result<AwvOutcome> {
    let n = sc.n_antennas;
    let mut w = w_init.clone();
    let mut shrunk_start = false;
    let mut guard = 0;
    while violates_caps(&w, apv, sc) && guard < 2000 {
        w = w.scaled(0.99);
        shrunk_start = true;
        guard += 1;
    }
    if shrunk_start {
        debug!("awv: start shrunk {guard} times to satisfy caps");
    }

    let mut base = MaxMinQcqp::new(2 * n).with_upper(
        Quadratic::new(DMatrix::identity(2 * n, 2 * n) * 2.0, DVector::zeros(2 * n), 0.0),
        1.0,
    );
    for &phi in &sc.interference_dirs {
        base = base.with_upper(realified_gain(&steering_vector(apv, phi)), sc.interference_cap);
    }

    let mut current = min_gain(&w, apv, &sc.signal_dirs);
    let mut trace = vec![current];
    let mut surrogate_trace = Vec::new();
    let mut iterations = 0;
    while iterations < sc.max_awv_iters {
        let sur = build_awv_surrogate(&w, apv, sc);
        let mut prob = base.clone();
        prob.lower = (0..sur.len()).map(|k| sur.to_quadratic(k)).collect();
        let sol =
            solve_maxmin_qcqp(&prob, settings, Some(&w.to_real())).map_err(|e| e.in_stage("awv", trace.clone()))?;
        iterations += 1;
        let cand = Awv::from_real(sol.v.as_slice());
        let gain = min_gain(&cand, apv, &sc.signal_dirs);
        if gain < current || !within_tol(&cand, apv, sc) {
            debug!("awv: iterate {iterations} not accepted ({gain:.6e} < {current:.6e})");
            break;
        }
        surrogate_trace.push(sol.delta);
        trace.push(gain);
        w = cand;
        let increase = gain - current;
        current = gain;
        if increase < sc.eps_awv {
            break;
        }
    }
    Ok(AwvOutcome {
        awv: w,
        trace,
        surrogate_trace,
        iterations,
        shrunk_start,
    })
}

fn within_tol(w: &Awv, apv: &Apv, sc: &Scenario) -> bool {
    w.norm() <= 1.0 + crate::array::TOL_NORM
        && sc
            .interference_dirs
            .iter()
            .all(|&p| beam_gain(w, apv, p) <= sc.interference_cap + TOL_FEAS)
}
