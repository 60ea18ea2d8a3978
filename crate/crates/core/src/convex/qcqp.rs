//! Max-min QCQP:
//!
//! ```text
//! maximize  delta
//! s.t.      q_k(v) >= delta     (q_k concave quadratic)
//!           p_l(v) <= u_l       (p_l convex quadratic)
//!           G v    <= h
//! ```
//!
//! Solved by a two-phase log-barrier method. Phase I minimizes the worst
//! constraint value `s` over `(v, s)` until a strictly feasible `v` is found.

use nalgebra::{DMatrix, DVector};

use super::barrier::{follow_path, BarrierProblem};
use super::{eig_check, Certificate, Definiteness, Quadratic, SolverSettings};
use crate::array::TOL_FEAS;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MaxMinQcqp {
    pub dim: usize,
    pub lower: Vec<Quadratic>,
    pub upper: Vec<(Quadratic, f64)>,
    /// Rows of `G` paired with entries of `h`.
    pub linear: Vec<(DVector<f64>, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QcqpSolution {
    pub v: DVector<f64>,
    /// `min_k q_k(v)` at the returned point.
    pub delta: f64,
    pub certificate: Certificate,
    /// Phase I was needed to find a strictly feasible start.
    pub used_phase_one: bool,
}

impl MaxMinQcqp {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            lower: Vec::new(),
            upper: Vec::new(),
            linear: Vec::new(),
        }
    }

    pub fn with_lower(mut self, q: Quadratic) -> Self {
        self.lower.push(q);
        self
    }

    pub fn with_upper(mut self, q: Quadratic, cap: f64) -> Self {
        self.upper.push((q, cap));
        self
    }

    pub fn with_linear(mut self, row: DVector<f64>, rhs: f64) -> Self {
        self.linear.push((row, rhs));
        self
    }

    /// `lo <= v_i <= hi` for every coordinate.
    pub fn with_box(mut self, lo: f64, hi: f64) -> Self {
        for i in 0..self.dim {
            let mut e = DVector::zeros(self.dim);
            e[i] = 1.0;
            self.linear.push((e.clone(), hi));
            self.linear.push((-e, -lo));
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim;
        if self.lower.is_empty() {
            return Err(Error::InvalidInput(
                "max-min QCQP needs at least one lower quadratic".into(),
            ));
        }
        let dims_ok = self
            .lower
            .iter()
            .chain(self.upper.iter().map(|(q, _)| q))
            .all(|q| q.dim() == n && q.a.shape() == (n, n))
            && self.linear.iter().all(|(g, _)| g.len() == n);
        if !dims_ok {
            return Err(Error::InvalidInput("QCQP dimension mismatch".into()));
        }
        for q in &self.lower {
            let chk = eig_check(&q.a, Definiteness::NegativeSemi);
            if !chk.pass {
                return Err(Error::InvalidInput(format!(
                    "lower quadratic is not concave (max eigenvalue {:.3e})",
                    chk.extreme
                )));
            }
        }
        for (q, _) in &self.upper {
            let chk = eig_check(&q.a, Definiteness::PositiveSemi);
            if !chk.pass {
                return Err(Error::InvalidInput(format!(
                    "upper quadratic is not convex (min eigenvalue {:.3e})",
                    chk.extreme
                )));
            }
        }
        Ok(())
    }

    fn n_convex_constraints(&self) -> usize {
        self.upper.len() + self.linear.len()
    }

    /// Values `p_l(v) - u_l` and `g_j v - h_j`; all negative iff strictly feasible.
    fn convex_values(&self, v: &DVector<f64>) -> Vec<f64> {
        self.upper
            .iter()
            .map(|(q, cap)| q.eval(v) - cap)
            .chain(self.linear.iter().map(|(g, h)| g.dot(v) - h))
            .collect()
    }

    pub fn worst_violation(&self, v: &DVector<f64>) -> f64 {
        self.convex_values(v).into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_lower(&self, v: &DVector<f64>) -> f64 {
        self.lower.iter().map(|q| q.eval(v)).fold(f64::INFINITY, f64::min)
    }
}

/// Accumulates `-log(slack)` into value, gradient and Hessian given the slack's
/// gradient and (signed) Hessian.
fn add_log_barrier(
    slack: f64,
    grad_slack: &DVector<f64>,
    hess_slack: Option<(&DMatrix<f64>, f64)>,
    g: &mut DVector<f64>,
    h: &mut DMatrix<f64>,
) -> f64 {
    let inv = 1.0 / slack;
    g.axpy(-inv, grad_slack, 1.0);
    h.ger(inv * inv, grad_slack, grad_slack, 1.0);
    if let Some((hs, sign)) = hess_slack {
        let n = hs.nrows();
        for j in 0..n {
            for i in 0..n {
                h[(i, j)] -= inv * sign * hs[(i, j)];
            }
        }
    }
    -slack.ln()
}

/// Main phase over `z = (v, delta)`: `-t delta - sum log(slacks)`.
struct MainPhase<'a> {
    prob: &'a MaxMinQcqp,
}

impl MainPhase<'_> {
    fn slacks(&self, z: &DVector<f64>) -> Option<(DVector<f64>, f64, Vec<f64>)> {
        let n = self.prob.dim;
        let v = z.rows(0, n).into_owned();
        let delta = z[n];
        let mut s = Vec::with_capacity(self.prob.lower.len() + self.prob.n_convex_constraints());
        for q in &self.prob.lower {
            s.push(q.eval(&v) - delta);
        }
        for c in self.prob.convex_values(&v) {
            s.push(-c);
        }
        s.iter().all(|&x| x > 0.0 && x.is_finite()).then_some((v, delta, s))
    }
}

impl BarrierProblem for MainPhase<'_> {
    fn dim(&self) -> usize {
        self.prob.dim + 1
    }

    fn nu(&self) -> f64 {
        (self.prob.lower.len() + self.prob.n_convex_constraints()) as f64
    }

    fn value(&self, z: &DVector<f64>, t: f64) -> Option<f64> {
        let (_, delta, s) = self.slacks(z)?;
        Some(-t * delta - s.iter().map(|x| x.ln()).sum::<f64>())
    }

    fn derivatives(&self, z: &DVector<f64>, t: f64) -> (f64, DVector<f64>, DMatrix<f64>) {
        let n = self.prob.dim;
        let (v, delta, s) = self.slacks(z).expect("derivatives outside domain");
        let mut g = DVector::zeros(n + 1);
        let mut h = DMatrix::zeros(n + 1, n + 1);
        g[n] = -t;
        let mut f = -t * delta;
        let mut idx = 0;
        let mut grad = DVector::zeros(n + 1);
        for q in &self.prob.lower {
            grad.rows_mut(0, n).copy_from(&q.gradient(&v));
            grad[n] = -1.0;
            f += add_log_barrier(s[idx], &grad, Some((&q.a, 1.0)), &mut g, &mut h);
            idx += 1;
        }
        grad[n] = 0.0;
        for (q, _) in &self.prob.upper {
            grad.rows_mut(0, n).copy_from(&(-q.gradient(&v)));
            f += add_log_barrier(s[idx], &grad, Some((&q.a, -1.0)), &mut g, &mut h);
            idx += 1;
        }
        for (row, _) in &self.prob.linear {
            grad.rows_mut(0, n).copy_from(&(-row));
            f += add_log_barrier(s[idx], &grad, None, &mut g, &mut h);
            idx += 1;
        }
        (f, g, h)
    }
}

/// Phase I over `z = (v, s)`: `t s - sum log(s - c_i(v)) - log(s - floor)`.
struct PhaseOne<'a> {
    prob: &'a MaxMinQcqp,
    floor: f64,
}

impl BarrierProblem for PhaseOne<'_> {
    fn dim(&self) -> usize {
        self.prob.dim + 1
    }

    fn nu(&self) -> f64 {
        (self.prob.n_convex_constraints() + 1) as f64
    }

    fn value(&self, z: &DVector<f64>, t: f64) -> Option<f64> {
        let n = self.prob.dim;
        let v = z.rows(0, n).into_owned();
        let s = z[n];
        let mut f = t * s;
        for c in self
            .prob
            .convex_values(&v)
            .into_iter()
            .chain(std::iter::once(self.floor))
        {
            let slack = s - c;
            if !(slack > 0.0) {
                return None;
            }
            f -= slack.ln();
        }
        Some(f)
    }

    fn derivatives(&self, z: &DVector<f64>, t: f64) -> (f64, DVector<f64>, DMatrix<f64>) {
        let n = self.prob.dim;
        let v = z.rows(0, n).into_owned();
        let s = z[n];
        let mut g = DVector::zeros(n + 1);
        let mut h = DMatrix::zeros(n + 1, n + 1);
        g[n] = t;
        let mut f = t * s;
        let mut grad = DVector::zeros(n + 1);
        grad[n] = 1.0;
        for (q, cap) in &self.prob.upper {
            grad.rows_mut(0, n).copy_from(&(-q.gradient(&v)));
            let slack = s - (q.eval(&v) - cap);
            f += add_log_barrier(slack, &grad, Some((&q.a, -1.0)), &mut g, &mut h);
        }
        for (row, rhs) in &self.prob.linear {
            grad.rows_mut(0, n).copy_from(&(-row));
            f += add_log_barrier(s - (row.dot(&v) - rhs), &grad, None, &mut g, &mut h);
        }
        grad.rows_mut(0, n).fill(0.0);
        f += add_log_barrier(s - self.floor, &grad, None, &mut g, &mut h);
        (f, g, h)
    }

    fn done(&self, z: &DVector<f64>) -> bool {
        let v = z.rows(0, self.prob.dim).into_owned();
        self.prob.worst_violation(&v) < 0.0
    }
}

fn find_strictly_feasible(prob: &MaxMinQcqp, start: DVector<f64>, settings: &SolverSettings) -> Result<DVector<f64>> {
    let worst = prob.worst_violation(&start);
    let s0 = worst.max(0.0) + 1.0;
    let floor = -(1.0 + 10.0 * s0);
    let p1 = PhaseOne { prob, floor };
    let mut z0 = DVector::zeros(prob.dim + 1);
    z0.rows_mut(0, prob.dim).copy_from(&start);
    z0[prob.dim] = s0;
    let p1_settings = SolverSettings {
        accuracy: settings.accuracy.min(TOL_FEAS * 1e-2),
        ..*settings
    };
    let out = follow_path(&p1, z0, &p1_settings)?;
    let v = out.z.rows(0, prob.dim).into_owned();
    let residual = prob.worst_violation(&v);
    if residual < 0.0 {
        return Ok(v);
    }
    if residual > TOL_FEAS {
        return Err(Error::Infeasible { residual });
    }
    Err(Error::NumericalFailure {
        reason: format!("feasible set has no strict interior (phase-I residual {residual:.3e})"),
        last_iterate: Some(v.iter().copied().collect()),
    })
}

/// Solves the max-min QCQP. A strictly feasible `warm_start` skips Phase I.
pub fn solve_maxmin_qcqp(
    prob: &MaxMinQcqp,
    settings: &SolverSettings,
    warm_start: Option<&[f64]>,
) -> Result<QcqpSolution> {
    prob.validate()?;
    settings.validate()?;
    let n = prob.dim;
    let start = match warm_start {
        Some(w) if w.len() == n => DVector::from_column_slice(w),
        Some(w) => {
            return Err(Error::InvalidInput(format!(
                "warm start has length {}, expected {n}",
                w.len()
            )))
        }
        None => DVector::zeros(n),
    };
    let (v0, used_phase_one) = if prob.worst_violation(&start) < 0.0 {
        (start, false)
    } else {
        (find_strictly_feasible(prob, start, settings)?, true)
    };

    let q0 = prob.min_lower(&v0);
    let mut z0 = DVector::zeros(n + 1);
    z0.rows_mut(0, n).copy_from(&v0);
    z0[n] = q0 - q0.abs().max(1.0);

    let main = MainPhase { prob };
    let out = follow_path(&main, z0, settings)?;
    let v = out.z.rows(0, n).into_owned();
    let stationarity = stationarity_residual(prob, &out.z, out.t);
    Ok(QcqpSolution {
        delta: prob.min_lower(&v),
        certificate: Certificate {
            duality_gap: out.gap(main.nu()),
            stationarity,
            newton_steps: out.newton_steps,
            monotone: out.monotone,
        },
        v,
        used_phase_one,
    })
}

/// `|| grad(-delta) + sum_i lambda_i grad c_i ||_inf` with `lambda_i = 1/(t slack_i)`.
fn stationarity_residual(prob: &MaxMinQcqp, z: &DVector<f64>, t: f64) -> f64 {
    let n = prob.dim;
    let v = z.rows(0, n).into_owned();
    let delta = z[n];
    let mut r = DVector::zeros(n + 1);
    r[n] = -1.0;
    for q in &prob.lower {
        let lam = 1.0 / (t * (q.eval(&v) - delta));
        r.rows_mut(0, n).axpy(-lam, &q.gradient(&v), 1.0);
        r[n] += lam;
    }
    for (q, cap) in &prob.upper {
        let lam = 1.0 / (t * (cap - q.eval(&v)));
        r.rows_mut(0, n).axpy(lam, &q.gradient(&v), 1.0);
    }
    for (row, rhs) in &prob.linear {
        let lam = 1.0 / (t * (rhs - row.dot(&v)));
        r.rows_mut(0, n).axpy(lam, row, 1.0);
    }
    r.amax()
}
