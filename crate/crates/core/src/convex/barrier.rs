//! Log-barrier path following with damped Newton centering.

use nalgebra::{DMatrix, DVector};

use super::SolverSettings;
use crate::error::{Error, Result};

/// A barrier-augmented objective `t * f0(z) + phi(z)`.
pub(crate) trait BarrierProblem {
    fn dim(&self) -> usize;

    /// Barrier parameter `nu`: the duality gap at the central point for `t` is
    /// `nu / t`.
    fn nu(&self) -> f64;

    /// Value at `z`, or `None` outside the barrier's domain.
    fn value(&self, z: &DVector<f64>, t: f64) -> Option<f64>;

    /// Value, gradient and Hessian at `z` (which must be in the domain).
    fn derivatives(&self, z: &DVector<f64>, t: f64) -> (f64, DVector<f64>, DMatrix<f64>);

    /// Optional early exit, checked after every centering step.
    fn done(&self, _z: &DVector<f64>) -> bool {
        false
    }
}

#[derive(Debug, Clone)]
pub(crate) struct PathOutcome {
    pub z: DVector<f64>,
    /// `t` of the last completed centering.
    pub t: f64,
    pub newton_steps: usize,
    pub centering_steps: usize,
    /// False if any accepted Newton step increased the barrier objective.
    pub monotone: bool,
    /// True when line search could not make progress and the run was cut short.
    pub stalled: bool,
}

impl PathOutcome {
    pub fn gap(&self, nu: f64) -> f64 {
        nu / self.t
    }
}

const ARMIJO: f64 = 0.25;
const BACKTRACK: f64 = 0.5;
const NEWTON_TOL: f64 = 1e-10;

/// Solves `H d = -g`, adding diagonal regularization until the Cholesky
/// factorization succeeds.
fn newton_direction(h: DMatrix<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = h.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let mut reg = 0.0;
    for _ in 0..12 {
        let mut hh = h.clone();
        if reg > 0.0 {
            for i in 0..hh.nrows() {
                hh[(i, i)] += reg;
            }
        }
        if let Some(ch) = hh.cholesky() {
            let d = ch.solve(&(-g));
            if d.iter().all(|v| v.is_finite()) {
                return Some(d);
            }
        }
        reg = if reg == 0.0 { scale * 1e-14 } else { reg * 100.0 };
    }
    None
}

/// Follows the central path from a strictly feasible `z0` until the gap
/// `nu / t` drops below `settings.accuracy` or `prob.done` fires.
pub(crate) fn follow_path<P: BarrierProblem>(
    prob: &P,
    z0: DVector<f64>,
    settings: &SolverSettings,
) -> Result<PathOutcome> {
    debug_assert_eq!(z0.len(), prob.dim());
    if prob.value(&z0, settings.initial_t).is_none() {
        return Err(Error::numerical("barrier start point is not strictly feasible"));
    }
    let nu = prob.nu();
    let mut z = z0;
    let mut t = settings.initial_t;
    let mut out = PathOutcome {
        z: z.clone(),
        t,
        newton_steps: 0,
        centering_steps: 0,
        monotone: true,
        stalled: false,
    };
    loop {
        let mut stalled = false;
        for _ in 0..settings.max_newton_iters {
            let (f, g, h) = prob.derivatives(&z, t);
            let Some(d) = newton_direction(h, &g) else {
                stalled = true;
                break;
            };
            let slope = g.dot(&d);
            if -slope / 2.0 <= NEWTON_TOL {
                break;
            }
            let mut s = 1.0;
            let mut accepted = None;
            while s > 1e-16 {
                let cand = &z + &d * s;
                if let Some(fc) = prob.value(&cand, t) {
                    if fc <= f + ARMIJO * s * slope {
                        accepted = Some((cand, fc));
                        break;
                    }
                }
                s *= BACKTRACK;
            }
            out.newton_steps += 1;
            match accepted {
                Some((cand, fc)) => {
                    if fc > f {
                        out.monotone = false;
                    }
                    z = cand;
                }
                None => {
                    stalled = true;
                    break;
                }
            }
        }
        if stalled {
            if out.centering_steps == 0 {
                return Err(Error::NumericalFailure {
                    reason: "Newton centering stalled at the first barrier weight".into(),
                    last_iterate: Some(z.iter().copied().collect()),
                });
            }
            // Keep the last fully centered point; its gap is still certified.
            out.stalled = true;
            return Ok(out);
        }
        out.centering_steps += 1;
        out.z = z.clone();
        out.t = t;
        if nu / t < settings.accuracy || prob.done(&z) {
            return Ok(out);
        }
        t *= settings.mu;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// minimize t*x - log(x) - log(1 - x); optimum x -> 0.
    struct Interval;

    impl BarrierProblem for Interval {
        fn dim(&self) -> usize {
            1
        }
        fn nu(&self) -> f64 {
            2.0
        }
        fn value(&self, z: &DVector<f64>, t: f64) -> Option<f64> {
            let x = z[0];
            (x > 0.0 && x < 1.0).then(|| t * x - x.ln() - (1.0 - x).ln())
        }
        fn derivatives(&self, z: &DVector<f64>, t: f64) -> (f64, DVector<f64>, DMatrix<f64>) {
            let x = z[0];
            let f = self.value(z, t).unwrap();
            let g = t - 1.0 / x + 1.0 / (1.0 - x);
            let h = 1.0 / (x * x) + 1.0 / ((1.0 - x) * (1.0 - x));
            (f, DVector::from_element(1, g), DMatrix::from_element(1, 1, h))
        }
    }

    #[test]
    fn interval_converges_to_boundary() {
        let s = SolverSettings::default();
        let out = follow_path(&Interval, DVector::from_element(1, 0.5), &s).unwrap();
        assert!(out.z[0] < 1e-6);
        assert!(out.gap(2.0) < s.accuracy);
        assert!(out.monotone);
    }

    #[test]
    fn infeasible_start_is_rejected() {
        let s = SolverSettings::default();
        assert!(follow_path(&Interval, DVector::from_element(1, 1.5), &s).is_err());
    }
}
