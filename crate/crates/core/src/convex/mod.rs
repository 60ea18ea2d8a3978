//! Small dense convex solvers: a max-min QCQP and a max-min trace SDP, both
//! solved with a primal log-barrier method.

mod barrier;
pub mod qcqp;
pub mod sdp;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use qcqp::{solve_maxmin_qcqp, MaxMinQcqp, QcqpSolution};
pub use sdp::{solve_sdp_maxmin, SdpMaxMin, SdpSolution};

/// Relative tolerance for semi-definiteness checks.
pub const TOL_EIG: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Target duality gap `beta`.
    pub accuracy: f64,
    /// Newton steps allowed per centering.
    pub max_newton_iters: usize,
    pub initial_t: f64,
    /// Barrier weight growth per centering.
    pub mu: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            accuracy: 1e-7,
            max_newton_iters: 200,
            initial_t: 1.0,
            mu: 10.0,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.accuracy > 0.0) || !(self.initial_t > 0.0) || !(self.mu > 1.0) {
            return Err(crate::Error::InvalidInput(format!("invalid solver settings {self:?}")));
        }
        Ok(())
    }
}

/// Optimality evidence for a barrier solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// `nu / t` at the returned central point.
    pub duality_gap: f64,
    /// Infinity norm of the Lagrangian gradient with multipliers `1 / (t * slack)`.
    pub stationarity: f64,
    pub newton_steps: usize,
    /// Barrier objective never increased across accepted Newton steps.
    pub monotone: bool,
}

/// `q(v) = 1/2 v' A v + b' v + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: f64,
}

impl Quadratic {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: f64) -> Self {
        Self { a, b, c }
    }

    pub fn linear(b: DVector<f64>, c: f64) -> Self {
        let n = b.len();
        Self {
            a: DMatrix::zeros(n, n),
            b,
            c,
        }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn eval(&self, v: &DVector<f64>) -> f64 {
        0.5 * v.dot(&(&self.a * v)) + self.b.dot(v) + self.c
    }

    pub fn eval_slice(&self, v: &[f64]) -> f64 {
        self.eval(&DVector::from_column_slice(v))
    }

    pub fn gradient(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.a * v + &self.b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Definiteness {
    NegativeSemi,
    PositiveSemi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigCheck {
    pub pass: bool,
    /// Largest eigenvalue for an NSD check, smallest for a PSD check.
    pub extreme: f64,
    pub tolerance: f64,
}

fn judge(eigs: impl Iterator<Item = f64> + Clone, kind: Definiteness) -> EigCheck {
    let scale = eigs.clone().fold(0.0f64, |m, e| m.max(e.abs()));
    let tolerance = TOL_EIG * scale;
    let (extreme, pass) = match kind {
        Definiteness::NegativeSemi => {
            let e = eigs.fold(f64::NEG_INFINITY, f64::max);
            (e, e <= tolerance)
        }
        Definiteness::PositiveSemi => {
            let e = eigs.fold(f64::INFINITY, f64::min);
            (e, e >= -tolerance)
        }
    };
    EigCheck {
        pass,
        extreme: if extreme.is_finite() { extreme } else { 0.0 },
        tolerance,
    }
}

/// Sign test on the spectrum of a symmetric matrix, tolerance relative to the
/// largest eigenvalue magnitude.
pub fn eig_check(m: &DMatrix<f64>, kind: Definiteness) -> EigCheck {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    judge(eig.eigenvalues.iter().copied(), kind)
}

pub fn eig_check_hermitian(m: &DMatrix<Complex64>, kind: Definiteness) -> EigCheck {
    let herm = (m + m.adjoint()).scale(0.5);
    let eig = herm.symmetric_eigen();
    judge(eig.eigenvalues.iter().copied(), kind)
}
