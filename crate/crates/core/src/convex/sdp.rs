//! Max-min trace SDP over Hermitian PSD matrices:
//!
//! ```text
//! maximize  delta
//! s.t.      Tr(W C_k) >= delta
//!           Tr(W B_l) <= u_l
//!           Tr(W)     <= 1,   W >= 0
//! ```
//!
//! Constraints with a zero cap and PSD `B_l` force `range(W)` orthogonal to
//! `range(B_l)`; those are eliminated up front by restricting `W = P V P^H`
//! to the orthogonal complement, which leaves a problem with a strict interior.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::barrier::{follow_path, BarrierProblem};
use super::{eig_check_hermitian, Certificate, Definiteness, SolverSettings, TOL_EIG};
use crate::error::{Error, Result};

type CMat = DMatrix<Complex64>;

#[derive(Debug, Clone, PartialEq)]
pub struct SdpMaxMin {
    pub dim: usize,
    pub lower: Vec<CMat>,
    pub upper: Vec<(CMat, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub w: CMat,
    /// `min_k Tr(W C_k)` at the returned matrix.
    pub delta: f64,
    pub certificate: Certificate,
}

/// Caps at or below this are treated as exact orthogonality constraints.
const ZERO_CAP: f64 = 1e-12;

impl SdpMaxMin {
    pub fn validate(&self) -> Result<()> {
        let n = self.dim;
        if n == 0 || self.lower.is_empty() {
            return Err(Error::InvalidInput(
                "SDP needs a positive dimension and at least one lower constraint".into(),
            ));
        }
        for m in self.lower.iter().chain(self.upper.iter().map(|(m, _)| m)) {
            if m.shape() != (n, n) {
                return Err(Error::InvalidInput("SDP matrix dimension mismatch".into()));
            }
            let asym = (m - m.adjoint()).iter().fold(0.0f64, |a, z| a.max(z.norm()));
            let scale = m.iter().fold(0.0f64, |a, z| a.max(z.norm())).max(1.0);
            if asym > 1e-10 * scale {
                return Err(Error::InvalidInput("SDP constraint matrix is not Hermitian".into()));
            }
        }
        Ok(())
    }
}

fn re_trace_product(a: &CMat, b: &CMat) -> f64 {
    // Re Tr(A B) = Re sum_ij A_ij B_ji
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    s
}

/// Orthonormal (w.r.t. `Re Tr(A B)`) basis of `r x r` Hermitian matrices, each
/// stored as its non-zero entries.
fn hermitian_basis(r: usize) -> Vec<Vec<(usize, usize, Complex64)>> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut basis = Vec::with_capacity(r * r);
    for a in 0..r {
        basis.push(vec![(a, a, Complex64::new(1.0, 0.0))]);
    }
    for a in 0..r {
        for b in (a + 1)..r {
            basis.push(vec![(a, b, Complex64::new(h, 0.0)), (b, a, Complex64::new(h, 0.0))]);
            basis.push(vec![(a, b, Complex64::new(0.0, -h)), (b, a, Complex64::new(0.0, h))]);
        }
    }
    basis
}

struct Reduced {
    r: usize,
    basis: Vec<Vec<(usize, usize, Complex64)>>,
    /// `Re Tr(E_i C_k)` per lower constraint.
    lower: Vec<DVector<f64>>,
    upper: Vec<(DVector<f64>, f64)>,
    trace: DVector<f64>,
}

impl Reduced {
    fn coeffs(&self, m: &CMat) -> DVector<f64> {
        DVector::from_iterator(
            self.basis.len(),
            self.basis
                .iter()
                .map(|e| e.iter().map(|&(a, b, v)| (v * m[(b, a)]).re).sum::<f64>()),
        )
    }

    fn matrix(&self, y: &[f64]) -> CMat {
        let mut v = CMat::zeros(self.r, self.r);
        for (e, &c) in self.basis.iter().zip(y) {
            for &(a, b, val) in e {
                v[(a, b)] += val * c;
            }
        }
        v
    }

    fn m(&self) -> usize {
        self.basis.len()
    }
}

struct SdpBarrier<'a> {
    red: &'a Reduced,
}

impl SdpBarrier<'_> {
    /// Linear slacks, `log det V` and the Cholesky factor of `V`, or `None`
    /// outside the domain.
    fn eval_parts(&self, z: &DVector<f64>) -> Option<(Vec<f64>, f64, nalgebra::Cholesky<Complex64, nalgebra::Dyn>)> {
        let m = self.red.m();
        let y = z.rows(0, m);
        let delta = z[m];
        let mut slacks = Vec::new();
        for a in &self.red.lower {
            slacks.push(a.dot(&y) - delta);
        }
        for (b, cap) in &self.red.upper {
            slacks.push(cap - b.dot(&y));
        }
        slacks.push(1.0 - self.red.trace.dot(&y));
        if !slacks.iter().all(|s| *s > 0.0 && s.is_finite()) {
            return None;
        }
        let v = self.red.matrix(y.as_slice());
        let ch = v.cholesky()?;
        let logdet = 2.0 * ch.l_dirty().diagonal().iter().map(|d| d.re.ln()).sum::<f64>();
        if !logdet.is_finite() {
            return None;
        }
        Some((slacks, logdet, ch))
    }
}

impl BarrierProblem for SdpBarrier<'_> {
    fn dim(&self) -> usize {
        self.red.m() + 1
    }

    fn nu(&self) -> f64 {
        (self.red.lower.len() + self.red.upper.len() + 1 + self.red.r) as f64
    }

    fn value(&self, z: &DVector<f64>, t: f64) -> Option<f64> {
        let (slacks, logdet, _) = self.eval_parts(z)?;
        let delta = z[self.red.m()];
        Some(-t * delta - slacks.iter().map(|s| s.ln()).sum::<f64>() - logdet)
    }

    fn derivatives(&self, z: &DVector<f64>, t: f64) -> (f64, DVector<f64>, DMatrix<f64>) {
        let m = self.red.m();
        let (slacks, logdet, ch) = self.eval_parts(z).expect("derivatives outside domain");
        let s_inv = ch.inverse();
        let delta = z[m];
        let mut f = -t * delta - logdet;
        let mut g = DVector::zeros(m + 1);
        let mut h = DMatrix::zeros(m + 1, m + 1);
        g[m] = -t;

        let mut push = |slack: f64, grad: &DVector<f64>, g: &mut DVector<f64>, h: &mut DMatrix<f64>| {
            let inv = 1.0 / slack;
            g.axpy(-inv, grad, 1.0);
            h.ger(inv * inv, grad, grad, 1.0);
            f -= slack.ln();
        };
        let mut idx = 0;
        let mut grad = DVector::zeros(m + 1);
        for a in &self.red.lower {
            grad.rows_mut(0, m).copy_from(a);
            grad[m] = -1.0;
            push(slacks[idx], &grad, &mut g, &mut h);
            idx += 1;
        }
        grad[m] = 0.0;
        for (b, _) in &self.red.upper {
            grad.rows_mut(0, m).copy_from(&(-b));
            push(slacks[idx], &grad, &mut g, &mut h);
            idx += 1;
        }
        grad.rows_mut(0, m).copy_from(&(-&self.red.trace));
        push(slacks[idx], &grad, &mut g, &mut h);

        // -log det V: gradient -Re Tr(S E_i), Hessian Re Tr(S E_i S E_j).
        let basis = &self.red.basis;
        for (i, ei) in basis.iter().enumerate() {
            g[i] -= ei.iter().map(|&(a, b, v)| (v * s_inv[(b, a)]).re).sum::<f64>();
            for (j, ej) in basis.iter().enumerate().skip(i) {
                let mut acc = 0.0;
                for &(a, b, e) in ei {
                    for &(c, d, fv) in ej {
                        acc += (e * fv * s_inv[(b, c)] * s_inv[(d, a)]).re;
                    }
                }
                h[(i, j)] += acc;
                if i != j {
                    h[(j, i)] += acc;
                }
            }
        }
        (f, g, h)
    }
}

/// Orthonormal basis (columns) of the complement of the ranges of `mats`.
fn complement_basis(n: usize, mats: &[&CMat]) -> CMat {
    if mats.is_empty() {
        return CMat::identity(n, n);
    }
    let mut sum = CMat::zeros(n, n);
    for m in mats {
        sum += *m;
    }
    let eig = sum.symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    let keep: Vec<usize> = (0..n)
        .filter(|&i| eig.eigenvalues[i] <= TOL_EIG.sqrt() * scale.max(1e-300))
        .collect();
    let mut p = CMat::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        p.set_column(c, &eig.eigenvectors.column(i));
    }
    p
}

pub fn solve_sdp_maxmin(prob: &SdpMaxMin, settings: &SolverSettings) -> Result<SdpSolution> {
    prob.validate()?;
    settings.validate()?;
    let n = prob.dim;
    if let Some((_, cap)) = prob.upper.iter().find(|(_, cap)| *cap < -ZERO_CAP) {
        return Err(Error::Infeasible { residual: -cap });
    }
    let zero_caps: Vec<&CMat> = prob
        .upper
        .iter()
        .filter(|(_, cap)| *cap <= ZERO_CAP)
        .map(|(m, _)| m)
        .collect();
    for m in &zero_caps {
        let chk = eig_check_hermitian(m, Definiteness::PositiveSemi);
        if !chk.pass {
            return Err(Error::InvalidInput(
                "zero-cap constraint matrix must be positive semi-definite".into(),
            ));
        }
    }
    let p = complement_basis(n, &zero_caps);
    let r = p.ncols();
    if r == 0 {
        // Only W = 0 is feasible.
        return Ok(SdpSolution {
            w: CMat::zeros(n, n),
            delta: 0.0,
            certificate: Certificate {
                duality_gap: 0.0,
                stationarity: 0.0,
                newton_steps: 0,
                monotone: true,
            },
        });
    }
    let project = |m: &CMat| p.adjoint() * m * &p;
    let mut red = Reduced {
        r,
        basis: hermitian_basis(r),
        lower: Vec::new(),
        upper: Vec::new(),
        trace: DVector::zeros(0),
    };
    red.lower = prob.lower.iter().map(|c| red.coeffs(&project(c))).collect();
    red.upper = prob
        .upper
        .iter()
        .filter(|(_, cap)| *cap > ZERO_CAP)
        .map(|(b, cap)| (red.coeffs(&project(b)), *cap))
        .collect();
    red.trace = red.coeffs(&CMat::identity(r, r));

    // Start from a scaled identity strictly inside every cap.
    let mut scale = 0.5 / r as f64;
    for (b, cap) in &red.upper {
        let tr = red.trace.iter().zip(b.iter()).map(|(t, bi)| t * bi).sum::<f64>();
        if tr > 0.0 {
            scale = scale.min(0.5 * cap / tr);
        }
    }
    let m = red.m();
    let mut z0 = DVector::zeros(m + 1);
    for i in 0..r {
        z0[i] = scale;
    }
    let y0 = z0.rows(0, m).into_owned();
    let low0 = red.lower.iter().map(|a| a.dot(&y0)).fold(f64::INFINITY, f64::min);
    z0[m] = low0 - low0.abs().max(1.0);

    let barrier = SdpBarrier { red: &red };
    let out = follow_path(&barrier, z0, settings)?;
    let v = red.matrix(&out.z.as_slice()[..m]);
    let w = &p * v * p.adjoint();
    let w = (&w + w.adjoint()).scale(0.5);
    let delta = prob
        .lower
        .iter()
        .map(|c| re_trace_product(&w, c))
        .fold(f64::INFINITY, f64::min);
    Ok(SdpSolution {
        w,
        delta,
        certificate: Certificate {
            duality_gap: out.gap(barrier.nu()),
            stationarity: f64::NAN,
            newton_steps: out.newton_steps,
            monotone: out.monotone,
        },
    })
}

/// `Re Tr(W M)` for Hermitian arguments.
pub fn trace_inner(w: &CMat, m: &CMat) -> f64 {
    re_trace_product(w, m)
}
