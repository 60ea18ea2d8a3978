//! Autocorrelation sequences of weight vectors on a uniform array and their
//! minimum-phase spectral factorization.
//!
//! For `w` of length `N` the autocorrelation at lag `l = p - q` is
//! `r_l = sum_p w_p conj(w_{p-l})`, `l = -(N-1) ..= N-1`. On a uniform array
//! with spacing `d` the gain `|w^H a(theta)|^2` only depends on `r`, so any
//! `w` with the same `r` has the same beam pattern.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::array::Awv;
use crate::error::{Error, Result};

/// Max absolute autocorrelation error accepted from a factorization.
pub const TOL_SPEC: f64 = 1e-6;

/// Relative mismatch `|eta - 1/conj(xi)| / |1/conj(xi)|` above which two roots
/// are not accepted as a conjugate-reciprocal pair.
const PAIR_TOL: f64 = 1e-2;

/// Roots with `|ln |xi|| below this are treated as lying on the unit circle.
const UNIT_BAND: f64 = 1e-4;

/// Autocorrelation stored by lag: index `i` holds lag `i - (N-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AutocorrSeq {
    pub r: Vec<Complex64>,
}

impl AutocorrSeq {
    pub fn new(r: Vec<Complex64>) -> Result<Self> {
        if r.len() % 2 == 0 {
            return Err(Error::InvalidInput(format!(
                "autocorrelation length must be odd, got {}",
                r.len()
            )));
        }
        Ok(Self { r })
    }

    /// Number of array elements `N`.
    pub fn n(&self) -> usize {
        (self.r.len() + 1) / 2
    }

    pub fn lag(&self, l: isize) -> Complex64 {
        self.r[(l + self.n() as isize - 1) as usize]
    }

    /// `r_0`, the energy `||w||^2` (or `Tr W`).
    pub fn energy(&self) -> f64 {
        self.lag(0).re
    }

    /// Largest `|r_l - conj(r_{-l})|`.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let m = self.r.len();
        (0..m)
            .map(|i| (self.r[i] - self.r[m - 1 - i].conj()).norm())
            .fold(0.0, f64::max)
    }

    /// `R(omega) = sum_l r_l e^{-j omega l}`; real for a conjugate-symmetric
    /// sequence.
    pub fn spectrum(&self, omega: f64) -> f64 {
        let n1 = self.n() as isize - 1;
        self.r
            .iter()
            .enumerate()
            .map(|(i, v)| v * Complex64::from_polar(1.0, -omega * (i as isize - n1) as f64))
            .sum::<Complex64>()
            .re
    }

    /// Smallest spectrum value over `samples` equispaced frequencies.
    pub fn min_spectrum(&self, samples: usize) -> f64 {
        (0..samples)
            .map(|s| self.spectrum(2.0 * std::f64::consts::PI * s as f64 / samples as f64))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_diff(&self, other: &AutocorrSeq) -> f64 {
        if self.r.len() != other.r.len() {
            return f64::INFINITY;
        }
        self.r
            .iter()
            .zip(&other.r)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Diagonal sums of an `N x N` matrix: `r_l = sum_{p - q = l} W[p, q]`.
pub fn autocorrelation(w0: &DMatrix<Complex64>) -> AutocorrSeq {
    let n = w0.nrows();
    let mut r = vec![Complex64::new(0.0, 0.0); 2 * n - 1];
    for p in 0..n {
        for q in 0..n {
            r[p + n - 1 - q] += w0[(p, q)];
        }
    }
    AutocorrSeq { r }
}

/// Autocorrelation of a weight vector, `r_l = sum_p w_p conj(w_{p-l})`.
pub fn vector_autocorrelation(w: &Awv) -> AutocorrSeq {
    let w = w.as_slice();
    let n = w.len();
    let mut r = vec![Complex64::new(0.0, 0.0); 2 * n - 1];
    for p in 0..n {
        for q in 0..n {
            r[p + n - 1 - q] += w[p] * w[q].conj();
        }
    }
    AutocorrSeq { r }
}

fn horner(coef: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coef {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Roots of the polynomial with descending coefficients `coef` (leading entry
/// nonzero), from the companion-matrix eigenvalues refined by Newton steps.
pub fn polynomial_roots(coef: &[Complex64]) -> Result<Vec<Complex64>> {
    let deg = coef.len().saturating_sub(1);
    if deg == 0 {
        return Ok(vec![]);
    }
    let lead = coef[0];
    let mut comp = DMatrix::<Complex64>::zeros(deg, deg);
    for j in 0..deg {
        comp[(0, j)] = -coef[j + 1] / lead;
    }
    for i in 1..deg {
        comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    let eig = Schur::try_new(comp, f64::EPSILON, 10_000)
        .and_then(|s| s.eigenvalues())
        .ok_or_else(|| Error::FactorizationFailure {
            reason: "companion eigenvalue iteration did not converge".into(),
            cluster: vec![],
        })?;
    Ok(eig
        .iter()
        .map(|&z0| {
            let mut z = z0;
            let (mut pz, _) = horner(coef, z);
            for _ in 0..5 {
                let (p, dp) = horner(coef, z);
                if dp.norm() == 0.0 {
                    break;
                }
                let cand = z - p / dp;
                let (pc, _) = horner(coef, cand);
                if !(pc.norm() < pz.norm()) {
                    break;
                }
                z = cand;
                pz = pc;
            }
            z
        })
        .collect())
}

/// Multiplies out `prod (z - root)`, descending coefficients.
fn poly_from_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for &x in roots {
        c.push(Complex64::new(0.0, 0.0));
        for i in (1..c.len()).rev() {
            let prev = c[i - 1];
            c[i] -= x * prev;
        }
    }
    c
}

fn cluster(roots: &[Complex64]) -> Vec<(f64, f64)> {
    roots.iter().map(|z| (z.norm(), z.arg())).collect()
}

/// Minimum-phase spectral factor: returns `w` with `vector_autocorrelation(w)
/// == r` (within [`TOL_SPEC`]), all zeros of `sum_p w_p z^{N-1-p}` in the closed
/// unit disk and `w_0 > 0`.
pub fn spectral_factorize(r: &AutocorrSeq) -> Result<Awv> {
    let n = r.n();
    let r0 = r.energy();
    if !(r0 >= 0.0) {
        return Err(Error::InvalidInput(format!("autocorrelation energy {r0} is negative")));
    }
    if r0 == 0.0 {
        return Ok(Awv::zeros(n));
    }
    let scale = r.r.iter().map(|z| z.norm()).fold(0.0, f64::max);
    // Negligible outer lags: each trimmed pair contributes a zero root of the
    // factor (and its partner at infinity).
    let thresh = 1e-12 * scale;
    let mut trim = 0;
    while trim < n - 1 && r.r[trim].norm() <= thresh && r.r[2 * n - 2 - trim].norm() <= thresh {
        trim += 1;
    }
    let coef = &r.r[trim..2 * n - 1 - trim];
    let roots = polynomial_roots(coef)?;

    // Greedy pairing, farthest from the unit circle first.
    let mut order: Vec<usize> = (0..roots.len()).collect();
    order.sort_by(|&a, &b| roots[b].norm().ln().abs().total_cmp(&roots[a].norm().ln().abs()));
    let mut used = vec![false; roots.len()];
    let mut chosen = vec![Complex64::new(0.0, 0.0); trim];
    for &i in &order {
        if used[i] {
            continue;
        }
        used[i] = true;
        let xi = roots[i];
        if xi.norm() == 0.0 {
            return Err(Error::FactorizationFailure {
                reason: "zero root without a partner at infinity".into(),
                cluster: cluster(&[xi]),
            });
        }
        let target = Complex64::new(1.0, 0.0) / xi.conj();
        let partner = (0..roots.len())
            .filter(|&j| !used[j])
            .min_by(|&a, &b| (roots[a] - target).norm().total_cmp(&(roots[b] - target).norm()));
        let Some(j) = partner else {
            return Err(Error::FactorizationFailure {
                reason: "odd number of roots left unpaired".into(),
                cluster: cluster(&[xi]),
            });
        };
        let eta = roots[j];
        let mismatch = (eta - target).norm() / target.norm();
        if mismatch > PAIR_TOL {
            return Err(Error::FactorizationFailure {
                reason: format!("conjugate-reciprocal pairing mismatch {mismatch:.2e}"),
                cluster: cluster(&[xi, eta]),
            });
        }
        used[j] = true;
        let pick = if xi.norm().ln().abs() < UNIT_BAND && eta.norm().ln().abs() < UNIT_BAND {
            let avg = (xi + eta) * 0.5;
            if avg.norm() == 0.0 {
                return Err(Error::FactorizationFailure {
                    reason: "unit-circle pair averages to zero".into(),
                    cluster: cluster(&[xi, eta]),
                });
            }
            avg / avg.norm()
        } else if xi.norm() <= eta.norm() {
            xi
        } else {
            eta
        };
        chosen.push(pick);
    }
    debug_assert_eq!(chosen.len(), n - 1);

    let poly = poly_from_roots(&chosen);
    let energy: f64 = poly.iter().map(|c| c.norm_sqr()).sum();
    let c = (r0 / energy).sqrt();
    let w = Awv::new(poly.into_iter().map(|p| p * c).collect());
    let err = vector_autocorrelation(&w).max_abs_diff(r);
    if err > TOL_SPEC {
        return Err(Error::FactorizationFailure {
            reason: format!("autocorrelation roundtrip error {err:.2e}"),
            cluster: cluster(&chosen),
        });
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{beam_gain, steering_vector, Apv};
    use crate::convex::sdp::trace_inner;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_w(rng: &mut ChaCha8Rng, n: usize) -> Awv {
        Awv::new(
            (0..n)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
        )
    }

    fn outer(w: &Awv) -> DMatrix<Complex64> {
        let n = w.len();
        DMatrix::from_fn(n, n, |p, q| w.0[p] * w.0[q].conj())
    }

    #[test]
    fn scaled_identity_is_an_impulse() {
        let n = 5;
        let w = DMatrix::<Complex64>::identity(n, n) / Complex64::new(n as f64, 0.0);
        let r = autocorrelation(&w);
        for (i, v) in r.r.iter().enumerate() {
            let expect = if i == n - 1 { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(v.re, expect, epsilon = 1e-15);
            assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-15);
        }
        let f = spectral_factorize(&r).unwrap();
        assert_abs_diff_eq!(f.0[0].re, 1.0, epsilon = 1e-12);
        assert!(f.0[1..].iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn matrix_and_vector_forms_agree() {
        // Independent oracle: the lag sum written directly in terms of w.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = random_w(&mut rng, 6);
        let r = autocorrelation(&outer(&w));
        let n = 6isize;
        for m in 1..=(2 * n - 1) {
            let mut s = Complex64::new(0.0, 0.0);
            for p in 1..=n {
                let q = p - m + n;
                if (1..=n).contains(&q) {
                    s += w.0[(p - 1) as usize] * w.0[(q - 1) as usize].conj();
                }
            }
            assert!((r.r[(m - 1) as usize] - s).norm() < 1e-13);
        }
        assert!(r.max_abs_diff(&vector_autocorrelation(&w)) < 1e-13);
    }

    #[test]
    fn roundtrip_random_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in 1..=10 {
            for _ in 0..20 {
                let w = random_w(&mut rng, n);
                let r = vector_autocorrelation(&w);
                let f = spectral_factorize(&r).unwrap();
                assert!(vector_autocorrelation(&f).max_abs_diff(&r) <= TOL_SPEC);
                assert_abs_diff_eq!(f.norm().powi(2), r.energy(), epsilon = 1e-10);
                assert!(f.0[0].im.abs() < 1e-12 && f.0[0].re > 0.0);
            }
        }
    }

    #[test]
    fn roundtrip_full_rank_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for n in 2..=8 {
            let mut w0 = DMatrix::<Complex64>::zeros(n, n);
            for _ in 0..3 {
                w0 += outer(&random_w(&mut rng, n));
            }
            let tr = w0.trace().re;
            w0 /= Complex64::new(tr, 0.0);
            let r = autocorrelation(&w0);
            let f = spectral_factorize(&r).unwrap();
            assert!(vector_autocorrelation(&f).max_abs_diff(&r) <= TOL_SPEC);
        }
    }

    #[test]
    fn unit_circle_double_roots() {
        // w has zeros exactly on the unit circle, so R has double roots there.
        let roots = [
            Complex64::from_polar(1.0, 0.7),
            Complex64::from_polar(1.0, -2.0),
            Complex64::new(0.3, 0.1),
        ];
        let w = Awv::new(poly_from_roots(&roots)).scaled(0.4);
        let r = vector_autocorrelation(&w);
        let f = spectral_factorize(&r).unwrap();
        assert!(vector_autocorrelation(&f).max_abs_diff(&r) <= TOL_SPEC);
    }

    #[test]
    fn gains_match_traces_on_uniform_array() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = random_w(&mut rng, 7);
        let w = w.scaled(1.0 / w.norm());
        let w0 = outer(&w);
        let f = spectral_factorize(&autocorrelation(&w0)).unwrap();
        let apv = Apv::uniform(7, 0.3, 0.7);
        for i in 0..361 {
            let t = (i as f64 * 0.5).to_radians().clamp(1e-9, std::f64::consts::PI - 1e-9);
            let a = steering_vector(&apv, t);
            let g = DMatrix::from_fn(7, 7, |p, q| a[p] * a[q].conj());
            assert!((beam_gain(&f, &apv, t) - trace_inner(&w0, &g)).abs() < 1e-6);
        }
    }

    #[test]
    fn spectrum_of_psd_matrix_is_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut w0 = DMatrix::<Complex64>::zeros(6, 6);
        for _ in 0..4 {
            w0 += outer(&random_w(&mut rng, 6));
        }
        let r = autocorrelation(&w0);
        assert!(r.conjugate_asymmetry() < 1e-12);
        assert!(r.min_spectrum(1024) >= -1e-8);
    }

    #[test]
    fn even_length_is_rejected() {
        assert!(AutocorrSeq::new(vec![Complex64::new(1.0, 0.0); 4]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn factorization_is_sound(seed in any::<u64>(), n in 1usize..9) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = random_w(&mut rng, n);
            let r = vector_autocorrelation(&w);
            let f = spectral_factorize(&r).unwrap();
            prop_assert!(vector_autocorrelation(&f).max_abs_diff(&r) <= TOL_SPEC);
        }
    }
}
