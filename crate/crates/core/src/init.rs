//! Starting point for the alternating loop: a uniform array and the weights
//! that are globally optimal for it.
//!
//! The max-min weight problem on a fixed array is relaxed to an SDP over
//! `W = w w^H`. On a uniform array every gain is a function of the diagonal
//! sums of `W` alone, so a spectral factor of those sums is a vector `w` with
//! exactly the gains of `W`.

use log::{debug, warn};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array::{min_gain, steering_vector, Apv, Awv, Scenario};
use crate::convex::{solve_sdp_maxmin, SdpMaxMin, SolverSettings};
use crate::error::Result;
use crate::spectral::{autocorrelation, spectral_factorize};

/// `lambda_2 <= RANK_ONE_RATIO * lambda_1` counts as rank one.
pub const RANK_ONE_RATIO: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMethod {
    /// SDP solution was numerically rank one.
    RankOne,
    SpectralFactor,
    /// Principal eigenvector of the SDP solution (non-uniform array, or the
    /// factorization failed).
    PrincipalEigenvector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialPoint {
    pub apv: Apv,
    pub awv: Awv,
    /// Optimal SDP value on `apv`.
    pub delta0: f64,
    pub method: InitMethod,
}

impl InitialPoint {
    pub fn min_gain(&self, sc: &Scenario) -> f64 {
        min_gain(&self.awv, &self.apv, &sc.signal_dirs)
    }
}

/// `D/(N+1)`-spaced positions strictly inside `[0, D]`; if that spacing is
/// below `D0`, spacing `D0` centered in the aperture.
pub fn uniform_apv(sc: &Scenario) -> Apv {
    let n = sc.n_antennas;
    let d = sc.aperture / (n + 1) as f64;
    if d >= sc.min_spacing {
        Apv::uniform(n, d, d)
    } else {
        let span = (n - 1) as f64 * sc.min_spacing;
        Apv::uniform(n, 0.5 * (sc.aperture - span), sc.min_spacing)
    }
}

/// `a(x, theta) a(x, theta)^H`.
pub fn gamma(apv: &Apv, theta: f64) -> DMatrix<Complex64> {
    let a = steering_vector(apv, theta);
    let n = a.len();
    DMatrix::from_fn(n, n, |p, q| a[p] * a[q].conj())
}

/// Solves the SDP relaxation of the weight problem on the positions `x0`.
pub fn solve_p0(x0: &Apv, sc: &Scenario, settings: &SolverSettings) -> Result<(DMatrix<Complex64>, f64)> {
    let prob = SdpMaxMin {
        dim: x0.len(),
        lower: sc.signal_dirs.iter().map(|&t| gamma(x0, t)).collect(),
        upper: sc
            .interference_dirs
            .iter()
            .map(|&p| (gamma(x0, p), sc.interference_cap))
            .collect(),
    };
    let sol = solve_sdp_maxmin(&prob, settings)?;
    Ok((sol.w, sol.delta))
}

/// `sqrt(lambda_1) u_1` with the first nonzero entry made real positive.
fn principal(eig: &SymmetricEigen<Complex64, nalgebra::Dyn>) -> (Awv, f64, f64) {
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let l1 = eig.eigenvalues[idx[0]].max(0.0);
    let l2 = idx.get(1).map_or(0.0, |&i| eig.eigenvalues[i].max(0.0));
    let u = eig.eigenvectors.column(idx[0]);
    let w: Vec<Complex64> = u.iter().map(|z| z * l1.sqrt()).collect();
    (canonical_phase(Awv::new(w)), l1, l2)
}

/// Rotates the global phase so the first nonzero entry is real positive.
pub fn canonical_phase(w: Awv) -> Awv {
    let Some(first) = w.0.iter().find(|z| z.norm() > 0.0).copied() else {
        return w;
    };
    let rot = first.conj() / first.norm();
    Awv::new(w.0.into_iter().map(|z| z * rot).collect())
}

/// Extracts weights from an SDP solution. `uniform` says whether the array
/// is uniformly spaced, which is what makes the spectral factor exact.
pub fn weights_from_sdp(w0: &DMatrix<Complex64>, uniform: bool) -> (Awv, InitMethod) {
    let eig = SymmetricEigen::new(w0.clone());
    let (pv, l1, l2) = principal(&eig);
    if l2 <= RANK_ONE_RATIO * l1 {
        return (pv, InitMethod::RankOne);
    }
    if !uniform {
        return (pv, InitMethod::PrincipalEigenvector);
    }
    match spectral_factorize(&autocorrelation(w0)) {
        Ok(w) => (w, InitMethod::SpectralFactor),
        Err(e) => {
            warn!("spectral factorization failed, using principal eigenvector: {e}");
            (pv, InitMethod::PrincipalEigenvector)
        }
    }
}

fn is_uniform(apv: &Apv) -> bool {
    let x = apv.as_slice();
    if x.len() < 3 {
        return true;
    }
    let d = x[1] - x[0];
    x.windows(2)
        .all(|p| ((p[1] - p[0]) - d).abs() <= 1e-9 * d.abs().max(1.0))
}

/// SDP-derived weights for arbitrary positions.
pub fn start_for(apv: &Apv, sc: &Scenario, settings: &SolverSettings) -> Result<InitialPoint> {
    let (w0, delta0) = solve_p0(apv, sc, settings)?;
    let (awv, method) = weights_from_sdp(&w0, is_uniform(apv));
    debug!("init: delta0 = {delta0:.6}, method {method:?}");
    Ok(InitialPoint {
        apv: apv.clone(),
        awv,
        delta0,
        method,
    })
}

/// The uniform start used by the alternating loop.
pub fn initialize(sc: &Scenario, settings: &SolverSettings) -> Result<InitialPoint> {
    sc.validate()?;
    start_for(&uniform_apv(sc), sc, settings)
}
