//! Named solution strategies behind a common trait, looked up at runtime.
//!
//! - `proposed`: alternating weight/position SCA from the uniform-array start.
//! - `fpa`: fixed half-wavelength array from the origin, SDP weights only.
//! - `aps`: positions restricted to the `D0` grid, updated by coordinate-wise
//!   exhaustive search.
//! - `awi`: a single alternating pass.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::apv::ApvOutcome;
use crate::array::{beam_gain, min_gain, Apv, Awv, Scenario, Solution, TOL_FEAS};
use crate::convex::SolverSettings;
use crate::driver::{alternating_optimize, alternating_optimize_with, PositionBlock, RunReport};
use crate::error::{Error, Result};
use crate::init::start_for;

pub trait Scheme: Send + Sync {
    fn name(&self) -> &'static str;

    fn description(&self) -> &'static str;

    fn solve(&self, sc: &Scenario, settings: &SolverSettings) -> Result<RunReport>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Proposed;

impl Scheme for Proposed {
    fn name(&self) -> &'static str {
        "proposed"
    }

    fn description(&self) -> &'static str {
        "alternating weight and position SCA"
    }

    fn solve(&self, sc: &Scenario, settings: &SolverSettings) -> Result<RunReport> {
        alternating_optimize(sc, None, settings)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SinglePass;

impl Scheme for SinglePass {
    fn name(&self) -> &'static str {
        "awi"
    }

    fn description(&self) -> &'static str {
        "one weight pass and one position pass"
    }

    fn solve(&self, sc: &Scenario, settings: &SolverSettings) -> Result<RunReport> {
        let once = Scenario {
            max_outer: 1,
            ..sc.clone()
        };
        let mut r = alternating_optimize(&once, None, settings)?;
        r.converged = false;
        Ok(r)
    }
}

/// Half-wavelength array starting at the origin.
pub fn fpa_positions(sc: &Scenario) -> Result<Apv> {
    let x = Apv::uniform(sc.n_antennas, 0.0, 0.5);
    if x.0.last().copied().unwrap_or(0.0) > sc.aperture + 1e-12 {
        return Err(Error::InvalidInput(format!(
            "{} half-wavelength elements do not fit in aperture {}",
            sc.n_antennas, sc.aperture
        )));
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FixedArray;

impl Scheme for FixedArray {
    fn name(&self) -> &'static str {
        "fpa"
    }

    fn description(&self) -> &'static str {
        "fixed half-wavelength array with SDP-optimal weights"
    }

    fn solve(&self, sc: &Scenario, settings: &SolverSettings) -> Result<RunReport> {
        sc.validate()?;
        let started = Instant::now();
        let x = fpa_positions(sc)?;
        let p = start_for(&x, sc, settings)?;
        let mut solution = Solution::evaluate(p.apv, p.awv, sc);
        solution.wall_time = started.elapsed().as_secs_f64();
        Ok(RunReport {
            solution,
            outer_iterations: 0,
            converged: true,
            init_delta0: p.delta0,
            init_method: Some(p.method),
            awv_iterations: vec![],
            apv_iterations: vec![],
            awv_traces: vec![],
            apv_traces: vec![],
            stage_deltas: vec![],
            awv_seconds: vec![],
            apv_seconds: vec![],
            events: vec![],
        })
    }
}

/// Exhaustive search over grid points `{0, D0, 2 D0, ...}` for one antenna at
/// a time, the others fixed. An antenna may move to any free grid point (at
/// least `D0` from every other antenna), carrying its weight with it.
#[derive(Debug, Clone, Copy)]
pub struct GridSearchPositions {
    pub max_rounds: usize,
}

impl Default for GridSearchPositions {
    fn default() -> Self {
        Self { max_rounds: 20 }
    }
}

/// Relative improvement below which a grid move counts as a tie.
const TIE_TOL: f64 = 1e-9;

pub fn position_grid(sc: &Scenario) -> Vec<f64> {
    let count = (sc.aperture / sc.min_spacing + 1e-9).floor() as usize;
    (0..=count).map(|j| j as f64 * sc.min_spacing).collect()
}

/// Rounds each position to the nearest grid point; monotone, so spacing of at
/// least `D0` is preserved.
pub fn snap_to_grid(x: &Apv, sc: &Scenario) -> Apv {
    let top = (sc.aperture / sc.min_spacing + 1e-9).floor();
    Apv::new(
        x.0.iter()
            .map(|v| (v / sc.min_spacing).round().clamp(0.0, top) * sc.min_spacing)
            .collect(),
    )
}

impl PositionBlock for GridSearchPositions {
    fn name(&self) -> &'static str {
        "grid"
    }

    fn optimize(&self, w: &Awv, x: &Apv, sc: &Scenario, _settings: &SolverSettings) -> Result<ApvOutcome> {
        let grid = position_grid(sc);
        let n = x.len();
        let mut x = x.clone();
        let mut current = min_gain(w, &x, &sc.signal_dirs);
        let mut trace = vec![current];
        let mut rounds = 0;
        let gap = sc.min_spacing * (1.0 - 1e-9);
        while rounds < self.max_rounds {
            rounds += 1;
            let mut moved = false;
            for i in 0..n {
                // An off-grid incumbent is not a candidate: it moves to the best
                // grid point even if that lowers the objective.
                let on_grid = grid.contains(&x.0[i]);
                let mut best = on_grid.then_some((current, x.0[i]));
                for &g in &grid {
                    if g == x.0[i] || (0..n).any(|j| j != i && (x.0[j] - g).abs() < gap) {
                        continue;
                    }
                    let mut cand = x.clone();
                    cand.0[i] = g;
                    let feasible = sc
                        .interference_dirs
                        .iter()
                        .all(|&p| beam_gain(w, &cand, p) <= sc.interference_cap + TOL_FEAS);
                    if !feasible {
                        continue;
                    }
                    let gain = min_gain(w, &cand, &sc.signal_dirs);
                    if best.map_or(true, |b| gain > b.0 + TIE_TOL * b.0.abs().max(1.0)) {
                        best = Some((gain, g));
                    }
                }
                if let Some((gain, g)) = best {
                    if g != x.0[i] {
                        x.0[i] = g;
                        current = gain;
                        moved = true;
                    }
                }
            }
            trace.push(current);
            if !moved {
                break;
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| x.0[a].total_cmp(&x.0[b]));
        Ok(ApvOutcome {
            apv: Apv::new(order.iter().map(|&i| x.0[i]).collect()),
            awv: Some(Awv::new(order.iter().map(|&i| w.0[i]).collect())),
            trace,
            surrogate_trace: vec![],
            iterations: rounds,
            stalled: false,
        })
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GridSearch {
    pub block: GridSearchPositions,
}

impl Scheme for GridSearch {
    fn name(&self) -> &'static str {
        "aps"
    }

    fn description(&self) -> &'static str {
        "grid positions by coordinate-wise exhaustive search, SCA weights"
    }

    fn solve(&self, sc: &Scenario, settings: &SolverSettings) -> Result<RunReport> {
        sc.validate()?;
        if position_grid(sc).len() < sc.n_antennas {
            return Err(Error::InvalidInput(
                "position grid has fewer points than antennas".into(),
            ));
        }
        let x0 = snap_to_grid(&crate::init::uniform_apv(sc), sc);
        let init = start_for(&x0, sc, settings)?;
        alternating_optimize_with(sc, Some(init), settings, &self.block)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeInfo {
    pub name: String,
    pub description: String,
}

/// Schemes registered by name, in registration order.
#[derive(Default)]
pub struct SchemeRegistry {
    schemes: Vec<Box<dyn Scheme>>,
}

impl SchemeRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// `proposed`, `fpa`, `aps`, `awi`.
    pub fn with_defaults() -> Self {
        let mut r = Self::new();
        r.register(Box::new(Proposed));
        r.register(Box::new(FixedArray));
        r.register(Box::new(GridSearch::default()));
        r.register(Box::new(SinglePass));
        r
    }

    /// Adds a scheme, replacing any existing one with the same name.
    pub fn register(&mut self, scheme: Box<dyn Scheme>) {
        match self.schemes.iter().position(|s| s.name() == scheme.name()) {
            Some(i) => self.schemes[i] = scheme,
            None => self.schemes.push(scheme),
        }
    }

    pub fn get(&self, name: &str) -> Result<&dyn Scheme> {
        self.schemes
            .iter()
            .find(|s| s.name() == name)
            .map(|s| s.as_ref())
            .ok_or_else(|| Error::UnknownScheme(name.to_string()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.schemes.iter().map(|s| s.name()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn Scheme> {
        self.schemes.iter().map(|s| s.as_ref())
    }

    pub fn describe(&self) -> Vec<SchemeInfo> {
        self.iter()
            .map(|s| SchemeInfo {
                name: s.name().into(),
                description: s.description().into(),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn registry_lookup() {
        let r = SchemeRegistry::with_defaults();
        assert_eq!(r.names(), vec!["proposed", "fpa", "aps", "awi"]);
        assert!(matches!(r.get("nope"), Err(Error::UnknownScheme(_))));
        assert_eq!(r.get("aps").unwrap().name(), "aps");
    }

    #[test]
    fn register_replaces_by_name() {
        let mut r = SchemeRegistry::with_defaults();
        r.register(Box::new(GridSearch {
            block: GridSearchPositions { max_rounds: 1 },
        }));
        assert_eq!(r.names().len(), 4);
    }

    #[test]
    fn snapping_keeps_spacing() {
        let sc = Scenario::fig2();
        let x = snap_to_grid(&crate::init::uniform_apv(&sc), &sc);
        assert_eq!(x.0, vec![1.0, 2.0, 2.5, 3.5, 4.5, 5.5, 6.0, 7.0]);
        assert!(x.violations(sc.aperture, sc.min_spacing, 1e-12).is_empty());
    }

    #[test]
    fn fpa_single_beam_full_gain() {
        let sc = Scenario {
            signal_dirs: vec![2.0],
            ..Scenario::default()
        };
        let r = FixedArray.solve(&sc, &SolverSettings::default()).unwrap();
        assert_abs_diff_eq!(r.delta(), 8.0, epsilon = 1e-4);
        assert_eq!(r.solution.apv, Apv::uniform(8, 0.0, 0.5));
    }

    #[test]
    fn aps_single_antenna() {
        let sc = Scenario {
            n_antennas: 1,
            aperture: 3.0,
            signal_dirs: vec![1.0],
            ..Scenario::default()
        };
        let r = GridSearch::default().solve(&sc, &SolverSettings::default()).unwrap();
        assert_abs_diff_eq!(r.delta(), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn grid_search_moves_weights_with_antennas() {
        let sc = Scenario::fig2();
        let x = snap_to_grid(&crate::init::uniform_apv(&sc), &sc);
        let w = start_for(&x, &sc, &SolverSettings::default()).unwrap().awv;
        let out = GridSearchPositions::default()
            .optimize(&w, &x, &sc, &SolverSettings::default())
            .unwrap();
        let w2 = out.awv.unwrap();
        let g = min_gain(&w2, &out.apv, &sc.signal_dirs);
        assert_abs_diff_eq!(g, *out.trace.last().unwrap(), epsilon = 1e-12);
        assert!(g >= out.trace[0]);
        assert!(out.apv.as_slice().windows(2).all(|p| p[1] > p[0]));
    }

    #[test]
    fn aps_positions_stay_on_grid() {
        let sc = Scenario::fig2();
        let r = GridSearch::default().solve(&sc, &SolverSettings::default()).unwrap();
        for v in r.solution.apv.as_slice() {
            let k = v / sc.min_spacing;
            assert!((k - k.round()).abs() < 1e-12);
        }
        for p in r.solution.apv.as_slice().windows(2) {
            assert!(p[1] - p[0] >= sc.min_spacing - 1e-12);
        }
    }
}
