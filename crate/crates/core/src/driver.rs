//! Alternating optimization: a weight SCA pass, then a position pass, repeated
//! until the smallest signal gain stops improving.

use std::time::Instant;

use log::{debug, info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::apv::{optimize_apv, ApvOutcome};
use crate::array::{min_gain, validate_solution, Apv, Awv, Scenario, Solution};
use crate::awv::optimize_awv;
use crate::convex::SolverSettings;
use crate::error::{Error, Result};
use crate::init::{initialize, InitMethod, InitialPoint};

/// Position update for fixed weights. Implementations must return a
/// feasible position vector whose min signal gain is no smaller than at `x`
/// (unless `x` itself is outside the block's search space), plus the
/// reordered weights if antennas changed order.
pub trait PositionBlock: Send + Sync {
    fn name(&self) -> &'static str;

    fn optimize(&self, w: &Awv, x: &Apv, sc: &Scenario, settings: &SolverSettings) -> Result<ApvOutcome>;
}

/// Quadratic-surrogate SCA over continuous positions.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScaPositions;

impl PositionBlock for ScaPositions {
    fn name(&self) -> &'static str {
        "sca"
    }

    fn optimize(&self, w: &Awv, x: &Apv, sc: &Scenario, settings: &SolverSettings) -> Result<ApvOutcome> {
        optimize_apv(w, x, sc, settings)
    }
}

/// Min signal gain after each block of one outer pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageDelta {
    pub after_awv: f64,
    pub after_apv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub solution: Solution,
    pub outer_iterations: usize,
    pub converged: bool,
    pub init_delta0: f64,
    pub init_method: Option<InitMethod>,
    pub awv_iterations: Vec<usize>,
    pub apv_iterations: Vec<usize>,
    pub awv_traces: Vec<Vec<f64>>,
    pub apv_traces: Vec<Vec<f64>>,
    pub stage_deltas: Vec<StageDelta>,
    pub awv_seconds: Vec<f64>,
    pub apv_seconds: Vec<f64>,
    /// Stalls, shrunk starts and early exits.
    pub events: Vec<String>,
}

impl RunReport {
    pub fn delta(&self) -> f64 {
        self.solution.delta
    }
}

/// Runs the alternating loop with SCA position updates.
pub fn alternating_optimize(sc: &Scenario, init: Option<InitialPoint>, settings: &SolverSettings) -> Result<RunReport> {
    alternating_optimize_with(sc, init, settings, &ScaPositions)
}

fn is_feasible(x: &Apv, w: &Awv, sc: &Scenario) -> bool {
    validate_solution(&Solution::evaluate(x.clone(), w.clone(), sc), sc).is_feasible()
}

/// Runs the alternating loop with the given position block. Without `init`
/// the uniform-array SDP start is computed first.
pub fn alternating_optimize_with(
    sc: &Scenario,
    init: Option<InitialPoint>,
    settings: &SolverSettings,
    block: &dyn PositionBlock,
) -> Result<RunReport> {
    sc.validate()?;
    settings.validate()?;
    let started = Instant::now();
    let init = match init {
        Some(p) => p,
        None => initialize(sc, settings)?,
    };
    if init.apv.len() != sc.n_antennas || init.awv.len() != sc.n_antennas {
        return Err(Error::InvalidInput(
            "initial point length does not match n_antennas".into(),
        ));
    }
    let mut report = RunReport {
        solution: Solution::evaluate(init.apv.clone(), init.awv.clone(), sc),
        outer_iterations: 0,
        converged: false,
        init_delta0: init.delta0,
        init_method: Some(init.method),
        awv_iterations: vec![],
        apv_iterations: vec![],
        awv_traces: vec![],
        apv_traces: vec![],
        stage_deltas: vec![],
        awv_seconds: vec![],
        apv_seconds: vec![],
        events: vec![],
    };
    let mut x = init.apv;
    let mut w = init.awv;
    // The first pass is always measured against zero, so at least two passes
    // run unless the gain itself is below the threshold.
    let mut delta = 0.0;
    let mut outer_trace = Vec::new();

    for outer in 1..=sc.max_outer {
        report.outer_iterations = outer;
        let t0 = Instant::now();
        let awv = match optimize_awv(&x, &w, sc, settings) {
            Ok(o) => o,
            Err(e) if !e.is_input_error() && outer > 1 && is_feasible(&x, &w, sc) => {
                warn!("weight block failed at outer pass {outer}, keeping last iterate: {e}");
                report.events.push(format!("outer {outer}: awv stalled: {e}"));
                break;
            }
            Err(e) => return Err(e),
        };
        report.awv_seconds.push(t0.elapsed().as_secs_f64());
        if awv.shrunk_start {
            report
                .events
                .push(format!("outer {outer}: awv start shrunk to satisfy caps"));
        }
        w = awv.awv;
        report.awv_iterations.push(awv.iterations);
        let after_awv = *awv.trace.last().expect("trace has the start value");
        report.awv_traces.push(awv.trace);

        let t0 = Instant::now();
        let pos = block.optimize(&w, &x, sc, settings)?;
        report.apv_seconds.push(t0.elapsed().as_secs_f64());
        if pos.stalled {
            report
                .events
                .push(format!("outer {outer}: {} position block stalled", block.name()));
        }
        x = pos.apv;
        if let Some(perm) = pos.awv {
            w = perm;
        }
        report.apv_iterations.push(pos.iterations);
        report.apv_traces.push(pos.trace);

        let new_delta = min_gain(&w, &x, &sc.signal_dirs);
        report.stage_deltas.push(StageDelta {
            after_awv,
            after_apv: new_delta,
        });
        outer_trace.push(new_delta);
        debug!("outer {outer}: delta {new_delta:.6}");
        let increase = new_delta - delta;
        delta = new_delta;
        if increase < sc.eps_outer {
            report.converged = true;
            break;
        }
    }

    let mut solution = Solution::evaluate(x, w, sc);
    solution.outer_trace = outer_trace;
    solution.wall_time = started.elapsed().as_secs_f64();
    let feas = validate_solution(&solution, sc);
    if !feas.is_feasible() {
        return Err(Error::numerical(format!(
            "alternating loop ended at an infeasible point: {:?}",
            feas.violations
        )));
    }
    info!(
        "delta {:.6} after {} outer passes ({:.2}s)",
        solution.delta, report.outer_iterations, solution.wall_time
    );
    report.solution = solution;
    Ok(report)
}

/// Runs independent scenarios on the current rayon pool; results come back
/// in input order.
pub fn run_batch(scenarios: &[Scenario], settings: &SolverSettings) -> Vec<Result<RunReport>> {
    scenarios
        .par_iter()
        .map(|sc| alternating_optimize(sc, None, settings))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityRow {
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub outer_iterations: usize,
    pub awv_iterations: usize,
    pub apv_iterations: usize,
    /// Mean wall time of one weight subproblem, seconds.
    pub awv_seconds_per_iter: f64,
    /// Mean wall time of one position subproblem, seconds.
    pub apv_seconds_per_iter: f64,
    pub total_seconds: f64,
}

/// Runs each scenario once (sequentially, for clean timings) and tabulates
/// iteration counts and per-subproblem times.
pub fn complexity_probe(scenarios: &[Scenario], settings: &SolverSettings) -> Result<Vec<ComplexityRow>> {
    scenarios
        .iter()
        .map(|sc| {
            let r = alternating_optimize(sc, None, settings)?;
            let awv_iters: usize = r.awv_iterations.iter().sum();
            let apv_iters: usize = r.apv_iterations.iter().sum();
            let per = |secs: &[f64], iters: usize| secs.iter().sum::<f64>() / iters.max(1) as f64;
            Ok(ComplexityRow {
                n: sc.n_antennas,
                k: sc.n_signals(),
                l: sc.n_interferers(),
                outer_iterations: r.outer_iterations,
                awv_iterations: awv_iters,
                apv_iterations: apv_iters,
                awv_seconds_per_iter: per(&r.awv_seconds, awv_iters),
                apv_seconds_per_iter: per(&r.apv_seconds, apv_iters),
                total_seconds: r.solution.wall_time,
            })
        })
        .collect()
}
