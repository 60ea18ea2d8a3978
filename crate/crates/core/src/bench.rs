//! Experiment harness: beam-pattern comparison and random-direction sweeps
//! over the number of antennas and the number of interferers.

use std::path::Path;

use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::{
    angle_grid_deg, beam_pattern, validate_solution, PatternPoint, Scenario, Solution, MIN_COS_SEPARATION,
};
use crate::convex::SolverSettings;
use crate::error::{Error, Result};
use crate::schemes::SchemeRegistry;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "MA_BEAMOPT_THREADS";

/// Smallest allowed angle between any two drawn directions, degrees.
const MIN_ANGLE_GAP_DEG: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Fixed directions, one run per scheme, beam patterns written.
    Pattern,
    /// Random directions, sweep over `n_antennas`.
    SweepN,
    /// Random directions, sweep over the number of interferers.
    SweepL,
    /// Fixed directions, one run per scheme, no patterns.
    Single,
}

impl ExperimentKind {
    pub fn sweep_param(&self) -> &'static str {
        match self {
            Self::SweepN => "n",
            Self::SweepL => "l",
            Self::Pattern | Self::Single => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub id: String,
    pub kind: ExperimentKind,
    pub base: Scenario,
    /// Values of the swept parameter; ignored for fixed-direction kinds.
    pub sweep: Vec<usize>,
    /// Number of signal directions drawn per trial in sweeps.
    pub n_signals: usize,
    pub trials: usize,
    pub seed: u64,
    pub schemes: Vec<String>,
}

fn default_schemes() -> Vec<String> {
    ["proposed", "fpa", "aps", "awi"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

impl ExperimentSpec {
    /// Beam patterns for 8 antennas on 8 wavelengths, signals at 30/120 deg and
    /// interferers at 10/150 deg.
    pub fn fig2(seed: u64) -> Self {
        Self {
            id: "fig2".into(),
            kind: ExperimentKind::Pattern,
            base: Scenario {
                rng_seed: seed,
                ..Scenario::fig2()
            },
            sweep: vec![],
            n_signals: 2,
            trials: 1,
            seed,
            schemes: default_schemes(),
        }
    }

    /// Gain versus number of antennas on 10 wavelengths, two signals, two
    /// interferers.
    pub fn fig3(trials: usize, seed: u64) -> Self {
        Self {
            id: "fig3".into(),
            kind: ExperimentKind::SweepN,
            base: Scenario {
                aperture: 10.0,
                interference_dirs: vec![0.0; 2],
                rng_seed: seed,
                ..Scenario::default()
            },
            sweep: vec![4, 6, 8, 10],
            n_signals: 2,
            trials,
            seed,
            schemes: default_schemes(),
        }
    }

    /// Gain versus number of interferers, 8 antennas on 8 wavelengths, two
    /// signals.
    pub fn fig4(trials: usize, seed: u64) -> Self {
        Self {
            id: "fig4".into(),
            kind: ExperimentKind::SweepL,
            base: Scenario {
                rng_seed: seed,
                ..Scenario::default()
            },
            sweep: (1..=6).collect(),
            n_signals: 2,
            trials,
            seed,
            schemes: default_schemes(),
        }
    }

    pub fn by_name(name: &str, trials: Option<usize>, seed: u64) -> Result<Self> {
        match name {
            "fig2" => Ok(Self::fig2(seed)),
            "fig3" => Ok(Self::fig3(trials.unwrap_or(50), seed)),
            "fig4" => Ok(Self::fig4(trials.unwrap_or(50), seed)),
            other => Err(Error::InvalidInput(format!("unknown experiment `{other}`"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidInput("trials must be at least 1".into()));
        }
        match self.kind {
            ExperimentKind::SweepN => {
                for &n in &self.sweep {
                    if n == 0 || (n - 1) as f64 * self.base.min_spacing > self.base.aperture {
                        return Err(Error::InvalidInput(format!("{n} antennas do not fit the aperture")));
                    }
                }
            }
            ExperimentKind::SweepL => {}
            ExperimentKind::Pattern | ExperimentKind::Single => self.base.validate()?,
        }
        if matches!(self.kind, ExperimentKind::SweepN | ExperimentKind::SweepL) && self.sweep.is_empty() {
            return Err(Error::InvalidInput("sweep values are empty".into()));
        }
        Ok(())
    }

    fn points(&self) -> Vec<usize> {
        match self.kind {
            ExperimentKind::SweepN | ExperimentKind::SweepL => self.sweep.clone(),
            ExperimentKind::Pattern | ExperimentKind::Single => vec![0],
        }
    }

    /// Scenario for sweep point `value`, trial `trial`; directions are drawn
    /// from a generator seeded only by `(seed, point index, trial)`.
    pub fn scenario_for(&self, point: usize, value: usize, trial: usize) -> Scenario {
        let mut sc = self.base.clone();
        let (k, l) = match self.kind {
            ExperimentKind::SweepN => {
                sc.n_antennas = value;
                (self.n_signals, self.base.n_interferers())
            }
            ExperimentKind::SweepL => (self.n_signals, value),
            ExperimentKind::Pattern | ExperimentKind::Single => return sc,
        };
        let mut rng = trial_rng(self.seed, point, trial);
        let (s, i) = random_directions(&mut rng, k, l);
        sc.signal_dirs = s;
        sc.interference_dirs = i;
        sc
    }
}

/// Independent stream per (point, trial).
pub fn trial_rng(seed: u64, point: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((point as u64) << 32) | trial as u64);
    rng
}

/// Uniform angles on `(0, pi)`; the whole draw is repeated while any
/// signal/interferer pair is closer than the spatial-frequency guard or any
/// two angles are within 0.1 degrees.
pub fn random_directions(rng: &mut impl Rng, k: usize, l: usize) -> (Vec<f64>, Vec<f64>) {
    let pi = std::f64::consts::PI;
    loop {
        let draw = |rng: &mut dyn rand::RngCore| loop {
            let a: f64 = rng.gen_range(0.0..pi);
            if a > 0.0 {
                break a;
            }
        };
        let s: Vec<f64> = (0..k).map(|_| draw(rng)).collect();
        let i: Vec<f64> = (0..l).map(|_| draw(rng)).collect();
        let cos_ok = s
            .iter()
            .all(|a| i.iter().all(|b| (a.cos() - b.cos()).abs() >= MIN_COS_SEPARATION));
        let all: Vec<f64> = s.iter().chain(&i).copied().collect();
        let gap = MIN_ANGLE_GAP_DEG.to_radians();
        let apart = all
            .iter()
            .enumerate()
            .all(|(a, x)| all[a + 1..].iter().all(|y| (x - y).abs() >= gap));
        if cos_ok && apart {
            return (s, i);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub scheme: String,
    pub sweep_param: String,
    pub sweep_value: usize,
    pub trial: usize,
    pub n_antennas: usize,
    pub n_signals: usize,
    pub n_interferers: usize,
    /// Empty when the run failed.
    pub delta: Option<f64>,
    pub max_interference: Option<f64>,
    pub outer_iterations: usize,
    pub feasible: bool,
    pub error: String,
    pub runtime_s: f64,
}

/// Column excluded when comparing tables for reproducibility.
pub const TIMING_COLUMNS: &[&str] = &["runtime_s"];

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanRow {
    pub scheme: String,
    pub sweep_value: usize,
    pub mean_delta: f64,
    pub completed: usize,
    pub failed: usize,
}

impl ResultTable {
    /// Mean gain over successful trials, per (scheme, sweep value), in the
    /// order first seen.
    pub fn means(&self) -> Vec<MeanRow> {
        let mut out: Vec<MeanRow> = Vec::new();
        for r in &self.rows {
            let idx = match out
                .iter()
                .position(|m| m.scheme == r.scheme && m.sweep_value == r.sweep_value)
            {
                Some(i) => i,
                None => {
                    out.push(MeanRow {
                        scheme: r.scheme.clone(),
                        sweep_value: r.sweep_value,
                        mean_delta: 0.0,
                        completed: 0,
                        failed: 0,
                    });
                    out.len() - 1
                }
            };
            match r.delta {
                Some(d) => {
                    out[idx].mean_delta += d;
                    out[idx].completed += 1;
                }
                None => out[idx].failed += 1,
            }
        }
        for m in &mut out {
            m.mean_delta /= m.completed.max(1) as f64;
        }
        out
    }

    pub fn mean(&self, scheme: &str, sweep_value: usize) -> Option<f64> {
        self.means()
            .into_iter()
            .find(|m| m.scheme == scheme && m.sweep_value == sweep_value && m.completed > 0)
            .map(|m| m.mean_delta)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let rows = r.deserialize().collect::<std::result::Result<Vec<ResultRow>, _>>()?;
        Ok(Self { rows })
    }

    pub fn write_means_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for m in self.means() {
            w.serialize(m)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `angle_deg, gain, gain_db` rows.
pub fn write_pattern_csv(path: &Path, points: &[PatternPoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["angle_deg", "gain", "gain_db"])?;
    for p in points {
        w.write_record([
            format!("{}", p.angle.to_degrees()),
            format!("{}", p.gain),
            format!("{}", p.gain_db()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Pattern of a solution on a grid of `step_deg` spacing over `[0, 180]`.
pub fn solution_pattern(sol: &Solution, step_deg: f64) -> Vec<PatternPoint> {
    beam_pattern(&sol.awv, &sol.apv, &angle_grid_deg(step_deg))
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub table: ResultTable,
    /// Solutions of fixed-direction experiments, by scheme.
    pub solutions: Vec<(String, Solution)>,
}

/// Rayon pool sized by `MA_BEAMOPT_THREADS`, or the default parallelism.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
        if n == 0 {
            return Err(Error::InvalidInput(format!("{THREADS_ENV} must be positive")));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::Io(e.to_string()))
}

/// Runs every (point, trial, scheme) combination. Per-run failures are
/// recorded in the table; rows come back in (point, trial, scheme) order.
pub fn run_experiment(
    spec: &ExperimentSpec,
    registry: &SchemeRegistry,
    settings: &SolverSettings,
) -> Result<ExperimentOutput> {
    spec.validate()?;
    for name in &spec.schemes {
        registry.get(name)?;
    }
    let mut jobs = Vec::new();
    for (pi, &value) in spec.points().iter().enumerate() {
        for trial in 0..spec.trials {
            jobs.push((pi, value, trial));
        }
    }
    let pool = thread_pool()?;
    let results: Vec<Vec<(ResultRow, Option<Solution>)>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(pi, value, trial)| {
                let sc = spec.scenario_for(pi, value, trial);
                spec.schemes
                    .iter()
                    .map(|name| run_one(spec, registry, settings, &sc, name, value, trial))
                    .collect()
            })
            .collect()
    });
    let mut table = ResultTable::default();
    let mut solutions = Vec::new();
    for (row, sol) in results.into_iter().flatten() {
        if let (Some(s), ExperimentKind::Pattern | ExperimentKind::Single) = (sol, spec.kind) {
            solutions.push((row.scheme.clone(), s));
        }
        table.rows.push(row);
    }
    info!("{}: {} rows", spec.id, table.rows.len());
    Ok(ExperimentOutput { table, solutions })
}

fn run_one(
    spec: &ExperimentSpec,
    registry: &SchemeRegistry,
    settings: &SolverSettings,
    sc: &Scenario,
    name: &str,
    value: usize,
    trial: usize,
) -> (ResultRow, Option<Solution>) {
    let mut row = ResultRow {
        experiment: spec.id.clone(),
        scheme: name.to_string(),
        sweep_param: spec.kind.sweep_param().into(),
        sweep_value: value,
        trial,
        n_antennas: sc.n_antennas,
        n_signals: sc.n_signals(),
        n_interferers: sc.n_interferers(),
        delta: None,
        max_interference: None,
        outer_iterations: 0,
        feasible: false,
        error: String::new(),
        runtime_s: 0.0,
    };
    let scheme = registry.get(name).expect("checked before dispatch");
    let started = std::time::Instant::now();
    let outcome = scheme.solve(sc, settings);
    row.runtime_s = started.elapsed().as_secs_f64();
    match outcome {
        Ok(r) => {
            row.feasible = validate_solution(&r.solution, sc).is_feasible();
            row.delta = Some(r.solution.delta);
            row.max_interference = Some(r.solution.max_interference());
            row.outer_iterations = r.outer_iterations;
            (row, Some(r.solution))
        }
        Err(e) => {
            warn!("{} {name} point {value} trial {trial}: {e}", spec.id);
            row.error = e.to_string();
            (row, None)
        }
    }
}
