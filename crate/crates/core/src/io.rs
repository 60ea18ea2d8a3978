//! Scenario and solution files (JSON). Scenario angles are in degrees on
//! disk and radians in memory.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::array::{Scenario, Solution};
use crate::error::Result;

/// On-disk scenario. Every field except the directions has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default = "d::n_antennas")]
    pub n_antennas: usize,
    #[serde(default = "d::aperture")]
    pub aperture: f64,
    #[serde(default = "d::min_spacing")]
    pub min_spacing: f64,
    #[serde(default = "d::interference_cap")]
    pub interference_cap: f64,
    /// Degrees.
    pub signal_dirs: Vec<f64>,
    /// Degrees.
    #[serde(default)]
    pub interference_dirs: Vec<f64>,
    #[serde(default = "d::eps_outer")]
    pub eps_outer: f64,
    #[serde(default = "d::eps_awv")]
    pub eps_awv: f64,
    #[serde(default = "d::eps_apv")]
    pub eps_apv: f64,
    #[serde(default = "d::max_outer")]
    pub max_outer: usize,
    #[serde(default = "d::max_awv_iters")]
    pub max_awv_iters: usize,
    #[serde(default = "d::max_apv_iters")]
    pub max_apv_iters: usize,
    #[serde(default)]
    pub rng_seed: u64,
}

mod d {
    use crate::array::Scenario;

    pub fn n_antennas() -> usize {
        Scenario::default().n_antennas
    }
    pub fn aperture() -> f64 {
        Scenario::default().aperture
    }
    pub fn min_spacing() -> f64 {
        Scenario::default().min_spacing
    }
    pub fn interference_cap() -> f64 {
        Scenario::default().interference_cap
    }
    pub fn eps_outer() -> f64 {
        Scenario::default().eps_outer
    }
    pub fn eps_awv() -> f64 {
        Scenario::default().eps_awv
    }
    pub fn eps_apv() -> f64 {
        Scenario::default().eps_apv
    }
    pub fn max_outer() -> usize {
        Scenario::default().max_outer
    }
    pub fn max_awv_iters() -> usize {
        Scenario::default().max_awv_iters
    }
    pub fn max_apv_iters() -> usize {
        Scenario::default().max_apv_iters
    }
}

impl From<&Scenario> for ScenarioFile {
    fn from(sc: &Scenario) -> Self {
        Self {
            n_antennas: sc.n_antennas,
            aperture: sc.aperture,
            min_spacing: sc.min_spacing,
            interference_cap: sc.interference_cap,
            signal_dirs: sc.signal_dirs.iter().map(|a| a.to_degrees()).collect(),
            interference_dirs: sc.interference_dirs.iter().map(|a| a.to_degrees()).collect(),
            eps_outer: sc.eps_outer,
            eps_awv: sc.eps_awv,
            eps_apv: sc.eps_apv,
            max_outer: sc.max_outer,
            max_awv_iters: sc.max_awv_iters,
            max_apv_iters: sc.max_apv_iters,
            rng_seed: sc.rng_seed,
        }
    }
}

impl From<ScenarioFile> for Scenario {
    fn from(f: ScenarioFile) -> Self {
        Self {
            n_antennas: f.n_antennas,
            aperture: f.aperture,
            min_spacing: f.min_spacing,
            interference_cap: f.interference_cap,
            signal_dirs: f.signal_dirs.iter().map(|a| a.to_radians()).collect(),
            interference_dirs: f.interference_dirs.iter().map(|a| a.to_radians()).collect(),
            eps_outer: f.eps_outer,
            eps_awv: f.eps_awv,
            eps_apv: f.eps_apv,
            max_outer: f.max_outer,
            max_awv_iters: f.max_awv_iters,
            max_apv_iters: f.max_apv_iters,
            rng_seed: f.rng_seed,
        }
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let f: ScenarioFile = serde_json::from_str(text)?;
    let sc = Scenario::from(f);
    sc.validate()?;
    Ok(sc)
}

pub fn read_scenario(path: &Path) -> Result<Scenario> {
    parse_scenario(&fs::read_to_string(path)?)
}

pub fn write_scenario(path: &Path, sc: &Scenario) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(&ScenarioFile::from(sc))?)?;
    Ok(())
}

/// Solution plus the name of the scheme that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub scheme: String,
    #[serde(flatten)]
    pub solution: Solution,
}

pub fn write_solution(path: &Path, scheme: &str, sol: &Solution) -> Result<()> {
    let f = SolutionFile {
        scheme: scheme.to_string(),
        solution: sol.clone(),
    };
    fs::write(path, serde_json::to_string_pretty(&f)?)?;
    Ok(())
}

pub fn read_solution(path: &Path) -> Result<SolutionFile> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{Apv, Awv};
    use crate::error::Error;
    use approx::assert_abs_diff_eq;

    #[test]
    fn minimal_document_gets_defaults() {
        let sc = parse_scenario(r#"{"signal_dirs": [30, 120], "interference_dirs": [10, 150]}"#).unwrap();
        let f = Scenario::fig2();
        assert_eq!(sc.n_antennas, 8);
        assert_eq!(sc.max_outer, 50);
        for (a, b) in sc.signal_dirs.iter().zip(&f.signal_dirs) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn unknown_field_is_rejected() {
        let e = parse_scenario(r#"{"signal_dirs": [30], "n_antenas": 4}"#).unwrap_err();
        assert!(matches!(e, Error::InvalidInput(_)));
    }

    #[test]
    fn invalid_scenario_is_rejected() {
        let e = parse_scenario(r#"{"signal_dirs": [30], "interference_dirs": [30]}"#).unwrap_err();
        assert!(matches!(e, Error::InvalidScenario(_)));
    }

    #[test]
    fn files_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let sc = Scenario::fig2();
        let p = dir.path().join("s.json");
        write_scenario(&p, &sc).unwrap();
        let back = read_scenario(&p).unwrap();
        assert_eq!(back.n_antennas, sc.n_antennas);
        for (a, b) in back.signal_dirs.iter().zip(&sc.signal_dirs) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
        let sol = Solution::evaluate(Apv::uniform(8, 1.0, 0.9), Awv::uniform(8), &sc);
        let q = dir.path().join("sol.json");
        write_solution(&q, "fpa", &sol).unwrap();
        let f = read_solution(&q).unwrap();
        assert_eq!(f.scheme, "fpa");
        assert_eq!(f.solution, sol);
    }
}
