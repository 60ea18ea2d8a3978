//! Joint antenna-position / antenna-weight optimization for multi-beam forming
//! with a linear movable-antenna array.
//!
//! The problem: choose positions `x` on a segment `[0, D]` (minimum spacing
//! `D0`) and complex weights `w` (`||w|| <= 1`) to maximize the smallest
//! beamforming gain `|w^H a(x, theta_k)|^2` over the desired directions while
//! keeping the gain toward every interference direction below `eta`.
//!
//! Layout:
//! - [`array`]: geometry, gains, feasibility checks.
//! - [`convex`]: barrier-method QCQP and SDP solvers.
//! - [`awv`] / [`apv`]: successive convex approximation for weights and positions.
//! - [`init`] / [`spectral`]: uniform-array starting point via SDP and spectral factorization.
//! - [`driver`]: the alternating optimization loop with pluggable position blocks.
//! - [`schemes`]: named strategies (proposed, fpa, aps, awi) behind a registry.
//! - [`bench`] / [`io`]: experiments, CSV/JSON files.

pub mod apv;
pub mod array;
pub mod awv;
pub mod bench;
pub mod convex;
pub mod driver;
pub mod error;
pub mod init;
pub mod io;
pub mod schemes;
pub mod spectral;

pub use error::{Error, Result};
