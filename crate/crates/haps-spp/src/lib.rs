//! GPS single point positioning with stratospheric platform ranging augmentation.
//!
//! This crate implements an end-to-end pseudorange positioning pipeline:
//! broadcast ephemeris evaluation, atmospheric delay models, Earth-rotation
//! (Sagnac) correction, and an iterative unweighted least-squares solver that
//! accepts both GPS satellites and high altitude platform stations (HAPS) as
//! ranging sources. A scenario runner synthesizes measurements (or ingests
//! RINEX logs), solves every epoch, and reports HDOP / 3D-accuracy metrics
//! and empirical CDFs as plot-ready CSV.
//!
//! Modules follow the processing chain:
//!
//! - [`geodesy`]: ECEF/geodetic frames, local rotation, elevation/azimuth,
//!   Sagnac rotation
//! - [`rinex`]: RINEX 2.x/3.x navigation and observation parsing
//! - [`ephemeris`]: Keplerian broadcast orbit and clock evaluation
//! - [`atmosphere`]: Klobuchar ionosphere and Saastamoinen troposphere
//! - [`error_models`]: seeded Gauss-Markov / Gaussian error streams and
//!   line-of-sight gating
//! - [`haps`]: platform trajectories and HAPS pseudorange synthesis
//! - [`solver`]: the iterative least-squares position solver
//! - [`metrics`]: DOP, 3D error, empirical CDFs
//! - [`scenario`]: declarative scenario files, the epoch loop, CSV reports

pub mod atmosphere;
pub mod constants;
pub mod ephemeris;
pub mod error_models;
pub mod geodesy;
pub mod haps;
pub mod metrics;
pub mod rinex;
pub mod scenario;
pub mod solver;
pub mod time;

pub use geodesy::{EcefVector, GeodeticCoord};
pub use scenario::{
    compare_systems, run_scenario, Mode, RunResult, Scenario, ScenarioError, SystemConfiguration,
};
pub use solver::{PositionSolution, RangingMeasurement, SolverConfig, SourceId};
pub use time::GpsTime;
