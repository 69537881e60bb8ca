//! Randomized Kaczmarz method for phase retrieval.
//!
//! The crate houses the full pipeline: deterministic seeded randomness,
//! instance generation over the unit sphere, truncated spectral
//! initialization, the closer-hyperplane Kaczmarz iteration with basin
//! instrumentation, the ensemble variant, and empirical audits of the
//! anti-concentration-on-wedges condition that drives the convergence
//! guarantee.

pub mod acw;
pub mod eig;
pub mod error;
pub mod geometry;
pub mod measurement;
pub mod rng;
pub mod solver;
pub mod spectral;

pub use acw::{AcwReport, Wedge};
pub use eig::{sym_eig, SymMatrix};
pub use error::{Error, Result};
pub use geometry::{angle_between, dist_to_sign_set, sample_uniform_sphere, UnitVector};
pub use measurement::{InstanceFile, MeasurementSet, Signal};
pub use rng::Rng;
pub use solver::{ConvergenceTrace, RowMeasure, RowSelector, SelectionMode, SolverState};
pub use spectral::InitResult;
