//! Simulation and statistical verification of indicator fractional stable
//! motions and the related comparison classes (local-time fractional stable
//! motion and symmetric alpha-stable Levy motion).
//!
//! The processes are built by discretizing their doubly-stochastic stable
//! integral representations: an independently scattered symmetric
//! alpha-stable random measure with control measure `P' x lambda` is sampled
//! on a product grid of subordinator paths and space cells, and integrated
//! against indicator, signed-indicator, local-time, or deterministic
//! kernels. A characteristic-functional oracle evaluates the exponent of
//! the joint law directly from the ensemble, and the diagnostics layer
//! verifies self-similarity, stationarity, kernel equivalence, mixing with
//! its analytic bound, conservativity, and the extreme-value property.
//!
//! Stable-law convention: `S_alpha(sigma)` has characteristic function
//! `exp(-sigma^alpha |theta|^alpha)`; in particular `S_2(sigma) = N(0, 2 sigma^2)`
//! and `S_1(sigma)` is Cauchy with scale `sigma`.

pub mod cache;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod fbm;
pub mod grid;
pub mod integral;
pub mod oracle;
pub mod report;
pub mod rng;
pub mod runner;
pub mod stable;
pub mod stats;
pub mod subordinator;

pub use error::{Error, Result};
pub use grid::{SpatialGrid, TimeGrid};
pub use integral::{
    feasibility_check, simulate_noise, simulate_process, FeasibilityReport, Kernel, KernelContext,
    NoiseSample, ProcessSample,
};
pub use config::{parse_config, Experiment, ProcessClass, RunConfig};
pub use oracle::{
    empirical_char, exponent_integral, CharFunctionalEstimate, EmpiricalChar, FormTerm, LinearForm,
};
pub use report::RunReport;
pub use runner::run;
pub use rng::{SeededRng, StreamDomain};
pub use stable::{sample_sas, StableNoiseField, StableSpec};
pub use subordinator::{
    compute_local_time, recurrence_check, sample_ensemble, LocalTimeField, SubordinatorEnsemble,
    SubordinatorKind, SubordinatorSpec,
};
