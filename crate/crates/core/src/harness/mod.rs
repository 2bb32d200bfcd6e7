//! Experiment configuration, ε → 0 convergence studies and CSV output.

pub mod config;
pub mod converge;
pub mod output;
pub mod pairings;
pub mod studies;

pub use config::RunConfig;
pub use converge::{
    converge_in_eps, macro_reference, macro_self_convergence, ConvergenceReport, ConvergenceRow,
};
pub use pairings::{weakstar_pairings, PairingFunction, PairingSet};
pub use studies::{
    entropy_study, maxwellian_suite, validate_config, EntropyStudy, MaxwellianSuite, ValidationRow,
};
