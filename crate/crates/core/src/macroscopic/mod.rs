//! Pathwise finite-volume solver for `du + ∂_x B(x, u) dt = Σ_k C_k(x, u) dβ_k`
//! and the Kruzhkov-type entropy statistic.

mod entropy;
mod field;
mod fv;

pub use entropy::{kruzhkov_statistic, EntropyStatistic, TestFunction};
pub use field::MacroField;
pub use fv::{fv_step, run_macro, step_count, MacroTrajectory};
