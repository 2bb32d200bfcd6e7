//! Semi-Lagrangian solver for the kinetic BGK equation with high field and
//! multiplicative noise.

mod characteristics;
mod field;
mod relax;
mod run;
mod semigroup;
mod transport;

pub use characteristics::{characteristics_step, CharState, Direction};
pub use field::{FarField, KineticField};
pub use relax::{exact_field_relax, relax_step, relax_toward, DensityConvention, Scheme};
pub use run::{initial_density, run_kinetic, DefectSample, KineticOptions, KineticTrajectory};
pub use semigroup::{semigroup_checks, CompositionGap, NormSample, SemigroupReport};
pub use transport::{transport_step, ExitCount, EXIT_FRACTION, SATURATION_TOL};
