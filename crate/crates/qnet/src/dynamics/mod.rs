//! Equations of motion implied by an SLH triple and their integration.

mod heisenberg;
mod hierarchy;
pub mod integrate;
mod observable;
mod simulate;
mod steady;
mod superop;

pub use heisenberg::{heisenberg_coefficients, output_relations, HeisenbergCoefficients, OutputRelations};
pub use hierarchy::Hierarchy;
pub use integrate::{integrate, Method, Options, Stats};
pub use observable::Observable;
pub use simulate::{fmt_e, linspace, simulate, Cell, Drive, RunMetadata, SimulationSpec, Trajectory};
pub use steady::steady_state;
pub use superop::{drive_coupling, liouvillian, liouvillian_coherent, liouvillian_gaussian, DriveCoupling, GaussianEnv, SuperOp};
