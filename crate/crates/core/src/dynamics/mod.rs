//! Density-matrix dynamics of a single atom group.

mod density;
mod hamiltonian;
mod integrate;
mod oracle;

pub use density::DensityMatrix;
pub use hamiltonian::{build_hamiltonian, relaxation_rhs, total_rhs, AtomParams, DriveSample};
pub use integrate::{
    integrate_sequence, integrate_to_times, propagate_field_free, rk4_step, rk4_step_with_drive,
    sample_grid, step_size, Trajectory,
};
pub use oracle::resonant_lambda_oracle;
