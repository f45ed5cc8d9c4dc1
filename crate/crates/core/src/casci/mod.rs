//! Exact active-space CI: ground-state solver, densities and the embedding of
//! a sub-active-space state into the reference determinant basis.

mod civector;
mod davidson;
mod rdm;
mod solver;

pub use civector::{embed_coefficients, CIVector};
pub use davidson::{davidson_lowest, DavidsonResult};
pub use rdm::{exact_occupancies, one_rdm, spin_squared};
pub use solver::{solve_casci, solve_in_basis, HamiltonianRows, SolverOptions};
