//! Active-space configuration interaction with measurement-driven orbital
//! selection (QDOS) and subspace dynamical-correlation corrections.
//!
//! The pipeline: build the reference active-space (rCAS) Hamiltonian, solve
//! it exactly, simulate computational-basis shots of its ground state, pick a
//! compact sub-active space from the measured orbital occupancies, solve that
//! space classically, embed its coefficients back into the reference basis
//! and correct the reference energy with second-order perturbation theory or
//! tailored coupled cluster.

pub mod casci;
pub mod cc;
pub mod correction;
pub mod driver;
pub mod error;
pub mod exec;
pub mod fock_space;
pub mod linalg;
pub mod model_io;
pub mod mrmp;
pub mod sampler;

pub use correction::{CorrectionResult, Diagnostics};
pub use error::{Error, Result};
pub use exec::Execution;
