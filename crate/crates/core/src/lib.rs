//! Steady states, exceptional points and critical scaling of non-Hermitian
//! Hamiltonians `H(γ) = H0 + iγ H1`.

pub mod check;
pub mod cli;
pub mod criticality;
pub mod dynamics;
pub mod eigen;
pub mod error;
pub mod linalg;
pub mod model;
pub mod settings;
pub mod steady;

pub use eigen::{biorthonormalize, eig, eig_biorth, EigSettings, Spectrum};
pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector};
pub use model::{dicke_operators, generic_hamiltonian, lmg_hamiltonian, CollectiveOps, HamiltonianFamily, ModelSpec};
pub use settings::Settings;
pub use steady::{expect_biorth, expect_right, hf_check, qfi, rdm, steady_state, steady_state_at, ReducedDensityMatrix, SteadyState};
pub use dynamics::{convergence_time, evolve, random_state, EvolutionWarning, EvolvedState, Propagator};
pub use criticality::{estimate_p, fit_exponent, fit_records, locate_ep, susceptibility, sweep, Column, EPResult, FitOptions, FitResult, Observable, Side, SweepRecord};
