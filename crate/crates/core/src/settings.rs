use serde::{Deserialize, Serialize};

use crate::eigen::EigSettings;

/// Numerical knobs shared by the steady-state, dynamics and criticality code.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    /// Relative tie tolerance: eigenvalues within `tie_tol·max|λ|` of the
    /// largest imaginary part count as tied for the steady state.
    pub tie_tol: f64,
    pub defect_tol: f64,
    /// Finite-difference step; `None` means `1e-5·max(1, |γ|)`.
    pub fd_step: Option<f64>,
}

impl Default for Settings {
    fn default() -> Self {
        Self { tie_tol: 1e-9, defect_tol: 1e-8, fd_step: None }
    }
}

impl Settings {
    pub fn eig(&self) -> EigSettings {
        EigSettings { defect_tol: self.defect_tol, ..EigSettings::default() }
    }

    pub fn step_at(&self, gamma: f64) -> f64 {
        self.fd_step.unwrap_or(1e-5 * gamma.abs().max(1.0))
    }
}
