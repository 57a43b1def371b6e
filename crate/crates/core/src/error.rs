use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("matrix is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("QR iteration did not converge after {sweeps} sweeps (dimension {dim})")]
    NoConvergence { dim: usize, sweeps: usize },

    #[error("spectrum is empty")]
    EmptySpectrum,

    #[error("every eigenpair is defective")]
    AllDefective,

    #[error("state is defective near an exceptional point: pairing overlap {overlap:.3e} below {tol:.1e}")]
    Defective { overlap: f64, tol: f64 },

    #[error("steady state is degenerate at gamma = {gamma} ({count} eigenvalues tied in Im)")]
    Degenerate { gamma: f64, count: usize },

    #[error("no interior minimum of the eigenvalue gap inside [{lo}, {hi}]")]
    NoInteriorMinimum { lo: f64, hi: f64 },

    #[error("only {count} coalescing eigenvalue(s) found at gamma = {gamma}")]
    NoCoalescence { gamma: f64, count: usize },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("target fidelity {target} not reached before t = {t_max}")]
    Unreachable { target: f64, t_max: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
