use thiserror::Error;

/// Errors raised by state construction, geometry generation and the integrators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("atom index {index} out of range for {n_atoms} atoms (indices are 1-based)")]
    IndexOutOfRange { index: usize, n_atoms: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{0} atoms exceeds the exact-state cap of {cap}", cap = crate::qstate::MAX_EXACT_ATOMS)]
    TooManyAtoms(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("atoms {0} and {1} coincide")]
    CoincidentAtoms(usize, usize),

    #[error("could not place {n_atoms} atoms with minimum separation {min_separation} after {attempts} attempts")]
    PackingInfeasible { n_atoms: usize, min_separation: f64, attempts: usize },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("positivity breach at t = {t}: minimum eigenvalue {min_eig:e}")]
    PositivityBreach { t: f64, min_eig: f64 },

    #[error("correlator blow-up at t = {t}: |c| = {magnitude}")]
    CorrelatorBlowUp { t: f64, magnitude: f64 },

    #[error("no interior Chebyshev root found for N = {0}")]
    NoChebyshevRoot(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
