use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{n_sites} sites exceeds the supported maximum of {max}")]
    TooManySites { n_sites: usize, max: usize },

    #[error("sector ({n_up}, {n_dn}) is invalid for {n_sites} sites")]
    InvalidSector {
        n_sites: usize,
        n_up: usize,
        n_dn: usize,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("basis mismatch: {left} vs {right}")]
    BasisMismatch { left: String, right: String },

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("at least two particles are required to fold a one-body term, got {0}")]
    TooFewParticles(usize),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("generator is not anti-Hermitian (max deviation {0:e})")]
    NotAntiHermitian(f64),

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("density matrix trace deviates from one (trace {0})")]
    BadTrace(f64),

    #[error("energy contraction has imaginary residue {0:e}")]
    ComplexEnergy(f64),

    #[error(
        "ground state is degenerate (gap {gap:e} <= tolerance {tol:e}); unique completion requires a non-degenerate ground state"
    )]
    DegenerateGroundState { gap: f64, tol: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("operator pool is empty")]
    EmptyPool,

    #[error("critical subset is empty")]
    EmptySubset,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable code, used by the CLI on failure.
    pub fn code(&self) -> &'static str {
        match self {
            Error::TooManySites { .. } => "too_many_sites",
            Error::InvalidSector { .. } => "invalid_sector",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::BasisMismatch { .. } => "basis_mismatch",
            Error::InvalidParams(_) => "invalid_params",
            Error::TooFewParticles(_) => "too_few_particles",
            Error::NotHermitian(_) => "not_hermitian",
            Error::NotAntiHermitian(_) => "not_anti_hermitian",
            Error::NotNormalized(_) => "not_normalized",
            Error::BadTrace(_) => "bad_trace",
            Error::ComplexEnergy(_) => "complex_energy",
            Error::DegenerateGroundState { .. } => "degenerate_ground_state",
            Error::InvalidConfig(_) => "invalid_config",
            Error::EmptyPool => "empty_pool",
            Error::EmptySubset => "empty_subset",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
        }
    }
}
