use alloc::string::String;

/// Errors produced by the solver pipeline.
///
/// The variants map onto the command-line exit codes: input problems
/// ([`Error::Dimension`], [`Error::Domain`]) exit with 2, problems without an
/// admissible control ([`Error::Infeasible`], [`Error::Inadmissible`]) with 3,
/// and numerical failures ([`Error::Numeric`], [`Error::Inconsistency`]) with 4.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("infeasible problem: {0}")]
    Infeasible(String),
    #[error("inadmissible problem: {0}")]
    Inadmissible(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("numerical inconsistency: {0}")]
    Inconsistency(String),
}

pub type Result<T> = core::result::Result<T, Error>;
