//! File formats, commands and the property suite behind the `timeopt`
//! binary.
//!
//! Exit codes: 0 success, 2 bad input, 3 inadmissible problem, 4 numeric
//! inconsistency (including failed checks).

pub mod commands;
pub mod problem_file;
pub mod propsuite;
pub mod report_file;
pub mod trajectory;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("{0}")]
    Other(String),
}

impl InputError {
    pub fn field(field: &str, message: String) -> Self {
        InputError::Field { field: field.to_string(), message }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(#[from] InputError),
    #[error("inadmissible problem: {0}")]
    Inadmissible(String),
    #[error("numeric inconsistency: {0}")]
    Inconsistency(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io { .. } => 2,
            CliError::Inadmissible(_) => 3,
            CliError::Inconsistency(_) => 4,
        }
    }
}

impl From<timeopt_core::Error> for CliError {
    fn from(e: timeopt_core::Error) -> Self {
        use timeopt_core::Error as E;
        match e {
            E::Dimension(_) | E::Domain(_) => CliError::Input(InputError::Other(e.to_string())),
            E::Infeasible(_) | E::Inadmissible(_) => CliError::Inadmissible(e.to_string()),
            E::Numeric(_) | E::Inconsistency(_) => CliError::Inconsistency(e.to_string()),
        }
    }
}
