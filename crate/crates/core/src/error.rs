use thiserror::Error;

use crate::experiment::Violation;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed experiment file at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid experiment at `{}`: {}", .0[0].path, .0[0].message)]
    Validation(Vec<Violation>),
}

impl SpecError {
    /// Field paths of every violation (empty for I/O and parse errors).
    pub fn violation_paths(&self) -> Vec<&str> {
        match self {
            SpecError::Validation(v) => v.iter().map(|v| v.path.as_str()).collect(),
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("{0} is not axis-separable")]
    NotSeparable(&'static str),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("quadrature did not converge: value {value:e}, estimated error {error:e}")]
    NotConverged { value: f64, error: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("lattice would have {requested} sites, above the cap of {cap}")]
    TooManySites { requested: u128, cap: u128 },
    #[error("invalid lattice spacing {0:e}")]
    InvalidSpacing(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HeatingError {
    #[error("quadrature not converged (partial value {partial_value:e} W, relative error {relative_error:e})")]
    QuadratureNotConverged {
        partial_value: f64,
        relative_error: f64,
    },
    #[error("internal heating rate {value:e} W is negative beyond tolerance")]
    NegativeInternalRate { value: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error(transparent)]
    Heating(#[from] HeatingError),
    #[error("infeasible design: {0}")]
    InfeasibleDesign(String),
    #[error("design constraint violated: {0}")]
    ConstraintViolation(String),
}
