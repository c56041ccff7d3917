use thiserror::Error;

use crate::dynamics::MultiTimeGrid;
use crate::expr::ExprError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("form degree {degree} is above the supported maximum of 3")]
    DegreeOverflow { degree: usize },
    #[error("interior product is undefined on 0-forms")]
    DegreeUnderflow,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("Lee form is not closed: |dϑ| = {residual:e} at {point:?}")]
    NotClosed { residual: f64, point: Vec<f64> },
    #[error("contraction system for component {component} is inconsistent: residual {residual:e}")]
    Inconsistent { component: usize, residual: f64 },
    #[error("right-hand side is outside the range of the flat map at {point:?}: residual {residual:e}")]
    OutOfRange { residual: f64, point: Vec<f64> },
    #[error("left the chart domain at grid index {index:?}")]
    DomainEscape {
        index: Vec<usize>,
        partial: Option<Box<MultiTimeGrid>>,
    },
    #[error("precondition `{which}` failed: residual {residual:e}")]
    PreconditionFailed { which: String, residual: f64 },
    #[error("no sample landed in a triple overlap of the atlas")]
    EmptyOverlap,
    #[error("Lee form differs from dσ on patch `{patch}`: residual {residual:e}")]
    NotExactOnPatch { patch: String, residual: f64 },
    #[error("{field}: {source}")]
    InField {
        field: String,
        #[source]
        source: Box<Error>,
    },
    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    /// Attaches the name of the input field that produced the error.
    pub fn in_field(self, field: impl Into<String>) -> Error {
        Error::InField {
            field: field.into(),
            source: Box::new(self),
        }
    }

    /// Whether the error stems from malformed or inconsistent input rather
    /// than from a numerical check.
    pub fn is_input(&self) -> bool {
        match self {
            Error::InField { source, .. } => source.is_input(),
            Error::Expr(_)
            | Error::DegreeOverflow { .. }
            | Error::DegreeUnderflow
            | Error::DimensionMismatch { .. }
            | Error::NotClosed { .. }
            | Error::Invalid(_) => true,
            _ => false,
        }
    }
}
