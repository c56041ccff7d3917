//! Exterior calculus on a single coordinate chart.

mod field;
mod form;
mod jet;
mod map;

pub use field::ScalarField;
pub use form::{FormField, FormValue, MAX_DEGREE};
pub use jet::Jet;
pub use map::ChartMap;
pub(crate) use form::minor_determinant;
