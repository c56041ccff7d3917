//! Locally conformal k-symplectic geometry on coordinate charts.
//!
//! The crate builds the phase bundle of a base chart with a closed Lee form,
//! checks the structure axioms numerically, solves the
//! Hamilton–DeDonder–Weyl equations pointwise, integrates multi-time
//! integral sections and verifies Hamilton–Jacobi conditions for sections.
//!
//! All coefficient functions are written in a small expression language
//! ([`expr`]) and differentiated exactly by forward-mode arithmetic.
//!
//! ```
//! use lcks::problem::ProblemFile;
//!
//! let problem = ProblemFile::punctured_plane(1).build().unwrap();
//! let x = problem
//!     .system
//!     .solve(&[1.0, 0.0, 1.0, 0.0], lcks::Gauge::DarbouxDiagonal)
//!     .unwrap();
//! assert!((x.fields[0][3] + 1.0).abs() < 1e-12);
//! ```

pub mod atlas;
pub mod calculus;
pub mod dynamics;
mod error;
pub mod expr;
pub mod hj;
pub mod linalg;
pub mod problem;
pub mod region;
pub mod structure;

pub use calculus::{ChartMap, FormField, FormValue, ScalarField};
pub use dynamics::{Gauge, GridAxis, HdwSystem, KVectorField, KVectorSource, MultiTimeGrid};
pub use error::Error;
pub use structure::PhaseBundle;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/expressions.md")]
    mod expressions {}
    #[doc = include_str!("../../../book/src/forms.md")]
    mod forms {}
    #[doc = include_str!("../../../book/src/structures.md")]
    mod structures {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
    #[doc = include_str!("../../../book/src/hamilton_jacobi.md")]
    mod hamilton_jacobi {}
    #[doc = include_str!("../../../book/src/atlas.md")]
    mod atlas {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
