//! Exact computations for graded mixed algebras and derived foliations on
//! affine, finitely presented bases.
//!
//! Everything is exact over ℚ. Constructions that are infinite-dimensional in
//! principle are checked inside an explicit truncation [`Window`], which every
//! report records.

pub mod cotangent_derham;
pub mod error;
pub mod exact_core;
pub mod foliation;
pub mod graded_mixed;
pub mod mate_calculus;
pub mod pushforward;

pub use error::{Error, Result};
pub use exact_core::window::Window;
