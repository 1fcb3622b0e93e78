//! Exact rational linear and multilinear algebra over finitely presented algebras.

pub mod algebra;
pub mod complex;
pub mod groebner;
pub mod linalg;
pub mod poly;
pub mod scalar;
pub mod sym;
pub mod window;

pub use algebra::{AlgebraMap, AlgebraPresentation};
pub use complex::{ChainMap, HomologyReport, PerfectComplex, PolyMatrix};
pub use poly::{Monomial, Poly, PolyRing, VarSpec};
pub use scalar::{q, qf, Scalar};
pub use sym::{sym, SymFamily};
