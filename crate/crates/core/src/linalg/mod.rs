//! Complex linear algebra: matrices, Hermitian spectral calculus, and
//! bipartite state plumbing.

mod eig;
mod matrix;
mod state;

pub use eig::{hermitian_eig, hermitian_evolution, psd_sqrt, HermitianEig};
pub use matrix::{frobenius_distance, ComplexMatrix, ComplexVector};
pub use state::{partial_trace, partial_transpose, BipartiteState, DensityOperator, Side};
