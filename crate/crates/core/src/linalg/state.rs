//! Density operators, bipartite splits, and the partial trace / transpose.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::eig::hermitian_eig;
use crate::linalg::matrix::{ComplexMatrix, ComplexVector};
use crate::DEFAULT_TOL;

/// Which tensor factor of a bipartite system an operation targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// A validated quantum state: Hermitian, unit-trace, positive-semidefinite
/// within the stored tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
    tol: f64,
}

impl DensityOperator {
    /// Validates Hermiticity, unit trace, and positivity (eigenvalues allowed
    /// down to `-tol`).
    pub fn new(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        let eig = hermitian_eig(&matrix, tol)?;
        let trace = matrix.trace();
        if (trace - Complex64::new(1.0, 0.0)).norm() > tol.max(1e-12) * 10.0 {
            return Err(Error::BadTrace {
                trace: trace.re,
                tol,
            });
        }
        let min = eig.min_eigenvalue();
        if min < -tol {
            return Err(Error::NotPsd {
                min_eigenvalue: min,
            });
        }
        Ok(Self { matrix, tol })
    }

    /// Wraps a matrix that is guaranteed valid by construction (e.g. the
    /// output of a trace-preserving channel applied to a valid state).
    pub fn new_unchecked(matrix: ComplexMatrix, tol: f64) -> Self {
        Self { matrix, tol }
    }

    /// Projector onto a state vector; the vector is normalized first.
    pub fn from_pure(vector: &ComplexVector, tol: f64) -> Result<Self> {
        let norm = vector.norm();
        if norm <= tol {
            return Err(Error::NormalizationFailure { norm });
        }
        let unit = vector.scale(Complex64::new(1.0 / norm, 0.0));
        Ok(Self {
            matrix: unit.projector(),
            tol,
        })
    }

    /// Maximally mixed state `I/d`.
    pub fn maximally_mixed(dim: usize, tol: f64) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim).scale_re(1.0 / dim as f64),
            tol,
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Expectation `<psi|rho|psi>` of the state against a unit vector.
    pub fn expectation(&self, psi: &ComplexVector) -> f64 {
        psi.inner(&self.matrix.mul_vec(psi)).re
    }

    /// `tr[rho^2]`, 1 exactly when the state is pure.
    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }
}

impl Serialize for DensityOperator {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.matrix.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DensityOperator {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let matrix = ComplexMatrix::deserialize(deserializer)?;
        DensityOperator::new(matrix, DEFAULT_TOL).map_err(serde::de::Error::custom)
    }
}

/// A density operator on a two-factor tensor product, with the split
/// recorded so partial operations know the index layout (left factor slow).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BipartiteState {
    dim_left: usize,
    dim_right: usize,
    state: DensityOperator,
}

impl BipartiteState {
    pub fn new(state: DensityOperator, dim_left: usize, dim_right: usize) -> Result<Self> {
        if dim_left * dim_right != state.dim() {
            return Err(Error::DimensionMismatch {
                expected: dim_left * dim_right,
                got: state.dim(),
            });
        }
        Ok(Self {
            dim_left,
            dim_right,
            state,
        })
    }

    pub fn from_pure(vector: &ComplexVector, dim_left: usize, dim_right: usize, tol: f64) -> Result<Self> {
        Self::new(DensityOperator::from_pure(vector, tol)?, dim_left, dim_right)
    }

    /// The maximally entangled vector `sum_i |ii> / sqrt(d)` on `d (x) d`.
    pub fn maximally_entangled(dim: usize, tol: f64) -> Self {
        let mut v = ComplexVector::zeros(dim * dim);
        let amp = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        for i in 0..dim {
            v[i * dim + i] = amp;
        }
        Self {
            dim_left: dim,
            dim_right: dim,
            state: DensityOperator::new_unchecked(v.projector(), tol),
        }
    }

    pub fn dim_left(&self) -> usize {
        self.dim_left
    }

    pub fn dim_right(&self) -> usize {
        self.dim_right
    }

    pub fn state(&self) -> &DensityOperator {
        &self.state
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        self.state.matrix()
    }

    /// Reinterprets the same operator under a different left/right split of
    /// equal total dimension.
    pub fn resplit(&self, dim_left: usize, dim_right: usize) -> Result<Self> {
        Self::new(self.state.clone(), dim_left, dim_right)
    }
}

/// Traces out one factor, keeping `keep`.
pub fn partial_trace(state: &BipartiteState, keep: Side) -> DensityOperator {
    let (dl, dr) = (state.dim_left, state.dim_right);
    let rho = state.matrix();
    let matrix = match keep {
        Side::Left => ComplexMatrix::from_fn(dl, dl, |a, ap| {
            (0..dr).map(|b| rho[(a * dr + b, ap * dr + b)]).sum()
        }),
        Side::Right => ComplexMatrix::from_fn(dr, dr, |b, bp| {
            (0..dl).map(|a| rho[(a * dr + b, a * dr + bp)]).sum()
        }),
    };
    DensityOperator::new_unchecked(matrix, state.state.tol())
}

/// Transposes one factor in place; the result is Hermitian and unit-trace
/// but in general not positive, which is exactly what entanglement tests
/// look for.
pub fn partial_transpose(state: &BipartiteState, side: Side) -> ComplexMatrix {
    let (dl, dr) = (state.dim_left, state.dim_right);
    let rho = state.matrix();
    ComplexMatrix::from_fn(dl * dr, dl * dr, |row, col| {
        let (a, b) = (row / dr, row % dr);
        let (ap, bp) = (col / dr, col % dr);
        match side {
            Side::Left => rho[(ap * dr + b, a * dr + bp)],
            Side::Right => rho[(a * dr + bp, ap * dr + b)],
        }
    })
}
