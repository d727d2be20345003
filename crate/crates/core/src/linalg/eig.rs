//! Hermitian eigendecomposition and spectral functions.
//!
//! The solver is nalgebra's `SymmetricEigen`; this module pins down the
//! conventions the rest of the toolkit relies on: validated Hermiticity,
//! eigenvalues sorted in descending order (stable under ties), and a fixed
//! phase per eigenvector so decompositions are reproducible run to run.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::matrix::{ComplexMatrix, ComplexVector};

/// Eigendecomposition of a Hermitian matrix: real eigenvalues in descending
/// order and matching orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    eigenvalues: Vec<f64>,
    vectors: ComplexMatrix,
}

impl HermitianEig {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Eigenvectors as orthonormal columns, column `k` pairing with
    /// `eigenvalues()[k]`.
    pub fn eigenvectors(&self) -> &ComplexMatrix {
        &self.vectors
    }

    pub fn eigenvector(&self, k: usize) -> ComplexVector {
        self.vectors.column(k)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// Rebuilds `sum_k f(lambda_k) |v_k><v_k|`.
    pub fn apply(&self, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
        let n = self.vectors.rows();
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let w = f(lambda);
            if w == Complex64::new(0.0, 0.0) {
                continue;
            }
            let v = self.eigenvector(k);
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] += w * v[i] * v[j].conj();
                }
            }
        }
        out
    }
}

/// Decomposes a Hermitian matrix, erroring if it is rectangular or deviates
/// from Hermiticity by more than `tol`.
///
/// Conventions: eigenvalues descend; ties keep the solver's order; each
/// eigenvector is rotated so its largest-modulus entry (lowest index on ties)
/// is real and non-negative.
pub fn hermitian_eig(matrix: &ComplexMatrix, tol: f64) -> Result<HermitianEig> {
    if !matrix.is_square() {
        return Err(Error::NotSquare {
            rows: matrix.rows(),
            cols: matrix.cols(),
        });
    }
    let deviation = matrix.hermiticity_deviation();
    if deviation > tol {
        return Err(Error::NotHermitian { deviation, tol });
    }
    let n = matrix.dim();
    if n == 0 {
        return Ok(HermitianEig {
            eigenvalues: Vec::new(),
            vectors: ComplexMatrix::zeros(0, 0),
        });
    }
    // Symmetrize so sub-tolerance asymmetry cannot leak into the solver.
    let h = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        (matrix[(i, j)] + matrix[(j, i)].conj()).scale(0.5)
    });
    let se = h.symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        se.eigenvalues[b]
            .partial_cmp(&se.eigenvalues[a])
            .expect("eigenvalues are finite")
    });

    let eigenvalues: Vec<f64> = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = se.eigenvectors.column(src);
        // Phase convention: largest-modulus entry becomes real non-negative.
        let mut pivot = 0;
        for i in 1..n {
            if col[i].norm() > col[pivot].norm() {
                pivot = i;
            }
        }
        let phase = if col[pivot].norm() > 0.0 {
            col[pivot].conj() / col[pivot].norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            vectors[(i, dst)] = col[i] * phase;
        }
    }
    Ok(HermitianEig {
        eigenvalues,
        vectors,
    })
}

/// Positive-semidefinite square root via the spectral decomposition.
///
/// Eigenvalues in `[-tol, 0]` are clamped to zero; anything below `-tol`
/// means the input is not PSD and is an error.
pub fn psd_sqrt(matrix: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(matrix, tol)?;
    let min = eig.min_eigenvalue();
    if min < -tol {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
        });
    }
    Ok(eig.apply(|lambda| Complex64::new(lambda.max(0.0).sqrt(), 0.0)))
}

/// Unitary `exp(-i H t)` for Hermitian `H`, built spectrally.
pub fn hermitian_evolution(hamiltonian: &ComplexMatrix, t: f64, tol: f64) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(hamiltonian, tol)?;
    Ok(eig.apply(|lambda| Complex64::from_polar(1.0, -lambda * t)))
}
