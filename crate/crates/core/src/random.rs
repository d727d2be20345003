//! Seeded random sampling of states, unitaries, and effect families.
//!
//! Everything here consumes a caller-supplied RNG so callers control
//! determinism; the toolkit's own certifiers use `ChaCha8Rng` seeded from a
//! user-visible `u64` with one RNG stream per trial.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{hermitian_eig, ComplexMatrix, ComplexVector};

fn complex_gaussian(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

/// Matrix with independent standard-complex-Gaussian entries.
pub fn ginibre(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Haar-distributed random unit vector.
pub fn haar_state(dim: usize, rng: &mut impl Rng) -> ComplexVector {
    assert!(dim > 0, "haar_state of dimension 0");
    loop {
        let v = ComplexVector::new((0..dim).map(|_| complex_gaussian(rng)).collect())
            .expect("gaussian entries are finite");
        if v.norm() > 1e-6 {
            return v.normalized();
        }
    }
}

/// Haar-distributed random unitary via modified Gram-Schmidt on a Ginibre
/// matrix, with each pivot phase fixed to make the distribution exactly
/// Haar.
pub fn haar_unitary(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let g = ginibre(dim, dim, rng);
    let mut cols: Vec<ComplexVector> = (0..dim).map(|j| g.column(j)).collect();
    for j in 0..dim {
        for i in 0..j {
            let overlap = cols[i].inner(&cols[j]);
            cols[j] = cols[j].sub(&cols[i].scale(overlap));
        }
        // Phase-fix with the original pivot's direction so the resulting
        // distribution matches QR with positive diagonal of R.
        cols[j] = cols[j].normalized();
    }
    ComplexMatrix::from_fn(dim, dim, |i, j| cols[j][i])
}

/// Random rank-`rank` density matrix `G G^dag / tr` with Ginibre `G`.
pub fn random_density_matrix(dim: usize, rank: usize, rng: &mut impl Rng) -> ComplexMatrix {
    assert!(rank >= 1 && rank <= dim, "rank must be in 1..=dim");
    let g = ginibre(dim, rank, rng);
    let m = &g * &g.adjoint();
    let tr = m.trace().re;
    m.scale_re(1.0 / tr)
}

/// Random family of `outcomes` positive effects summing to the identity:
/// Ginibre blocks `A_i A_i^dag` whitened by the inverse square root of
/// their sum.
pub fn random_effects(dim: usize, outcomes: usize, rng: &mut impl Rng) -> Vec<ComplexMatrix> {
    assert!(outcomes >= 1, "need at least one outcome");
    let blocks: Vec<ComplexMatrix> = (0..outcomes)
        .map(|_| {
            let a = ginibre(dim, dim, rng);
            &a * &a.adjoint()
        })
        .collect();
    let mut total = ComplexMatrix::zeros(dim, dim);
    for b in &blocks {
        total = &total + b;
    }
    // The sum of Ginibre blocks is positive definite almost surely, so the
    // inverse square root exists.
    let eig = hermitian_eig(&total, 1e-8).expect("sum of PSD blocks is Hermitian");
    let whitener = eig.apply(|lambda| Complex64::new(1.0 / lambda.sqrt(), 0.0));
    blocks
        .into_iter()
        .map(|b| &(&whitener * &b) * &whitener)
        .collect()
}
