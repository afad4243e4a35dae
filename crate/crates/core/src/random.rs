//! Random test objects: Haar orthogonal matrices, positive contractions
//! and projections.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{make_projection, SymOperator, Vector};

/// Haar-distributed orthogonal matrix: QR of a standard Gaussian matrix with
/// the signs of `diag(R)` folded into `Q`.
pub fn haar_orthogonal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(dim, dim, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `Q diag(eigenvalues) Qᵀ` for a Haar `Q`.
pub fn conjugate_spectrum<R: Rng + ?Sized>(eigenvalues: &[f64], rng: &mut R) -> SymOperator {
    let q = haar_orthogonal(eigenvalues.len(), rng);
    let mut scaled = q.clone();
    for (j, &l) in eigenvalues.iter().enumerate() {
        scaled.column_mut(j).scale_mut(l);
    }
    SymOperator::from_matrix_unchecked(scaled * q.transpose())
}

/// Positive contraction with i.i.d. uniform eigenvalues on `[lo, hi]`.
pub fn random_spectral<R: Rng + ?Sized>(dim: usize, lo: f64, hi: f64, rng: &mut R) -> SymOperator {
    let eigenvalues: Vec<f64> = (0..dim).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect();
    conjugate_spectrum(&eigenvalues, rng)
}

pub fn random_positive_contraction<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> SymOperator {
    random_spectral(dim, 0.0, 1.0, rng)
}

pub fn gaussian_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vector {
    Vector::from_dvector_unchecked(DVector::from_fn(dim, |_, _| StandardNormal.sample(rng)))
}

pub fn random_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vector {
    loop {
        let g = gaussian_vector(dim, rng);
        let n = g.norm();
        if n > 1e-300 {
            return Vector::from_dvector_unchecked(g.into_dvector() / n);
        }
    }
}

/// Gaussian basis of `rank` vectors in `R^dim`.
pub fn random_basis<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> Vec<Vector> {
    (0..rank).map(|_| gaussian_vector(dim, rng)).collect()
}

/// Orthogonal projection onto a uniformly random subspace of the given rank.
pub fn random_projection<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> SymOperator {
    if rank == 0 {
        return SymOperator::zeros(dim);
    }
    loop {
        if let Ok(p) = make_projection(&random_basis(dim, rank, rng)) {
            return p;
        }
    }
}
