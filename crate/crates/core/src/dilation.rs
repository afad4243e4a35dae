//! Halmos dilation of a positive contraction.
//!
//! For `0 ≤ T ≤ I` on `R^d`, the block operator
//!
//! ```text
//!     P = [[ T,  S   ],
//!          [ S,  I-T ]],     S = sqrt(T(I-T))
//! ```
//!
//! is an orthogonal projection on `L = R^{2d}`, and with the isometry
//! `W x = (x, 0)` one has `T = WᵀPW`. `S` shares the eigenvectors of `T`, so
//! `TS = ST` and `P² = P` follows blockwise.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::Result;
use crate::linalg::{ensure_positive_contraction, spectral, SymOperator, Vector};

/// `T = WᵀPW` with `W` an isometry into `R^{2d}` and `P` a projection there.
#[derive(Debug, Clone)]
pub struct Dilation {
    /// `2d × d` isometry `x ↦ (x, 0)`.
    pub isometry: DMatrix<f64>,
    /// `2d × 2d` orthogonal projection.
    pub projection: SymOperator,
    /// Largest distance an eigenvalue of `T` was moved to land in `[0, 1]`.
    pub clamp: f64,
}

impl Dilation {
    pub fn dim(&self) -> usize {
        self.isometry.ncols()
    }

    /// `‖PWx‖² + ‖(I-P)Wx‖² - ‖x‖²`, which vanishes because `P` is a
    /// projection and `W` an isometry.
    pub fn pythagoras_defect(&self, x: &Vector) -> f64 {
        let wx = &self.isometry * x.as_dvector();
        let pwx = self.projection.matrix() * &wx;
        let rest = &wx - &pwx;
        pwx.norm_squared() + rest.norm_squared() - x.norm_sq()
    }

    /// The two compressions `‖WᵀPWx‖² ≤ ‖PWx‖²` and
    /// `‖Wᵀ(I-P)Wx‖² ≤ ‖(I-P)Wx‖²`, returned as their slacks.
    pub fn compression_slacks(&self, x: &Vector) -> (f64, f64) {
        let wx = &self.isometry * x.as_dvector();
        let pwx = self.projection.matrix() * &wx;
        let rest = &wx - &pwx;
        let w_t = self.isometry.transpose();
        let a = pwx.norm_squared() - (&w_t * &pwx).norm_squared();
        let b = rest.norm_squared() - (&w_t * &rest).norm_squared();
        (a, b)
    }
}

pub fn halmos_dilate(t: &SymOperator) -> Result<Dilation> {
    ensure_positive_contraction(t)?;
    let d = t.dim();
    let spec = spectral(t)?;
    let clamp = spec
        .eigenvalues
        .iter()
        .map(|&l| (l - l.clamp(0.0, 1.0)).abs())
        .fold(0.0, f64::max);
    let s = spec.map_eigenvalues(|l| {
        let l = l.clamp(0.0, 1.0);
        (l * (1.0 - l)).sqrt()
    });

    let mut p = DMatrix::zeros(2 * d, 2 * d);
    p.view_mut((0, 0), (d, d)).copy_from(t.matrix());
    p.view_mut((0, d), (d, d)).copy_from(s.matrix());
    p.view_mut((d, 0), (d, d)).copy_from(s.matrix());
    p.view_mut((d, d), (d, d)).copy_from(t.complement().matrix());

    let mut w = DMatrix::zeros(2 * d, d);
    w.view_mut((0, 0), (d, d)).fill_with_identity();

    Ok(Dilation {
        isometry: w,
        projection: SymOperator::from_matrix_unchecked(p),
        clamp,
    })
}

/// Residual norms of the three dilation identities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DilationReport {
    /// `‖WᵀW - I‖_F`
    pub isometry_residual: f64,
    /// `‖P² - P‖_F`
    pub idempotence_residual: f64,
    /// `‖WᵀPW - T‖_F`
    pub compression_residual: f64,
    pub pass: bool,
}

pub fn verify_dilation(t: &SymOperator, dilation: &Dilation, tol: f64) -> DilationReport {
    let w = &dilation.isometry;
    let d = w.ncols();
    let isometry_residual = (w.transpose() * w - DMatrix::<f64>::identity(d, d)).norm();
    let idempotence_residual = dilation.projection.idempotence_defect();
    let compression = w.transpose() * dilation.projection.matrix() * w;
    let compression_residual = (compression - t.matrix()).norm();
    DilationReport {
        isometry_residual,
        idempotence_residual,
        compression_residual,
        pass: isometry_residual <= tol && idempotence_residual <= tol && compression_residual <= tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{gaussian_vector, random_positive_contraction};
    use crate::rng::RngStream;

    #[test]
    fn zero_and_identity() {
        for d in [1, 3, 5] {
            let dz = halmos_dilate(&SymOperator::zeros(d)).unwrap();
            let p = dz.projection.matrix();
            assert!(p.view((0, 0), (d, d)).iter().all(|&e| e == 0.0));
            assert!(p.view((0, d), (d, d)).iter().all(|&e| e == 0.0));
            assert_eq!(p.view((d, d), (d, d)).into_owned(), DMatrix::<f64>::identity(d, d));
            let r = verify_dilation(&SymOperator::zeros(d), &dz, 1e-10);
            assert_eq!((r.isometry_residual, r.idempotence_residual, r.compression_residual), (0.0, 0.0, 0.0));

            let di = halmos_dilate(&SymOperator::identity(d)).unwrap();
            let p = di.projection.matrix();
            assert_eq!(p.view((0, 0), (d, d)).into_owned(), DMatrix::<f64>::identity(d, d));
            assert!(p.view((d, d), (d, d)).iter().all(|&e| e == 0.0));
            let r = verify_dilation(&SymOperator::identity(d), &di, 1e-10);
            assert_eq!((r.isometry_residual, r.idempotence_residual, r.compression_residual), (0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn diagonal_block_formula() {
        let t = SymOperator::diagonal(&[0.5, 0.25]).unwrap();
        let dil = halmos_dilate(&t).unwrap();
        let s = dil.projection.matrix().view((0, 2), (2, 2)).into_owned();
        assert!((s[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((s[(1, 1)] - 3f64.sqrt() / 4.0).abs() < 1e-15);
        assert!(s[(0, 1)].abs() < 1e-15);
        let r = verify_dilation(&t, &dil, 1e-10);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn random_contractions_dilate() {
        let mut rng = RngStream::new(5, 0).rng();
        for _ in 0..1_000 {
            let t = random_positive_contraction(6, &mut rng);
            let dil = halmos_dilate(&t).unwrap();
            assert!(verify_dilation(&t, &dil, 1e-10).pass);
            let x = gaussian_vector(6, &mut rng);
            assert!(dil.pythagoras_defect(&x).abs() <= 1e-10 * x.norm_sq());
            let (a, b) = dil.compression_slacks(&x);
            assert!(a >= -1e-12 * x.norm_sq() && b >= -1e-12 * x.norm_sq());
        }
    }

    #[test]
    fn rejects_non_contraction() {
        assert!(halmos_dilate(&SymOperator::scaled_identity(2, 1.5)).is_err());
    }

    #[test]
    fn clamp_is_recorded() {
        // Eigenvalue 1 + 5e-10 is inside the contraction tolerance but is
        // clamped before the square root.
        let t = SymOperator::diagonal(&[1.0 + 5e-10, 0.5]).unwrap();
        let dil = halmos_dilate(&t).unwrap();
        assert!((dil.clamp - 5e-10).abs() < 1e-15);
    }
}
