//! Finite-dimensional Hilbert-space primitives on `R^d`.
//!
//! [`Vector`] and [`SymOperator`] are validated wrappers around nalgebra's
//! dense types. Both are immutable once constructed. Their JSON form is
//! `{"dim": d, "entries": [...]}` with operator entries in row-major order.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for the symmetry check on operator construction.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Spectral tolerance for the positive-contraction test.
pub const CONTRACTION_TOL: f64 = 1e-9;
/// Relative pivot below which a basis vector counts as linearly dependent.
pub const PIVOT_TOL: f64 = 1e-10;

/// A vector in `H = R^d` with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VectorRepr", into = "DimEntries")]
pub struct Vector(DVector<f64>);

#[derive(Serialize, Deserialize)]
struct DimEntries {
    dim: usize,
    entries: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum VectorRepr {
    Plain(Vec<f64>),
    Tagged(DimEntries),
}

impl TryFrom<VectorRepr> for Vector {
    type Error = Error;

    fn try_from(repr: VectorRepr) -> Result<Self> {
        match repr {
            VectorRepr::Plain(entries) => Vector::new(entries),
            VectorRepr::Tagged(DimEntries { dim, entries }) => {
                if entries.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: entries.len(),
                    });
                }
                Vector::new(entries)
            }
        }
    }
}

impl From<Vector> for DimEntries {
    fn from(v: Vector) -> Self {
        DimEntries {
            dim: v.dim(),
            entries: v.0.as_slice().to_vec(),
        }
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Empty("vector"));
        }
        check_finite(&entries)?;
        Ok(Vector(DVector::from_vec(entries)))
    }

    pub fn from_dvector(v: DVector<f64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::Empty("vector"));
        }
        check_finite(v.as_slice())?;
        Ok(Vector(v))
    }

    /// Wraps a vector known to be finite and nonempty.
    pub(crate) fn from_dvector_unchecked(v: DVector<f64>) -> Self {
        debug_assert!(!v.is_empty());
        Vector(v)
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(DVector::zeros(dim))
    }

    /// Canonical basis vector `e_index`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[index] = 1.0;
        Vector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn as_dvector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_dvector(self) -> DVector<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.norm_squared()
    }

    pub fn dot(&self, other: &Vector) -> Result<f64> {
        same_dim(self.dim(), other.dim())?;
        Ok(self.0.dot(&other.0))
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &Vector, beta: f64) -> Result<Vector> {
        same_dim(self.dim(), other.dim())?;
        Vector::from_dvector(&self.0 * alpha + &other.0 * beta)
    }
}

fn same_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum EntriesRepr {
    Flat(Vec<f64>),
    Nested(Vec<Vec<f64>>),
}

impl EntriesRepr {
    /// Row-major flattening plus the row count when nested.
    fn flatten(self) -> (Vec<f64>, Option<usize>, Option<usize>) {
        match self {
            EntriesRepr::Flat(v) => (v, None, None),
            EntriesRepr::Nested(rows) => {
                let m = rows.len();
                let n = rows.first().map_or(0, Vec::len);
                if rows.iter().any(|r| r.len() != n) {
                    // Ragged rows: report through the length check downstream.
                    return (rows.into_iter().flatten().collect(), Some(m), None);
                }
                (rows.into_iter().flatten().collect(), Some(m), Some(n))
            }
        }
    }
}

#[derive(Deserialize)]
struct OperatorRepr {
    dim: usize,
    entries: EntriesRepr,
}

#[derive(Serialize)]
struct OperatorOut {
    dim: usize,
    entries: Vec<f64>,
}

/// A selfadjoint operator on `R^d`, stored densely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OperatorRepr", into = "OperatorOut")]
pub struct SymOperator(DMatrix<f64>);

impl TryFrom<OperatorRepr> for SymOperator {
    type Error = Error;

    fn try_from(repr: OperatorRepr) -> Result<Self> {
        let (flat, rows, cols) = repr.entries.flatten();
        let d = repr.dim;
        if rows.is_some_and(|m| m != d) || (rows.is_some() && cols != Some(d)) {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                found: flat.len(),
            });
        }
        if flat.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                found: flat.len(),
            });
        }
        SymOperator::new(DMatrix::from_row_slice(d, d, &flat))
    }
}

impl From<SymOperator> for OperatorOut {
    fn from(op: SymOperator) -> Self {
        let d = op.dim();
        let entries = (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| op.0[(i, j)])
            .collect();
        OperatorOut { dim: d, entries }
    }
}

impl SymOperator {
    /// Validates squareness, finiteness and symmetry, then stores the exact
    /// symmetric part.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let (m, n) = matrix.shape();
        if m == 0 {
            return Err(Error::Empty("operator"));
        }
        same_dim(m, n)?;
        check_finite(matrix.as_slice())?;
        let scale = matrix.amax().max(1.0);
        let asymmetry = (&matrix - matrix.transpose()).amax();
        let tol = SYMMETRY_TOL * scale;
        if asymmetry > tol {
            return Err(Error::NotSymmetric { asymmetry, tol });
        }
        Ok(Self::from_matrix_unchecked(matrix))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidArgument("operator rows must form a square array".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        if d == 0 {
            return Err(Error::Empty("operator"));
        }
        Self::new(DMatrix::from_row_slice(d, d, &flat))
    }

    /// Symmetrizes a matrix that is symmetric up to rounding.
    pub(crate) fn from_matrix_unchecked(matrix: DMatrix<f64>) -> Self {
        let sym = (&matrix + matrix.transpose()) * 0.5;
        SymOperator(sym)
    }

    pub fn identity(dim: usize) -> Self {
        SymOperator(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        SymOperator(DMatrix::zeros(dim, dim))
    }

    pub fn scaled_identity(dim: usize, scale: f64) -> Self {
        SymOperator(DMatrix::identity(dim, dim) * scale)
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::Empty("operator"));
        }
        check_finite(diag)?;
        Ok(SymOperator(DMatrix::from_diagonal(&DVector::from_column_slice(diag))))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    /// `I - self`.
    pub fn complement(&self) -> SymOperator {
        let d = self.dim();
        SymOperator(DMatrix::identity(d, d) - &self.0)
    }

    /// `self²`, which is again symmetric.
    pub fn square(&self) -> SymOperator {
        SymOperator::from_matrix_unchecked(&self.0 * &self.0)
    }

    /// `⟨x, T x⟩`.
    pub fn quadratic_form(&self, x: &Vector) -> Result<f64> {
        same_dim(self.dim(), x.dim())?;
        Ok(x.0.dot(&(&self.0 * &x.0)))
    }

    /// Frobenius norm of `T² - T`; zero for orthogonal projections.
    pub fn idempotence_defect(&self) -> f64 {
        (&self.0 * &self.0 - &self.0).norm()
    }

    pub fn is_projection(&self, tol: f64) -> bool {
        self.idempotence_defect() <= tol
    }
}

/// Matrix-vector product `Tx`.
pub fn apply(op: &SymOperator, x: &Vector) -> Result<Vector> {
    same_dim(op.dim(), x.dim())?;
    Ok(Vector(&op.0 * &x.0))
}

/// Eigendecomposition `T = Q Λ Qᵀ` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct SpectralDecomp {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, ordered like `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
}

impl SpectralDecomp {
    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    pub fn eigenvector(&self, i: usize) -> Vector {
        Vector(self.eigenvectors.column(i).into_owned())
    }

    /// `Q f(Λ) Qᵀ` for a scalar function applied to each eigenvalue.
    pub fn map_eigenvalues(&self, f: impl Fn(f64) -> f64) -> SymOperator {
        let q = &self.eigenvectors;
        let mut scaled = q.clone();
        for (j, &lambda) in self.eigenvalues.iter().enumerate() {
            let s = f(lambda);
            scaled.column_mut(j).scale_mut(s);
        }
        SymOperator::from_matrix_unchecked(scaled * q.transpose())
    }

    pub fn reconstruct(&self) -> SymOperator {
        self.map_eigenvalues(|l| l)
    }

    /// `‖QᵀQ - I‖_F`.
    pub fn orthonormality_defect(&self) -> f64 {
        let d = self.eigenvalues.len();
        (self.eigenvectors.transpose() * &self.eigenvectors - DMatrix::identity(d, d)).norm()
    }
}

fn eigen_iterations(d: usize) -> usize {
    1_000 + 100 * d
}

/// Full symmetric eigendecomposition with eigenvalues sorted ascending.
pub fn spectral(op: &SymOperator) -> Result<SpectralDecomp> {
    let d = op.dim();
    let eig = SymmetricEigen::try_new(op.0.clone(), f64::EPSILON, eigen_iterations(d))
        .ok_or(Error::EigenNoConvergence(d))?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = DMatrix::from_fn(d, d, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(SpectralDecomp {
        eigenvalues,
        eigenvectors,
    })
}

/// `(λ_min, λ_max)` without eigenvectors.
pub fn extreme_eigenvalues(op: &SymOperator) -> Result<(f64, f64)> {
    let d = op.dim();
    let eig = SymmetricEigen::try_new(op.0.clone(), f64::EPSILON, eigen_iterations(d))
        .ok_or(Error::EigenNoConvergence(d))?;
    let lo = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

/// Outcome of the `0 ≤ T ≤ I` test together with its spectral certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContractionCertificate {
    pub is_contraction: bool,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

pub fn is_positive_contraction(op: &SymOperator, tol: f64) -> Result<ContractionCertificate> {
    let (lambda_min, lambda_max) = extreme_eigenvalues(op)?;
    Ok(ContractionCertificate {
        is_contraction: lambda_min >= -tol && lambda_max <= 1.0 + tol,
        lambda_min,
        lambda_max,
    })
}

/// Errors unless `op` is a positive contraction at [`CONTRACTION_TOL`].
pub fn ensure_positive_contraction(op: &SymOperator) -> Result<ContractionCertificate> {
    let cert = is_positive_contraction(op, CONTRACTION_TOL)?;
    if cert.is_contraction {
        Ok(cert)
    } else {
        Err(Error::NotContraction {
            lambda_min: cert.lambda_min,
            lambda_max: cert.lambda_max,
        })
    }
}

/// `‖x‖² - ‖Tx‖² - ‖x - Tx‖²`, which is nonnegative for every positive
/// contraction and vanishes for orthogonal projections.
pub fn contraction_gap(op: &SymOperator, x: &Vector) -> Result<f64> {
    same_dim(op.dim(), x.dim())?;
    ensure_positive_contraction(op)?;
    Ok(contraction_gap_unchecked(op, x))
}

pub(crate) fn contraction_gap_unchecked(op: &SymOperator, x: &Vector) -> f64 {
    let tx = &op.0 * &x.0;
    let rest = &x.0 - &tx;
    x.0.norm_squared() - tx.norm_squared() - rest.norm_squared()
}

/// Orthonormal basis of `span(basis)` by twice-iterated modified Gram-Schmidt.
pub fn orthonormalize(basis: &[Vector]) -> Result<Vec<DVector<f64>>> {
    let first = basis.first().ok_or(Error::Empty("basis"))?;
    let d = first.dim();
    let mut q: Vec<DVector<f64>> = Vec::with_capacity(basis.len());
    for (index, v) in basis.iter().enumerate() {
        same_dim(d, v.dim())?;
        let original = v.norm();
        let mut w = v.0.clone();
        for _ in 0..2 {
            for u in &q {
                let c = u.dot(&w);
                w.axpy(-c, u, 1.0);
            }
        }
        let pivot = w.norm();
        if original == 0.0 || pivot < PIVOT_TOL * original {
            return Err(Error::RankDeficient { index });
        }
        q.push(w / pivot);
    }
    Ok(q)
}

/// Orthogonal projection onto the span of linearly independent vectors.
pub fn make_projection(basis: &[Vector]) -> Result<SymOperator> {
    let q = orthonormalize(basis)?;
    let d = q[0].len();
    let mut p = DMatrix::zeros(d, d);
    for u in &q {
        p.ger(1.0, u, u, 1.0);
    }
    Ok(SymOperator::from_matrix_unchecked(p))
}

/// `a aᵀ / ‖a‖²`.
pub fn rank_one_projection(a: &Vector) -> Result<SymOperator> {
    let n2 = a.norm_sq();
    if n2 == 0.0 {
        return Err(Error::RankDeficient { index: 0 });
    }
    Ok(SymOperator::from_matrix_unchecked(&a.0 * a.0.transpose() / n2))
}

/// Serde adapter for rectangular row-major matrices:
/// `{"rows": m, "cols": n, "entries": [...]}` or a bare nested array.
pub mod row_matrix {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Nested(Vec<Vec<f64>>),
        Tagged {
            rows: usize,
            cols: usize,
            entries: EntriesRepr,
        },
    }

    #[derive(Serialize)]
    struct Out<'a> {
        rows: usize,
        cols: usize,
        entries: &'a [f64],
    }

    pub fn parse_nested(rows: &[Vec<f64>]) -> std::result::Result<DMatrix<f64>, String> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if m == 0 || n == 0 {
            return Err("matrix must be nonempty".into());
        }
        if let Some(i) = rows.iter().position(|r| r.len() != n) {
            return Err(format!("row {i} has {} entries, expected {n}", rows[i].len()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        if flat.iter().any(|v| !v.is_finite()) {
            return Err("matrix entries must be finite".into());
        }
        Ok(DMatrix::from_row_slice(m, n, &flat))
    }

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        let flat: Vec<f64> = m.transpose().as_slice().to_vec();
        Out {
            rows: m.nrows(),
            cols: m.ncols(),
            entries: &flat,
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<DMatrix<f64>, D::Error> {
        use serde::de::Error as _;
        match Repr::deserialize(d)? {
            Repr::Nested(rows) => parse_nested(&rows).map_err(D::Error::custom),
            Repr::Tagged {
                rows,
                cols,
                entries,
            } => {
                let (flat, _, _) = entries.flatten();
                if flat.len() != rows * cols || rows == 0 || cols == 0 {
                    return Err(D::Error::custom(format!(
                        "matrix expects {rows}x{cols} entries, found {}",
                        flat.len()
                    )));
                }
                if flat.iter().any(|v| !v.is_finite()) {
                    return Err(D::Error::custom("matrix entries must be finite"));
                }
                Ok(DMatrix::from_row_slice(rows, cols, &flat))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn v(x: &[f64]) -> Vector {
        Vector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn apply_small_cases() {
        let x = v(&[3.0, 4.0]);
        assert_eq!(apply(&SymOperator::identity(2), &x).unwrap(), x);
        assert_eq!(apply(&SymOperator::zeros(2), &x).unwrap(), v(&[0.0, 0.0]));
        let d = SymOperator::diagonal(&[0.5, 0.25]).unwrap();
        assert_eq!(apply(&d, &v(&[2.0, 4.0])).unwrap(), v(&[1.0, 1.0]));
    }

    #[test]
    fn apply_rejects_dimension_mismatch() {
        let err = apply(&SymOperator::identity(3), &v(&[1.0, 2.0])).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 3, found: 2 }));
    }

    #[test]
    fn construction_rejects_bad_input() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(SymOperator::new(asym), Err(Error::NotSymmetric { .. })));
        let nan = DMatrix::from_row_slice(1, 1, &[f64::NAN]);
        assert!(matches!(SymOperator::new(nan), Err(Error::NonFinite(0))));
        assert!(matches!(Vector::new(vec![1.0, f64::INFINITY]), Err(Error::NonFinite(1))));
        assert!(Vector::new(vec![]).is_err());
        // Rounding-level asymmetry is accepted and removed.
        let almost = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5 + 1e-15, 1.0]);
        let op = SymOperator::new(almost).unwrap();
        assert_eq!(op.matrix()[(0, 1)], op.matrix()[(1, 0)]);
    }

    #[test]
    fn spectral_small_cases() {
        let s = spectral(&SymOperator::diagonal(&[3.0, 1.0]).unwrap()).unwrap();
        assert_eq!(s.eigenvalues, vec![1.0, 3.0]);
        let s = spectral(&SymOperator::identity(5)).unwrap();
        assert!(s.eigenvalues.iter().all(|&l| (l - 1.0).abs() < 1e-15));
    }

    #[test]
    fn spectral_reconstructs_random_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in [1, 2, 5, 16, 64] {
            let g = DMatrix::<f64>::from_fn(d, d, |_, _| StandardNormal.sample(&mut rng));
            let t = SymOperator::from_matrix_unchecked(&g + g.transpose());
            let s = spectral(&t).unwrap();
            let err = (s.reconstruct().matrix() - t.matrix()).norm();
            assert!(err <= 1e-10 * t.frobenius_norm().max(1.0), "d={d} err={err}");
            assert!(s.orthonormality_defect() <= 1e-10);
            assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn contraction_certificates() {
        let c = is_positive_contraction(&SymOperator::diagonal(&[0.0, 1.0]).unwrap(), 1e-9).unwrap();
        assert!(c.is_contraction);
        assert_eq!((c.lambda_min, c.lambda_max), (0.0, 1.0));

        let c = is_positive_contraction(&SymOperator::scaled_identity(2, 2.0), 1e-9).unwrap();
        assert!(!c.is_contraction);
        assert_eq!((c.lambda_min, c.lambda_max), (2.0, 2.0));

        let c = is_positive_contraction(&SymOperator::diagonal(&[-0.1, 0.5]).unwrap(), 1e-9).unwrap();
        assert!(!c.is_contraction);
        assert_eq!((c.lambda_min, c.lambda_max), (-0.1, 0.5));
    }

    #[test]
    fn gap_values() {
        let half = SymOperator::scaled_identity(3, 0.5);
        let g = contraction_gap(&half, &Vector::basis(3, 1)).unwrap();
        assert_abs_diff_eq!(g, 0.5, epsilon = 1e-15);

        let p = make_projection(&[v(&[1.0, 1.0, 0.0])]).unwrap();
        let x = v(&[0.3, -2.0, 5.0]);
        let g = contraction_gap(&p, &x).unwrap();
        assert!(g.abs() <= 1e-10 * x.norm_sq());

        let err = contraction_gap(&SymOperator::scaled_identity(2, 1.5), &v(&[1.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::NotContraction { .. }));
    }

    #[test]
    fn projection_examples() {
        let p = make_projection(&[v(&[1.0, 0.0])]).unwrap();
        assert_eq!(p, SymOperator::diagonal(&[1.0, 0.0]).unwrap());

        let p = make_projection(&[v(&[1.0, 1.0])]).unwrap();
        for &e in p.matrix().iter() {
            assert_abs_diff_eq!(e, 0.5, epsilon = 1e-15);
        }

        let full: Vec<Vector> = (0..3).map(|j| Vector::basis(3, j)).collect();
        let p = make_projection(&full).unwrap();
        assert!((p.matrix() - DMatrix::<f64>::identity(3, 3)).norm() < 1e-15);
    }

    #[test]
    fn projection_properties_and_rank_deficiency() {
        let basis = vec![v(&[1.0, 2.0, 0.0, -1.0]), v(&[0.0, 1.0, 1.0, 1.0])];
        let p = make_projection(&basis).unwrap();
        assert!(p.idempotence_defect() <= 1e-10);
        for b in &basis {
            let pb = apply(&p, b).unwrap();
            assert!((pb.as_dvector() - b.as_dvector()).norm() <= 1e-10 * b.norm());
        }
        let dependent = vec![v(&[1.0, 2.0]), v(&[2.0, 4.0])];
        assert!(matches!(make_projection(&dependent), Err(Error::RankDeficient { index: 1 })));
        assert!(matches!(make_projection(&[v(&[0.0, 0.0])]), Err(Error::RankDeficient { index: 0 })));
        assert!(matches!(make_projection(&[]), Err(Error::Empty(_))));
    }

    #[test]
    fn json_forms() {
        let op = SymOperator::diagonal(&[0.5, 0.25]).unwrap();
        let s = serde_json::to_string(&op).unwrap();
        assert_eq!(s, r#"{"dim":2,"entries":[0.5,0.0,0.0,0.25]}"#);
        let back: SymOperator = serde_json::from_str(&s).unwrap();
        assert_eq!(back, op);
        let nested: SymOperator =
            serde_json::from_str(r#"{"dim":2,"entries":[[0.5,0.0],[0.0,0.25]]}"#).unwrap();
        assert_eq!(nested, op);
        assert!(serde_json::from_str::<SymOperator>(r#"{"dim":2,"entries":[1,2,3]}"#).is_err());

        let x: Vector = serde_json::from_str("[1.0, 2.0]").unwrap();
        assert_eq!(serde_json::to_string(&x).unwrap(), r#"{"dim":2,"entries":[1.0,2.0]}"#);
        let y: Vector = serde_json::from_str(r#"{"dim":2,"entries":[1.0,2.0]}"#).unwrap();
        assert_eq!(x, y);
        assert!(serde_json::from_str::<Vector>(r#"{"dim":3,"entries":[1.0,2.0]}"#).is_err());
    }
}
