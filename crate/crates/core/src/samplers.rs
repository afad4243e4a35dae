//! Constructive laws for a random positive contraction `Ψ`.
//!
//! A [`SamplerSpec`] is the plain serializable description; [`Sampler`] is
//! the validated form with normalized probabilities and precomputed
//! projections, ready to draw from.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    extreme_eigenvalues, is_positive_contraction, make_projection, row_matrix, SymOperator, Vector,
    CONTRACTION_TOL,
};
use crate::random::random_spectral;
use crate::rng::RngStream;

/// Probability sums within this distance of 1 are renormalized; others are rejected.
pub const NORMALIZATION_TOL: f64 = 1e-9;
/// Idempotence tolerance used to classify atoms as projections.
pub const PROJECTION_TOL: f64 = 1e-10;
/// Number of batches in the jackknife error estimate.
pub const JACKKNIFE_BATCHES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedAtom {
    pub operator: SymOperator,
    pub probability: f64,
}

/// One fusion-frame subspace `W_i = span(basis)` with weight `w_i = v_i²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSubspace {
    pub basis: Vec<Vector>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SamplerSpec {
    /// `Ψ = T` almost surely.
    Deterministic { operator: SymOperator },
    /// `Ψ = T_i` with probability `p_i`.
    DiscreteMixture { atoms: Vec<WeightedAtom> },
    /// `Ψ = P_{W_i}` with probability `w_i`.
    FusionFrameProjection { subspaces: Vec<WeightedSubspace> },
    /// `Ψ = a_i a_iᵀ / ‖a_i‖²` for row `a_i` of the matrix, drawn with
    /// probability `‖a_i‖² / ‖A‖_F²` (or `1/m` when `uniform`).
    KaczmarzRow {
        #[serde(with = "row_matrix")]
        matrix: DMatrix<f64>,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        uniform: bool,
    },
    /// `Ψ = Q Λ Qᵀ` with Haar `Q` and i.i.d. uniform eigenvalues on `[lo, hi]`.
    RandomSpectral { dim: usize, lo: f64, hi: f64 },
}

impl SamplerSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            SamplerSpec::Deterministic { .. } => "deterministic",
            SamplerSpec::DiscreteMixture { .. } => "discrete-mixture",
            SamplerSpec::FusionFrameProjection { .. } => "fusion-frame-projection",
            SamplerSpec::KaczmarzRow { .. } => "kaczmarz-row",
            SamplerSpec::RandomSpectral { .. } => "random-spectral",
        }
    }

    /// Dimension of `H`, if it can be read off the spec.
    pub fn dim(&self) -> Option<usize> {
        match self {
            SamplerSpec::Deterministic { operator } => Some(operator.dim()),
            SamplerSpec::DiscreteMixture { atoms } => atoms.first().map(|a| a.operator.dim()),
            SamplerSpec::FusionFrameProjection { subspaces } => {
                subspaces.first().and_then(|s| s.basis.first()).map(Vector::dim)
            }
            SamplerSpec::KaczmarzRow { matrix, .. } => Some(matrix.ncols()),
            SamplerSpec::RandomSpectral { dim, .. } => Some(*dim),
        }
    }

    /// Every validation problem with the spec, as human-readable messages.
    pub fn issues(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            SamplerSpec::Deterministic { operator } => check_atom(operator, "operator", &mut out),
            SamplerSpec::DiscreteMixture { atoms } => {
                if atoms.is_empty() {
                    out.push("atoms: at least one atom is required".into());
                }
                let d = self.dim().unwrap_or(0);
                for (i, atom) in atoms.iter().enumerate() {
                    if atom.operator.dim() != d {
                        out.push(format!("atoms[{i}]: dimension {} differs from {d}", atom.operator.dim()));
                    } else {
                        check_atom(&atom.operator, &format!("atoms[{i}].operator"), &mut out);
                    }
                    check_probability(atom.probability, &format!("atoms[{i}].probability"), &mut out);
                }
                let sum: f64 = atoms.iter().map(|a| a.probability).sum();
                if !atoms.is_empty() && (sum - 1.0).abs() > NORMALIZATION_TOL {
                    out.push(format!(
                        "atoms: probabilities must sum to 1 within {NORMALIZATION_TOL:e} (sum = {sum})"
                    ));
                }
            }
            SamplerSpec::FusionFrameProjection { subspaces } => {
                if subspaces.is_empty() {
                    out.push("subspaces: at least one subspace is required".into());
                }
                let d = self.dim().unwrap_or(0);
                for (i, s) in subspaces.iter().enumerate() {
                    if s.basis.is_empty() {
                        out.push(format!("subspaces[{i}].basis: empty basis"));
                    } else if let Some(j) = s.basis.iter().position(|b| b.dim() != d) {
                        out.push(format!(
                            "subspaces[{i}].basis[{j}]: dimension {} differs from {d}",
                            s.basis[j].dim()
                        ));
                    } else if let Err(e) = make_projection(&s.basis) {
                        out.push(format!("subspaces[{i}].basis: {e}"));
                    }
                    check_probability(s.weight, &format!("subspaces[{i}].weight"), &mut out);
                }
                let sum: f64 = subspaces.iter().map(|s| s.weight).sum();
                if !subspaces.is_empty() && (sum - 1.0).abs() > NORMALIZATION_TOL {
                    out.push(format!(
                        "subspaces: fusion weights w_i = v_i^2 must sum to 1 within {NORMALIZATION_TOL:e} \
                         to define the sampling distribution (sum = {sum})"
                    ));
                }
            }
            SamplerSpec::KaczmarzRow { matrix, .. } => {
                if matrix.is_empty() {
                    out.push("matrix: must be nonempty".into());
                }
                for (i, row) in matrix.row_iter().enumerate() {
                    if row.iter().any(|v| !v.is_finite()) {
                        out.push(format!("matrix row {i}: non-finite entry"));
                    } else if row.norm_squared() == 0.0 {
                        out.push(format!("matrix row {i}: zero row"));
                    }
                }
            }
            SamplerSpec::RandomSpectral { dim, lo, hi } => {
                if *dim == 0 {
                    out.push("dim: must be at least 1".into());
                }
                if !(0.0 <= *lo && lo <= hi && *hi <= 1.0) {
                    out.push(format!("lo/hi: need 0 <= lo <= hi <= 1 (lo = {lo}, hi = {hi})"));
                }
            }
        }
        out
    }
}

fn check_atom(op: &SymOperator, path: &str, out: &mut Vec<String>) {
    match is_positive_contraction(op, CONTRACTION_TOL) {
        Ok(c) if c.is_contraction => {}
        Ok(c) => out.push(format!(
            "{path}: not a positive contraction (spectrum [{:e}, {:e}])",
            c.lambda_min, c.lambda_max
        )),
        Err(e) => out.push(format!("{path}: {e}")),
    }
}

fn check_probability(p: f64, path: &str, out: &mut Vec<String>) {
    if !(p.is_finite() && p >= 0.0) {
        out.push(format!("{path}: must be a finite nonnegative number (got {p})"));
    }
}

#[derive(Debug, Clone)]
enum Law {
    Fixed(SymOperator),
    Atoms {
        operators: Vec<SymOperator>,
        probabilities: Vec<f64>,
        cdf: Vec<f64>,
    },
    Rows {
        rows: Vec<DVector<f64>>,
        norms_sq: Vec<f64>,
        probabilities: Vec<f64>,
        cdf: Vec<f64>,
    },
    Spectral {
        lo: f64,
        hi: f64,
    },
}

/// One realization of `Ψ`, borrowed from the sampler where possible.
#[derive(Debug, Clone)]
pub enum Draw<'a> {
    Operator { index: usize, op: &'a SymOperator },
    Row { index: usize, row: &'a DVector<f64>, norm_sq: f64 },
    Owned(SymOperator),
}

impl Draw<'_> {
    /// Index of the atom or row drawn, for discrete laws.
    pub fn index(&self) -> Option<usize> {
        match self {
            Draw::Operator { index, .. } | Draw::Row { index, .. } => Some(*index),
            Draw::Owned(_) => None,
        }
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            Draw::Operator { op, .. } => op.matrix() * x,
            Draw::Row { row, norm_sq, .. } => *row * (row.dot(x) / norm_sq),
            Draw::Owned(op) => op.matrix() * x,
        }
    }

    pub fn to_operator(&self) -> SymOperator {
        match self {
            Draw::Operator { op, .. } => (*op).clone(),
            Draw::Row { row, norm_sq, .. } => SymOperator::from_matrix_unchecked(*row * row.transpose() / *norm_sq),
            Draw::Owned(op) => op.clone(),
        }
    }
}

/// Validated law of `Ψ`.
#[derive(Debug, Clone)]
pub struct Sampler {
    spec: SamplerSpec,
    dim: usize,
    law: Law,
}

fn normalized(weights: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let total: f64 = weights.iter().sum();
    let probabilities: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let mut acc = 0.0;
    let cdf = probabilities
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    (probabilities, cdf)
}

/// Inverse-CDF lookup over the stored order.
fn pick<R: Rng + ?Sized>(probabilities: &[f64], cdf: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let i = cdf.partition_point(|&c| c <= u);
    if i < cdf.len() {
        i
    } else {
        // u landed above a cumulative sum that rounded below 1.
        probabilities.iter().rposition(|&p| p > 0.0).unwrap_or(cdf.len() - 1)
    }
}

impl Sampler {
    pub fn new(spec: SamplerSpec) -> Result<Self> {
        let issues = spec.issues();
        if !issues.is_empty() {
            return Err(Error::InvalidSampler(issues.join("; ")));
        }
        let dim = spec.dim().ok_or(Error::Empty("sampler"))?;
        let law = match &spec {
            SamplerSpec::Deterministic { operator } => Law::Fixed(operator.clone()),
            SamplerSpec::DiscreteMixture { atoms } => {
                let weights: Vec<f64> = atoms.iter().map(|a| a.probability).collect();
                let (probabilities, cdf) = normalized(&weights);
                Law::Atoms {
                    operators: atoms.iter().map(|a| a.operator.clone()).collect(),
                    probabilities,
                    cdf,
                }
            }
            SamplerSpec::FusionFrameProjection { subspaces } => {
                let operators = subspaces
                    .iter()
                    .map(|s| make_projection(&s.basis))
                    .collect::<Result<Vec<_>>>()?;
                let weights: Vec<f64> = subspaces.iter().map(|s| s.weight).collect();
                let (probabilities, cdf) = normalized(&weights);
                Law::Atoms {
                    operators,
                    probabilities,
                    cdf,
                }
            }
            SamplerSpec::KaczmarzRow { matrix, uniform } => {
                let rows: Vec<DVector<f64>> = matrix.row_iter().map(|r| r.transpose()).collect();
                let norms_sq: Vec<f64> = rows.iter().map(|r| r.norm_squared()).collect();
                let weights = if *uniform { vec![1.0; rows.len()] } else { norms_sq.clone() };
                let (probabilities, cdf) = normalized(&weights);
                Law::Rows {
                    rows,
                    norms_sq,
                    probabilities,
                    cdf,
                }
            }
            SamplerSpec::RandomSpectral { lo, hi, .. } => Law::Spectral { lo: *lo, hi: *hi },
        };
        Ok(Sampler { spec, dim, law })
    }

    pub fn deterministic(operator: SymOperator) -> Result<Self> {
        Self::new(SamplerSpec::Deterministic { operator })
    }

    pub fn mixture(atoms: Vec<(SymOperator, f64)>) -> Result<Self> {
        Self::new(SamplerSpec::DiscreteMixture {
            atoms: atoms
                .into_iter()
                .map(|(operator, probability)| WeightedAtom { operator, probability })
                .collect(),
        })
    }

    pub fn fusion(subspaces: Vec<(Vec<Vector>, f64)>) -> Result<Self> {
        Self::new(SamplerSpec::FusionFrameProjection {
            subspaces: subspaces
                .into_iter()
                .map(|(basis, weight)| WeightedSubspace { basis, weight })
                .collect(),
        })
    }

    pub fn kaczmarz(matrix: DMatrix<f64>) -> Result<Self> {
        Self::new(SamplerSpec::KaczmarzRow { matrix, uniform: false })
    }

    pub fn random_spectral(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(SamplerSpec::RandomSpectral { dim, lo, hi })
    }

    /// Fusion sampler over the coordinate axes of `R^dim`, equal weights.
    pub fn coordinate_axes(dim: usize) -> Self {
        let subspaces = (0..dim)
            .map(|j| (vec![Vector::basis(dim, j)], 1.0 / dim as f64))
            .collect();
        Self::fusion(subspaces).expect("coordinate axes form a valid fusion sampler")
    }

    pub fn spec(&self) -> &SamplerSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn description(&self) -> String {
        format!("{} (d = {})", self.spec.kind_name(), self.dim)
    }

    pub fn is_discrete(&self) -> bool {
        !matches!(self.law, Law::Spectral { .. })
    }

    /// True when every reachable value of `Ψ` is an orthogonal projection.
    pub fn is_projection_valued(&self) -> bool {
        match &self.law {
            Law::Fixed(op) => op.is_projection(PROJECTION_TOL),
            Law::Atoms {
                operators,
                probabilities,
                ..
            } => operators
                .iter()
                .zip(probabilities)
                .all(|(op, &p)| p == 0.0 || op.is_projection(PROJECTION_TOL)),
            Law::Rows { .. } => true,
            Law::Spectral { lo, hi } => lo == hi && (*lo == 0.0 || *lo == 1.0),
        }
    }

    /// True when `Ψ` has a single reachable value.
    pub fn is_deterministic(&self) -> bool {
        match &self.law {
            Law::Fixed(_) => true,
            Law::Atoms { probabilities, .. } | Law::Rows { probabilities, .. } => {
                probabilities.iter().filter(|&&p| p > 0.0).count() == 1
            }
            Law::Spectral { lo, hi } => lo == hi && (*lo == 0.0 || *lo == 1.0),
        }
    }

    /// Draws one realization of `Ψ`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Draw<'_> {
        match &self.law {
            Law::Fixed(op) => Draw::Operator { index: 0, op },
            Law::Atoms {
                operators,
                probabilities,
                cdf,
            } => {
                let index = pick(probabilities, cdf, rng);
                Draw::Operator {
                    index,
                    op: &operators[index],
                }
            }
            Law::Rows {
                rows,
                norms_sq,
                probabilities,
                cdf,
            } => {
                let index = pick(probabilities, cdf, rng);
                Draw::Row {
                    index,
                    row: &rows[index],
                    norm_sq: norms_sq[index],
                }
            }
            Law::Spectral { lo, hi } => Draw::Owned(random_spectral(self.dim, *lo, *hi, rng)),
        }
    }

    /// Draws one realization and materializes it as an operator.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SymOperator {
        self.draw(rng).to_operator()
    }

    /// The finitely many values of `Ψ` with their probabilities.
    pub fn atoms(&self) -> Result<Vec<(SymOperator, f64)>> {
        match &self.law {
            Law::Fixed(op) => Ok(vec![(op.clone(), 1.0)]),
            Law::Atoms {
                operators,
                probabilities,
                ..
            } => Ok(operators.iter().cloned().zip(probabilities.iter().copied()).collect()),
            Law::Rows {
                rows,
                norms_sq,
                probabilities,
                ..
            } => Ok(rows
                .iter()
                .zip(norms_sq)
                .zip(probabilities)
                .map(|((r, n2), &p)| (SymOperator::from_matrix_unchecked(r * r.transpose() / *n2), p))
                .collect()),
            Law::Spectral { .. } => Err(Error::NotDiscrete("random-spectral")),
        }
    }

    /// `M = E[ΨᵀΨ]`, exactly, for discrete laws.
    pub fn second_moment(&self) -> Result<SymOperator> {
        match (&self.law, &self.spec) {
            (Law::Fixed(op), _) => Ok(op.square()),
            (
                Law::Atoms {
                    operators,
                    probabilities,
                    ..
                },
                SamplerSpec::FusionFrameProjection { .. },
            ) => Ok(weighted_sum(self.dim, operators.iter().cloned(), probabilities)),
            (
                Law::Atoms {
                    operators,
                    probabilities,
                    ..
                },
                _,
            ) => Ok(weighted_sum(self.dim, operators.iter().map(SymOperator::square), probabilities)),
            (Law::Rows { .. }, SamplerSpec::KaczmarzRow { matrix, uniform: false }) => {
                let frob_sq = matrix.norm_squared();
                Ok(SymOperator::from_matrix_unchecked(matrix.transpose() * matrix / frob_sq))
            }
            (Law::Rows { probabilities, .. }, _) => {
                let atoms = self.atoms()?;
                Ok(weighted_sum(self.dim, atoms.into_iter().map(|(op, _)| op), probabilities))
            }
            (Law::Spectral { .. }, _) => Err(Error::NoClosedForm("random-spectral")),
        }
    }

    /// `C = λ_min(E[ΨᵀΨ])`, the best constant with `E‖Ψx‖² ≥ C‖x‖²`.
    pub fn coercivity_constant(&self) -> Result<f64> {
        Ok(extreme_eigenvalues(&self.second_moment()?)?.0)
    }

    /// Exact coercivity constant, including the closed form
    /// `E[λ²] = (hi³ - lo³) / (3(hi - lo))` for the random-spectral law.
    pub fn analytic_coercivity(&self) -> Result<f64> {
        match self.law {
            Law::Spectral { lo, hi } if hi > lo => Ok((hi.powi(3) - lo.powi(3)) / (3.0 * (hi - lo))),
            Law::Spectral { lo, .. } => Ok(lo * lo),
            _ => self.coercivity_constant(),
        }
    }

    /// Monte Carlo estimate of `λ_min(E[ΨᵀΨ])` from `n_samples` draws.
    pub fn estimate_coercivity_mc(&self, n_samples: usize, stream: RngStream) -> Result<CoercivityEstimate> {
        if n_samples < 100 {
            return Err(Error::InvalidArgument(format!(
                "coercivity estimate needs at least 100 samples (got {n_samples})"
            )));
        }
        let mut rng = stream.rng();
        let d = self.dim;
        let g = JACKKNIFE_BATCHES;
        let mut batch_sums = vec![DMatrix::<f64>::zeros(d, d); g];
        let mut batch_sizes = vec![0usize; g];
        for b in 0..g {
            batch_sizes[b] = n_samples / g + usize::from(b < n_samples % g);
            for _ in 0..batch_sizes[b] {
                let op = self.sample(&mut rng);
                batch_sums[b] += op.matrix() * op.matrix();
            }
        }
        let total: DMatrix<f64> = batch_sums.iter().fold(DMatrix::zeros(d, d), |acc, s| acc + s);
        let raw = lambda_min_of(&total / n_samples as f64)?;
        let leave_out = (0..g)
            .map(|b| lambda_min_of((&total - &batch_sums[b]) / (n_samples - batch_sizes[b]) as f64))
            .collect::<Result<Vec<f64>>>()?;
        let gf = g as f64;
        let mean = leave_out.iter().sum::<f64>() / gf;
        let spread: f64 = leave_out.iter().map(|t| (t - mean).powi(2)).sum();
        let stderr = ((gf - 1.0) / gf * spread).sqrt();
        let estimate = if leave_out.iter().all(|&t| t == raw) {
            raw
        } else {
            gf * raw - (gf - 1.0) * mean
        };
        Ok(CoercivityEstimate {
            estimate,
            raw,
            stderr,
            samples: n_samples,
        })
    }

    /// Lower and upper fusion frame bounds `λ_min, λ_max` of `Σ w_i P_i`.
    pub fn fusion_frame_bounds(&self) -> Result<(f64, f64)> {
        match (&self.spec, &self.law) {
            (
                SamplerSpec::FusionFrameProjection { .. },
                Law::Atoms {
                    operators,
                    probabilities,
                    ..
                },
            ) => fusion_frame_bounds(operators, probabilities),
            _ => Err(Error::InvalidArgument(format!(
                "fusion frame bounds need a fusion-frame-projection sampler, got {}",
                self.spec.kind_name()
            ))),
        }
    }
}

fn lambda_min_of(m: DMatrix<f64>) -> Result<f64> {
    Ok(extreme_eigenvalues(&SymOperator::from_matrix_unchecked(m))?.0)
}

fn weighted_sum(dim: usize, ops: impl Iterator<Item = SymOperator>, weights: &[f64]) -> SymOperator {
    let mut acc = DMatrix::zeros(dim, dim);
    for (op, &w) in ops.zip(weights) {
        acc += op.matrix() * w;
    }
    SymOperator::from_matrix_unchecked(acc)
}

/// Frame bounds `(A, B)` of the weighted projections: the extreme
/// eigenvalues of `Σ w_i P_i`.
pub fn fusion_frame_bounds(projections: &[SymOperator], weights: &[f64]) -> Result<(f64, f64)> {
    let first = projections.first().ok_or(Error::Empty("fusion frame"))?;
    if projections.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: projections.len(),
            found: weights.len(),
        });
    }
    let frame_op = weighted_sum(first.dim(), projections.iter().cloned(), weights);
    extreme_eigenvalues(&frame_op)
}

/// Monte Carlo estimate of the coercivity constant.
///
/// `estimate` is the jackknife bias-corrected value; `raw` is `λ_min` of the
/// pooled empirical second moment, which is biased low because `λ_min` is
/// concave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoercivityEstimate {
    pub estimate: f64,
    pub raw: f64,
    pub stderr: f64,
    pub samples: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::is_positive_contraction;
    use crate::random::{random_basis, random_positive_contraction};

    fn two_axes() -> Sampler {
        Sampler::coordinate_axes(2)
    }

    #[test]
    fn deterministic_returns_its_operator() {
        let half = SymOperator::scaled_identity(3, 0.5);
        let s = Sampler::deterministic(half.clone()).unwrap();
        let mut rng = RngStream::new(0, 0).rng();
        for _ in 0..5 {
            assert_eq!(s.sample(&mut rng), half);
        }
        assert_eq!(s.second_moment().unwrap(), SymOperator::scaled_identity(3, 0.25));
        assert_eq!(s.coercivity_constant().unwrap(), 0.25);
    }

    #[test]
    fn two_axis_frequencies() {
        let s = two_axes();
        let mut rng = RngStream::new(1, 0).rng();
        let n = 10_000;
        let first = (0..n).filter(|_| s.draw(&mut rng).index() == Some(0)).count();
        let freq = first as f64 / n as f64;
        assert!((freq - 0.5).abs() <= 0.02, "freq {freq}");
        let op = s.sample(&mut rng);
        let d0 = SymOperator::diagonal(&[1.0, 0.0]).unwrap();
        let d1 = SymOperator::diagonal(&[0.0, 1.0]).unwrap();
        assert!(op == d0 || op == d1);
    }

    #[test]
    fn kaczmarz_row_frequencies_and_moment() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let s = Sampler::kaczmarz(a).unwrap();
        let mut rng = RngStream::new(2, 0).rng();
        let n = 20_000;
        let second = (0..n).filter(|_| s.draw(&mut rng).index() == Some(1)).count();
        let freq = second as f64 / n as f64;
        // 4/5 ± 4 binomial standard errors
        assert!((freq - 0.8).abs() <= 4.0 * (0.16f64 / n as f64).sqrt(), "freq {freq}");
        let p = s.draw(&mut RngStream::new(2, 1).rng()).to_operator();
        assert!(p.is_projection(1e-12));

        let m = s.second_moment().unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[0.2, 0.0, 0.0, 0.8]);
        assert!((m.matrix() - expect).norm() < 1e-15);
        assert!((s.coercivity_constant().unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn fusion_moments_and_bounds() {
        let s = two_axes();
        assert_eq!(s.second_moment().unwrap(), SymOperator::scaled_identity(2, 0.5));
        assert_eq!(s.coercivity_constant().unwrap(), 0.5);
        assert_eq!(s.fusion_frame_bounds().unwrap(), (0.5, 0.5));

        let single = Sampler::fusion(vec![(vec![Vector::basis(2, 0)], 1.0)]).unwrap();
        assert_eq!(single.fusion_frame_bounds().unwrap(), (0.0, 1.0));

        // Three equiangular lines: Σ (1/3) P_i = (1/2) I.
        let lines = (0..3)
            .map(|k| {
                let th = std::f64::consts::PI * k as f64 / 3.0;
                (vec![Vector::new(vec![th.cos(), th.sin()]).unwrap()], 1.0 / 3.0)
            })
            .collect();
        let s = Sampler::fusion(lines).unwrap();
        let (a, b) = s.fusion_frame_bounds().unwrap();
        assert!((a - 0.5).abs() < 1e-14 && (b - 0.5).abs() < 1e-14, "{a} {b}");
    }

    #[test]
    fn coercivity_of_proper_projection_is_zero() {
        let p = SymOperator::diagonal(&[1.0, 0.0, 1.0]).unwrap();
        let s = Sampler::deterministic(p).unwrap();
        assert_eq!(s.coercivity_constant().unwrap(), 0.0);
    }

    #[test]
    fn coercivity_equals_lower_fusion_bound() {
        let mut rng = RngStream::new(3, 0).rng();
        for _ in 0..50 {
            let d = 4;
            let subspaces: Vec<_> = (1..=3).map(|r| (random_basis(d, r, &mut rng), r as f64 / 6.0)).collect();
            let s = Sampler::fusion(subspaces).unwrap();
            let c = s.coercivity_constant().unwrap();
            let (a, _) = s.fusion_frame_bounds().unwrap();
            assert!((c - a).abs() <= 1e-12);
        }
    }

    #[test]
    fn random_spectral_has_no_closed_form_moment() {
        let s = Sampler::random_spectral(3, 0.0, 1.0).unwrap();
        assert!(matches!(s.second_moment(), Err(Error::NoClosedForm(_))));
        assert!((s.analytic_coercivity().unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let s = Sampler::random_spectral(3, 0.5, 0.5).unwrap();
        assert_eq!(s.analytic_coercivity().unwrap(), 0.25);
    }

    #[test]
    fn mc_estimate_of_deterministic_law_is_exact() {
        let s = Sampler::deterministic(SymOperator::scaled_identity(2, 0.5)).unwrap();
        let e = s.estimate_coercivity_mc(1_000, RngStream::new(0, 0)).unwrap();
        assert_eq!(e.estimate, 0.25);
        assert_eq!(e.stderr, 0.0);
        assert!(s.estimate_coercivity_mc(99, RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn mc_estimate_matches_exact_for_mixture() {
        let mut rng = RngStream::new(4, 0).rng();
        let atoms = (0..3).map(|_| (random_positive_contraction(3, &mut rng), 1.0 / 3.0)).collect();
        let s = Sampler::mixture(atoms).unwrap();
        let exact = s.coercivity_constant().unwrap();
        let e = s.estimate_coercivity_mc(20_000, RngStream::new(4, 1)).unwrap();
        assert!((e.estimate - exact).abs() <= 4.0 * e.stderr, "{e:?} vs {exact}");
    }

    #[test]
    fn every_draw_is_a_contraction() {
        let mut rng = RngStream::new(5, 0).rng();
        let specs = vec![
            Sampler::deterministic(random_positive_contraction(3, &mut rng)).unwrap(),
            Sampler::mixture(vec![
                (random_positive_contraction(3, &mut rng), 0.3),
                (random_positive_contraction(3, &mut rng), 0.7),
            ])
            .unwrap(),
            Sampler::fusion(vec![(random_basis(3, 2, &mut rng), 0.5), (random_basis(3, 1, &mut rng), 0.5)]).unwrap(),
            Sampler::kaczmarz(DMatrix::from_fn(5, 3, |i, j| (i + 2 * j) as f64 - 2.5)).unwrap(),
            Sampler::random_spectral(3, 0.2, 0.9).unwrap(),
        ];
        for s in &specs {
            for _ in 0..1_000 {
                let op = s.sample(&mut rng);
                assert!(is_positive_contraction(&op, 1e-9).unwrap().is_contraction, "{}", s.description());
            }
        }
    }

    #[test]
    fn empirical_moment_converges() {
        let mut rng = RngStream::new(6, 0).rng();
        let s = Sampler::fusion(vec![
            (random_basis(3, 1, &mut rng), 0.2),
            (random_basis(3, 2, &mut rng), 0.3),
            (random_basis(3, 1, &mut rng), 0.5),
        ])
        .unwrap();
        let m = s.second_moment().unwrap();
        for n in [1_000usize, 10_000] {
            let mut acc = DMatrix::<f64>::zeros(3, 3);
            for _ in 0..n {
                let op = s.sample(&mut rng);
                acc += op.matrix() * op.matrix();
            }
            let dist = (acc / n as f64 - m.matrix()).norm();
            assert!(dist <= 5.0 / (n as f64).sqrt(), "n={n} dist={dist}");
        }
    }

    #[test]
    fn normalization_rules() {
        let p = || vec![Vector::basis(2, 0)];
        let s = Sampler::fusion(vec![(p(), 0.5 + 4e-10), (vec![Vector::basis(2, 1)], 0.5)]).unwrap();
        let atoms = s.atoms().unwrap();
        assert!((atoms.iter().map(|a| a.1).sum::<f64>() - 1.0).abs() <= 1e-12);

        let err = Sampler::fusion(vec![(p(), 0.4), (vec![Vector::basis(2, 1)], 0.4)]).unwrap_err();
        assert!(err.to_string().contains("must sum to 1"), "{err}");
        let err = Sampler::mixture(vec![(SymOperator::scaled_identity(2, 1.5), 1.0)]).unwrap_err();
        assert!(err.to_string().contains("not a positive contraction"));
        let err = Sampler::kaczmarz(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])).unwrap_err();
        assert!(err.to_string().contains("zero row"));
        assert!(Sampler::random_spectral(2, 0.5, 0.2).is_err());
        assert!(Sampler::random_spectral(2, 0.0, 1.5).is_err());
    }

    #[test]
    fn identical_streams_reproduce_draws() {
        let s = Sampler::random_spectral(4, 0.0, 1.0).unwrap();
        let a: Vec<SymOperator> = {
            let mut r = RngStream::new(9, 2).rng();
            (0..5).map(|_| s.sample(&mut r)).collect()
        };
        let b: Vec<SymOperator> = {
            let mut r = RngStream::new(9, 2).rng();
            (0..5).map(|_| s.sample(&mut r)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn spec_json_round_trip() {
        let text = r#"{"kind":"fusion-frame-projection","subspaces":[
            {"basis":[[1.0,0.0]],"weight":0.5},{"basis":[[0.0,1.0]],"weight":0.5}]}"#;
        let spec: SamplerSpec = serde_json::from_str(text).unwrap();
        let again: SamplerSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(spec, again);

        let k: SamplerSpec = serde_json::from_str(r#"{"kind":"kaczmarz-row","matrix":[[1,0],[0,2]]}"#).unwrap();
        assert_eq!(
            serde_json::to_string(&k).unwrap(),
            r#"{"kind":"kaczmarz-row","matrix":{"rows":2,"cols":2,"entries":[1.0,0.0,0.0,2.0]}}"#
        );
    }
}
