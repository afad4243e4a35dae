//! Exact expectations for discrete laws.
//!
//! Conditioning on the first `n-1` draws, `E‖R_n x‖² = ⟨x, S_n x⟩` with
//! `S_n = Φ(S_{n-1})`, `S_0 = I`, where
//!
//! ```text
//!     Φ(X) = Σ_i p_i (I - T_i) X (I - T_i).
//! ```
//!
//! Because `Ψ_k` is independent of `R_{k-1}`, `E‖t_k‖² = ⟨x, Φ^{k-1}(Q) x⟩`
//! with `Q = Σ_i p_i T_i²`. [`brute_force_paths`] recomputes both quantities
//! by enumerating every draw sequence and shares no code with the map.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{extreme_eigenvalues, SymOperator, Vector};
use crate::samplers::Sampler;

/// Maximum number of draw sequences [`brute_force_paths`] will enumerate.
pub const ENUMERATION_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone)]
pub struct TransferMap {
    dim: usize,
    probabilities: Vec<f64>,
    /// `I - T_i`
    complements: Vec<DMatrix<f64>>,
    /// `Σ p_i T_i²`
    q: SymOperator,
}

impl TransferMap {
    pub fn new(atoms: &[(SymOperator, f64)]) -> Result<Self> {
        let dim = atoms.first().ok_or(Error::Empty("transfer map"))?.0.dim();
        let mut q = DMatrix::zeros(dim, dim);
        let mut complements = Vec::with_capacity(atoms.len());
        for (op, p) in atoms {
            if op.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: op.dim(),
                });
            }
            q += op.square().matrix() * *p;
            complements.push(op.complement().into_matrix());
        }
        Ok(TransferMap {
            dim,
            probabilities: atoms.iter().map(|a| a.1).collect(),
            complements,
            q: SymOperator::from_matrix_unchecked(q),
        })
    }

    pub fn from_sampler(sampler: &Sampler) -> Result<Self> {
        Self::new(&sampler.atoms()?)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Q = Σ p_i T_i²`, the expected energy operator of a single step.
    pub fn q_operator(&self) -> &SymOperator {
        &self.q
    }

    pub fn apply(&self, x: &SymOperator) -> Result<SymOperator> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.dim(),
            });
        }
        Ok(self.apply_unchecked(x.matrix()))
    }

    fn apply_unchecked(&self, x: &DMatrix<f64>) -> SymOperator {
        let mut acc = DMatrix::zeros(self.dim, self.dim);
        for (c, &p) in self.complements.iter().zip(&self.probabilities) {
            acc += (c * x * c) * p;
        }
        SymOperator::from_matrix_unchecked(acc)
    }

    /// `S_n = Φⁿ(I) = E[R_nᵀ R_n]`.
    pub fn residual_gram(&self, n: usize) -> SymOperator {
        let mut s = SymOperator::identity(self.dim);
        for _ in 0..n {
            s = self.apply_unchecked(s.matrix());
        }
        s
    }

    /// `G_n = Σ_{k=1}^{n} Φ^{k-1}(Q) = E[Σ_k T_kᵀ T_k]` for the path operators
    /// `T_k = Ψ_k (I-Ψ_{k-1}) ⋯ (I-Ψ_1)`.
    pub fn frame_gram(&self, n: usize) -> SymOperator {
        let mut acc = DMatrix::zeros(self.dim, self.dim);
        let mut term = self.q.clone();
        for _ in 0..n {
            acc += term.matrix();
            term = self.apply_unchecked(term.matrix());
        }
        SymOperator::from_matrix_unchecked(acc)
    }

    /// `λ_max(Φ(I)) - 1`, nonpositive up to rounding since each `I - T_i`
    /// is a contraction.
    pub fn contraction_excess(&self) -> Result<f64> {
        Ok(extreme_eigenvalues(&self.residual_gram(1))?.1 - 1.0)
    }
}

pub fn apply_transfer(map: &TransferMap, x: &SymOperator) -> Result<SymOperator> {
    map.apply(x)
}

fn check_dim(map: &TransferMap, x: &Vector) -> Result<()> {
    if x.dim() == map.dim {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: map.dim,
            found: x.dim(),
        })
    }
}

/// `E‖R_n x‖²`.
pub fn expected_residual_sq(sampler: &Sampler, x: &Vector, n: usize) -> Result<f64> {
    let map = TransferMap::from_sampler(sampler)?;
    check_dim(&map, x)?;
    map.residual_gram(n).quadratic_form(x)
}

/// `E[Σ_{k=1}^{n} ‖t_k‖²]`.
pub fn expected_frame_energy(sampler: &Sampler, x: &Vector, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("frame energy needs n >= 1".into()));
    }
    let map = TransferMap::from_sampler(sampler)?;
    check_dim(&map, x)?;
    map.frame_gram(n).quadratic_form(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OraclePoint {
    pub step: usize,
    pub exp_residual_sq: f64,
    pub exp_frame_energy: f64,
    /// `(1 - C)ⁿ ‖x‖²`
    pub bound: f64,
}

/// Exact curves for steps `0..=n_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCurve {
    pub coercivity: f64,
    pub x_norm_sq: f64,
    pub points: Vec<OraclePoint>,
}

impl OracleCurve {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for p in &self.points {
            out.serialize(p)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn residual(&self, n: usize) -> f64 {
        self.points[n].exp_residual_sq
    }

    pub fn energy(&self, n: usize) -> f64 {
        self.points[n].exp_frame_energy
    }
}

pub fn oracle_curve(sampler: &Sampler, x: &Vector, n_max: usize) -> Result<OracleCurve> {
    let map = TransferMap::from_sampler(sampler)?;
    check_dim(&map, x)?;
    let c = sampler.coercivity_constant()?.max(0.0);
    let x_norm_sq = x.norm_sq();
    let mut s = SymOperator::identity(map.dim);
    let mut q_k = map.q.clone();
    let mut energy = 0.0;
    let mut points = Vec::with_capacity(n_max + 1);
    for step in 0..=n_max {
        points.push(OraclePoint {
            step,
            exp_residual_sq: s.quadratic_form(x)?,
            exp_frame_energy: energy,
            bound: (1.0 - c).powi(step as i32) * x_norm_sq,
        });
        energy += q_k.quadratic_form(x)?;
        s = map.apply_unchecked(s.matrix());
        q_k = map.apply_unchecked(q_k.matrix());
    }
    Ok(OracleCurve {
        coercivity: c,
        x_norm_sq,
        points,
    })
}

/// Smallest `n ≤ max_steps` with `E‖R_n x‖² ≤ eps`, together with the
/// expected frame energy and residual at that step.
pub fn steps_to_residual(sampler: &Sampler, x: &Vector, eps: f64, max_steps: usize) -> Result<Option<(usize, f64, f64)>> {
    let map = TransferMap::from_sampler(sampler)?;
    check_dim(&map, x)?;
    let mut s = SymOperator::identity(map.dim);
    let mut q_k = map.q.clone();
    let mut energy = 0.0;
    for n in 0..=max_steps {
        let res = s.quadratic_form(x)?;
        if res <= eps {
            return Ok(Some((n, energy, res)));
        }
        energy += q_k.quadratic_form(x)?;
        s = map.apply_unchecked(s.matrix());
        q_k = map.apply_unchecked(q_k.matrix());
    }
    Ok(None)
}

/// Enumerates all `|atoms|ⁿ` draw sequences and returns the exact
/// `(E‖R_n x‖², E[Σ_{k≤n} ‖t_k‖²])`.
pub fn brute_force_paths(sampler: &Sampler, x: &Vector, n: usize) -> Result<(f64, f64)> {
    let atoms = sampler.atoms()?;
    let count = (atoms.len() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if count > u128::from(ENUMERATION_BUDGET) {
        return Err(Error::BudgetExceeded {
            paths: count,
            budget: ENUMERATION_BUDGET,
        });
    }
    if x.dim() != sampler.dim() {
        return Err(Error::DimensionMismatch {
            expected: sampler.dim(),
            found: x.dim(),
        });
    }
    let mut residual = 0.0;
    let mut energy = 0.0;
    descend(&atoms, x.as_dvector(), n, 1.0, 0.0, &mut residual, &mut energy);
    Ok((residual, energy))
}

fn descend(
    atoms: &[(SymOperator, f64)],
    r: &DVector<f64>,
    remaining: usize,
    weight: f64,
    energy_so_far: f64,
    residual: &mut f64,
    energy: &mut f64,
) {
    if remaining == 0 {
        *residual += weight * r.norm_squared();
        *energy += weight * energy_so_far;
        return;
    }
    for (op, p) in atoms {
        if *p == 0.0 {
            continue;
        }
        let t = op.matrix() * r;
        let next = r - &t;
        descend(atoms, &next, remaining - 1, weight * p, energy_so_far + t.norm_squared(), residual, energy);
    }
}
