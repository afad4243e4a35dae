//! One realization of the randomized scheme
//!
//! ```text
//!     r_0 = x,   t_k = Ψ_k r_{k-1},   r_k = r_{k-1} - t_k
//! ```
//!
//! so that `x = t_1 + ... + t_n + r_n` with `r_n = (I-Ψ_n)⋯(I-Ψ_1) x`.
//! Operator products are never formed; only vectors are propagated.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::rng::RngStream;
use crate::samplers::Sampler;

/// Terms beyond this many steps keep only their norms.
pub const DEFAULT_TERM_CAP: usize = 10_000;
/// Relative tolerance for the telescoping and monotonicity certificates.
pub const ALGEBRAIC_TOL: f64 = 1e-12;
/// Relative tolerance for the per-step energy inequality.
pub const ENERGY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingRule {
    pub max_steps: usize,
    /// Stop once `‖r_k‖ ≤ residual_tol · ‖x‖`.
    pub residual_tol: f64,
}

impl StoppingRule {
    /// Run exactly `n` steps unless the residual vanishes.
    pub fn steps(n: usize) -> Self {
        StoppingRule {
            max_steps: n,
            residual_tol: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_steps == 0 {
            return Err(Error::InvalidArgument("stopping rule needs max_steps >= 1".into()));
        }
        if !(self.residual_tol >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "residual_tol must be nonnegative (got {})",
                self.residual_tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationPath {
    pub x0: Vector,
    /// `t_1, …` up to the retention cap.
    pub terms: Vec<Vector>,
    /// `‖t_k‖²` for every step.
    pub term_norms_sq: Vec<f64>,
    /// `‖r_0‖, …, ‖r_n‖`.
    pub residual_norms: Vec<f64>,
    /// `t_1 + … + t_n`, accumulated for every step.
    pub reconstruction: Vector,
    pub final_residual: Vector,
    pub rng: RngStream,
    pub steps: usize,
}

/// Worst-case violations of the per-path identities and inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathCertificate {
    /// `‖x - Σ t_k - r_n‖`
    pub telescoping_error: f64,
    /// `max_k (‖r_k‖ - ‖r_{k-1}‖)`
    pub monotone_excess: f64,
    /// `max_k (‖t_k‖² + ‖r_k‖² - ‖r_{k-1}‖²)`
    pub energy_excess: f64,
    /// Number of the three checks that fail at their tolerances.
    pub violations: usize,
}

impl IterationPath {
    pub fn frame_energy(&self) -> f64 {
        self.term_norms_sq.iter().sum()
    }

    pub fn final_residual_norm(&self) -> f64 {
        *self.residual_norms.last().expect("residual norms always hold r_0")
    }

    /// `|Σ‖t_k‖² + ‖r_n‖² - ‖x‖²|`; at rounding level for projection-valued laws.
    pub fn parseval_defect(&self) -> f64 {
        (self.frame_energy() + self.final_residual_norm().powi(2) - self.x0.norm_sq()).abs()
    }

    pub fn certify(&self) -> PathCertificate {
        let x_norm = self.x0.norm();
        let telescoping_error =
            (self.x0.as_dvector() - self.reconstruction.as_dvector() - self.final_residual.as_dvector()).norm();
        let mut monotone_excess = f64::NEG_INFINITY;
        let mut energy_excess = f64::NEG_INFINITY;
        for (k, w) in self.residual_norms.windows(2).enumerate() {
            monotone_excess = monotone_excess.max(w[1] - w[0]);
            energy_excess = energy_excess.max(self.term_norms_sq[k] + w[1] * w[1] - w[0] * w[0]);
        }
        let violations = usize::from(telescoping_error > ALGEBRAIC_TOL * x_norm)
            + usize::from(monotone_excess > ALGEBRAIC_TOL * x_norm)
            + usize::from(energy_excess > ENERGY_TOL * x_norm * x_norm);
        PathCertificate {
            telescoping_error,
            monotone_excess: monotone_excess.max(0.0),
            energy_excess: energy_excess.max(0.0),
            violations,
        }
    }

    /// JSON view: norms always, vectors when `full`.
    pub fn record(&self, full: bool) -> PathRecord {
        PathRecord {
            seed: self.rng.seed,
            stream: self.rng.stream,
            steps: self.steps,
            x0: self.x0.clone(),
            residual_norms: self.residual_norms.clone(),
            term_norms_sq: self.term_norms_sq.clone(),
            frame_energy: self.frame_energy(),
            parseval_defect: self.parseval_defect(),
            terms: full.then(|| self.terms.clone()),
            final_residual: full.then(|| self.final_residual.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathRecord {
    pub seed: u64,
    pub stream: u64,
    pub steps: usize,
    pub x0: Vector,
    pub residual_norms: Vec<f64>,
    pub term_norms_sq: Vec<f64>,
    pub frame_energy: f64,
    pub parseval_defect: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<Vector>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_residual: Option<Vector>,
}

pub fn run_path(sampler: &Sampler, x: &Vector, stop: StoppingRule, rng: RngStream) -> Result<IterationPath> {
    run_path_capped(sampler, x, stop, rng, DEFAULT_TERM_CAP)
}

/// [`run_path`] with an explicit cap on stored term vectors.
pub fn run_path_capped(
    sampler: &Sampler,
    x: &Vector,
    stop: StoppingRule,
    stream: RngStream,
    term_cap: usize,
) -> Result<IterationPath> {
    let mut rng = stream.rng();
    let mut path = walk(sampler, x, stop, &mut rng, term_cap)?;
    path.rng = stream;
    Ok(path)
}

pub(crate) fn walk<R: Rng + ?Sized>(
    sampler: &Sampler,
    x: &Vector,
    stop: StoppingRule,
    rng: &mut R,
    term_cap: usize,
) -> Result<IterationPath> {
    stop.validate()?;
    if x.dim() != sampler.dim() {
        return Err(Error::DimensionMismatch {
            expected: sampler.dim(),
            found: x.dim(),
        });
    }
    let d = x.dim();
    let x_norm = x.norm();
    let threshold = stop.residual_tol * x_norm;
    let mut residual = x.as_dvector().clone();
    let mut reconstruction = DVector::zeros(d);
    let mut terms = Vec::new();
    let mut term_norms_sq = Vec::new();
    let mut residual_norms = vec![x_norm];

    if x_norm > 0.0 {
        for _ in 0..stop.max_steps {
            let term = sampler.draw(rng).apply(&residual);
            residual -= &term;
            reconstruction += &term;
            let r_norm = residual.norm();
            term_norms_sq.push(term.norm_squared());
            residual_norms.push(r_norm);
            if terms.len() < term_cap {
                terms.push(Vector::from_dvector(term)?);
            }
            if r_norm <= threshold {
                break;
            }
        }
    }

    Ok(IterationPath {
        x0: x.clone(),
        steps: term_norms_sq.len(),
        terms,
        term_norms_sq,
        residual_norms,
        reconstruction: Vector::from_dvector(reconstruction)?,
        final_residual: Vector::from_dvector(residual)?,
        rng: RngStream::new(0, 0),
    })
}

pub fn frame_energy(path: &IterationPath) -> f64 {
    path.frame_energy()
}

pub fn parseval_defect(path: &IterationPath) -> f64 {
    path.parseval_defect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymOperator;
    use crate::random::{gaussian_vector, random_basis, random_positive_contraction};

    fn v(x: &[f64]) -> Vector {
        Vector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn identity_reconstructs_in_one_step() {
        let s = Sampler::deterministic(SymOperator::identity(3)).unwrap();
        let x = v(&[1.0, -2.0, 0.5]);
        let p = run_path(&s, &x, StoppingRule::steps(50), RngStream::new(0, 0)).unwrap();
        assert_eq!(p.steps, 1);
        assert_eq!(p.terms[0], x);
        assert_eq!(p.final_residual_norm(), 0.0);
        assert_eq!(p.frame_energy(), x.norm_sq());
    }

    #[test]
    fn half_identity_is_geometric() {
        let s = Sampler::deterministic(SymOperator::scaled_identity(2, 0.5)).unwrap();
        let x = v(&[3.0, 4.0]);
        let p = run_path(&s, &x, StoppingRule::steps(30), RngStream::new(0, 0)).unwrap();
        assert_eq!(p.steps, 30);
        for k in 1..=30 {
            let scale = 0.5f64.powi(k as i32);
            assert_eq!(p.residual_norms[k], 5.0 * scale);
            assert_eq!(p.terms[k - 1], v(&[3.0 * scale, 4.0 * scale]));
        }
        // Σ 4^{-k} → 1/3
        assert!((p.frame_energy() - 25.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn half_identity_defect_after_three_steps() {
        let s = Sampler::deterministic(SymOperator::scaled_identity(2, 0.5)).unwrap();
        let x = v(&[3.0, 4.0]);
        let p = run_path(&s, &x, StoppingRule::steps(3), RngStream::new(0, 0)).unwrap();
        // (1/4 + 1/16 + 1/64 + 1/64 - 1)·‖x‖² in absolute value
        assert!((p.parseval_defect() - 42.0 / 64.0 * 25.0).abs() < 1e-12);
    }

    #[test]
    fn two_axis_terms_are_axis_components() {
        // Oracle: every length-3 draw sequence over {e1, e2}, enumerated by hand.
        let x = v(&[1.0, 1.0]);
        let allowed = [v(&[1.0, 0.0]), v(&[0.0, 1.0]), v(&[0.0, 0.0])];
        let s = Sampler::coordinate_axes(2);
        for stream in 0..64 {
            let p = run_path(&s, &x, StoppingRule::steps(3), RngStream::new(1, stream)).unwrap();
            for t in &p.terms {
                assert!(allowed.contains(t), "{t:?}");
            }
            let seen: std::collections::BTreeSet<_> =
                p.terms.iter().filter(|t| t.norm() > 0.0).map(|t| t.as_slice()[0] as i32).collect();
            if seen.len() == 2 {
                assert_eq!(p.final_residual_norm(), 0.0);
            } else {
                assert_eq!(p.final_residual_norm(), 1.0);
            }
        }
    }

    #[test]
    fn zero_start_returns_empty_path() {
        let s = Sampler::coordinate_axes(3);
        let p = run_path(&s, &Vector::zeros(3), StoppingRule::steps(10), RngStream::new(0, 0)).unwrap();
        assert_eq!(p.steps, 0);
        assert_eq!(p.residual_norms, vec![0.0]);
        assert_eq!(p.parseval_defect(), 0.0);
    }

    #[test]
    fn rejects_bad_arguments() {
        let s = Sampler::coordinate_axes(2);
        assert!(run_path(&s, &v(&[1.0, 0.0]), StoppingRule::steps(0), RngStream::new(0, 0)).is_err());
        assert!(matches!(
            run_path(&s, &v(&[1.0, 0.0, 0.0]), StoppingRule::steps(3), RngStream::new(0, 0)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn residual_tolerance_stops_early() {
        let s = Sampler::deterministic(SymOperator::scaled_identity(2, 0.5)).unwrap();
        let stop = StoppingRule {
            max_steps: 100,
            residual_tol: 1e-3,
        };
        let p = run_path(&s, &v(&[1.0, 0.0]), stop, RngStream::new(0, 0)).unwrap();
        // 2^{-10} < 1e-3 < 2^{-9}
        assert_eq!(p.steps, 10);
    }

    #[test]
    fn term_cap_keeps_norms() {
        let s = Sampler::deterministic(SymOperator::scaled_identity(2, 0.5)).unwrap();
        let p = run_path_capped(&s, &v(&[1.0, 1.0]), StoppingRule::steps(20), RngStream::new(0, 0), 5).unwrap();
        assert_eq!(p.terms.len(), 5);
        assert_eq!(p.term_norms_sq.len(), 20);
        assert_eq!(p.certify().violations, 0);
    }

    #[test]
    fn certificates_hold_for_random_laws() {
        let mut rng = RngStream::new(7, 0).rng();
        for d in [1, 2, 5, 9] {
            let samplers = [
                Sampler::mixture(vec![
                    (random_positive_contraction(d, &mut rng), 0.5),
                    (random_positive_contraction(d, &mut rng), 0.5),
                ])
                .unwrap(),
                Sampler::random_spectral(d, 0.0, 1.0).unwrap(),
                Sampler::fusion(vec![(random_basis(d, 1, &mut rng), 1.0)]).unwrap(),
            ];
            for (i, s) in samplers.iter().enumerate() {
                let x = gaussian_vector(d, &mut rng);
                let p = run_path(s, &x, StoppingRule::steps(200), RngStream::new(8, i as u64)).unwrap();
                let c = p.certify();
                assert_eq!(c.violations, 0, "{c:?}");
                assert!(p.frame_energy() + p.final_residual_norm().powi(2) <= x.norm_sq() * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn paths_are_reproducible() {
        let s = Sampler::random_spectral(4, 0.1, 0.9).unwrap();
        let x = v(&[1.0, 2.0, 3.0, 4.0]);
        let a = run_path(&s, &x, StoppingRule::steps(25), RngStream::new(3, 9)).unwrap();
        let b = run_path(&s, &x, StoppingRule::steps(25), RngStream::new(3, 9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rng, RngStream::new(3, 9));
    }

    #[test]
    fn record_includes_vectors_only_when_full() {
        let s = Sampler::coordinate_axes(2);
        let p = run_path(&s, &v(&[1.0, 2.0]), StoppingRule::steps(4), RngStream::new(0, 1)).unwrap();
        let short = serde_json::to_value(p.record(false)).unwrap();
        assert!(short.get("terms").is_none());
        let full = serde_json::to_value(p.record(true)).unwrap();
        assert_eq!(full["terms"].as_array().unwrap().len(), p.steps);
    }
}
