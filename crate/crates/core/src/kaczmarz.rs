//! Randomized Kaczmarz for consistent linear systems.
//!
//! Each step projects the iterate onto the hyperplane of one row, drawn with
//! probability `‖a_i‖²/‖A‖_F²`. The error `e_k = x_k - x*` then follows
//! `e_k = (I - P_i) e_{k-1}` with `P_i = a_i a_iᵀ/‖a_i‖²`, which is the residual
//! recursion of the frame iteration driven by the row sampler.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::analysis::{ordered_trials, PathStats, StepAccumulator, TrialSummary};
use crate::error::{Error, Result};
use crate::iteration::{run_path_capped, StoppingRule};
use crate::linalg::Vector;
use crate::rng::RngStream;
use crate::samplers::{Draw, Sampler, SamplerSpec};

/// Relative tolerance on `‖A x* - b‖` for a supplied solution.
pub const SOLUTION_TOL: f64 = 1e-10;
/// Tolerance on the least-squares residual when no solution is supplied.
pub const CONSISTENCY_TOL: f64 = 1e-8;
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LinearSystem {
    a: DMatrix<f64>,
    b: DVector<f64>,
    x_star: Option<Vector>,
    sampler: Sampler,
}

impl LinearSystem {
    /// Validates `A x = b`. Without `x_star`, consistency is decided by a
    /// least-squares solve, and the solution is kept when it is unique.
    pub fn new(a: DMatrix<f64>, b: Vec<f64>, x_star: Option<Vec<f64>>) -> Result<Self> {
        Self::with_sampling(a, b, x_star, false)
    }

    /// As [`LinearSystem::new`], optionally drawing rows uniformly instead of
    /// by squared norm.
    pub fn with_sampling(a: DMatrix<f64>, b: Vec<f64>, x_star: Option<Vec<f64>>, uniform: bool) -> Result<Self> {
        if b.len() != a.nrows() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                found: b.len(),
            });
        }
        let b = Vector::new(b)?.into_dvector();
        let sampler = Sampler::new(SamplerSpec::KaczmarzRow {
            matrix: a.clone(),
            uniform,
        })?;
        let x_star = match x_star {
            Some(xs) => {
                let xs = Vector::new(xs)?;
                if xs.dim() != a.ncols() {
                    return Err(Error::DimensionMismatch {
                        expected: a.ncols(),
                        found: xs.dim(),
                    });
                }
                let residual = (&a * xs.as_dvector() - &b).norm();
                if residual > SOLUTION_TOL * (a.norm() * xs.norm() + b.norm()) {
                    return Err(Error::Inconsistent { residual });
                }
                Some(xs)
            }
            None => {
                let svd = a.clone().svd(true, true);
                let x_ls = svd
                    .solve(&b, RANK_TOL * svd.singular_values.max())
                    .map_err(|e| Error::InvalidArgument(e.to_string()))?;
                let residual = (&a * &x_ls - &b).norm();
                if residual > CONSISTENCY_TOL * b.norm().max(1.0) {
                    return Err(Error::Inconsistent { residual });
                }
                full_column_rank(&a).then(|| Vector::from_dvector_unchecked(x_ls))
            }
        };
        Ok(LinearSystem { a, b, x_star, sampler })
    }

    /// The system `A x = A x*`.
    pub fn with_solution(a: DMatrix<f64>, x_star: Vec<f64>) -> Result<Self> {
        if x_star.len() != a.ncols() {
            return Err(Error::DimensionMismatch {
                expected: a.ncols(),
                found: x_star.len(),
            });
        }
        let b = &a * DVector::from_vec(x_star.clone());
        Self::new(a, b.as_slice().to_vec(), Some(x_star))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn x_star(&self) -> Option<&Vector> {
        self.x_star.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    /// The row sampler whose residual process is the error process.
    pub fn sampler(&self) -> &Sampler {
        &self.sampler
    }

    fn require_solution(&self) -> Result<&Vector> {
        self.x_star
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("a known solution x_star is required".into()))
    }
}

fn full_column_rank(a: &DMatrix<f64>) -> bool {
    if a.nrows() < a.ncols() {
        return false;
    }
    let s = a.singular_values();
    let max = s.max();
    max > 0.0 && s.iter().all(|&v| v > RANK_TOL * max)
}

#[derive(Debug, Clone, Serialize)]
pub struct RkHistory {
    /// Row drawn at each step.
    pub rows: Vec<usize>,
    /// `‖x_k - x*‖`, `k = 0..=steps`, when the solution is known.
    pub errors: Option<Vec<f64>>,
    /// `x_0, …, x_steps` when requested.
    pub iterates: Option<Vec<Vector>>,
    /// `‖x_k - x_{k-1}‖²` per step.
    pub update_norms_sq: Vec<f64>,
    pub final_iterate: Vector,
}

pub fn solve_rk(sys: &LinearSystem, x0: &Vector, steps: usize, stream: RngStream, keep_iterates: bool) -> Result<RkHistory> {
    if x0.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            found: x0.dim(),
        });
    }
    let mut rng = stream.rng();
    let mut x = x0.as_dvector().clone();
    let mut rows = Vec::with_capacity(steps);
    let mut update_norms_sq = Vec::with_capacity(steps);
    let mut iterates = keep_iterates.then(|| vec![x0.clone()]);
    let mut errors = sys.x_star.as_ref().map(|xs| vec![(&x - xs.as_dvector()).norm()]);
    for _ in 0..steps {
        let Draw::Row { index, row, norm_sq } = sys.sampler.draw(&mut rng) else {
            unreachable!("row sampler draws rows");
        };
        let step = (sys.b[index] - row.dot(&x)) / norm_sq;
        x.axpy(step, row, 1.0);
        rows.push(index);
        update_norms_sq.push(step * step * norm_sq);
        if let Some(it) = iterates.as_mut() {
            it.push(Vector::from_dvector(x.clone())?);
        }
        if let (Some(errs), Some(xs)) = (errors.as_mut(), sys.x_star.as_ref()) {
            errs.push((&x - xs.as_dvector()).norm());
        }
    }
    Ok(RkHistory {
        rows,
        errors,
        iterates,
        update_norms_sq,
        final_iterate: Vector::from_dvector(x)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rate {
    /// `λ_min(E[P_i])`; zero when `A` lacks full column rank.
    pub c: f64,
    pub full_column_rank: bool,
}

/// Contraction rate of the mean squared error. For norm-squared row
/// sampling this is `λ_min(AᵀA)/‖A‖_F²`.
pub fn rate(sys: &LinearSystem) -> Result<Rate> {
    let full = full_column_rank(&sys.a);
    let c = if full {
        sys.sampler.coercivity_constant()?.clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(Rate {
        c,
        full_column_rank: full,
    })
}

/// Steps after which `(1-C)ⁿ ≤ tol`.
pub fn steps_for_accuracy(c: f64, tol: f64) -> Result<usize> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::Coercivity(c));
    }
    if c == 1.0 {
        return Ok(1);
    }
    Ok((tol.ln() / (1.0 - c).ln()).ceil().max(1.0) as usize)
}

/// Runs the solver and the frame iteration on `x0 - x*` with the same stream
/// and returns `max_k ‖(x_k - x*) - r_k‖`.
pub fn error_process_equivalence(sys: &LinearSystem, x0: &Vector, steps: usize, stream: RngStream) -> Result<f64> {
    let xs = sys.require_solution()?;
    let hist = solve_rk(sys, x0, steps, stream, true)?;
    let e0 = Vector::from_dvector_unchecked(x0.as_dvector() - xs.as_dvector());
    let path = run_path_capped(&sys.sampler, &e0, StoppingRule::steps(steps), stream, steps)?;
    let iterates = hist.iterates.expect("kept");
    let mut worst: f64 = 0.0;
    // Residual vectors are rebuilt from the stored terms.
    let mut r = e0.as_dvector().clone();
    for (k, x) in iterates.iter().enumerate() {
        if k > 0 {
            match path.terms.get(k - 1) {
                Some(t) => r -= t.as_dvector(),
                // The path stopped because its residual is exactly zero.
                None => r.fill(0.0),
            }
        }
        let e = x.as_dvector() - xs.as_dvector();
        worst = worst.max((e - &r).norm());
    }
    Ok(worst)
}

/// Independent solver runs from a common start.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RkTrials {
    /// Error process statistics: `residual_sq` holds `‖x_n - x*‖²` and
    /// `frame_energy` the accumulated `Σ ‖x_k - x_{k-1}‖²`.
    pub summary: TrialSummary,
    /// `‖x_steps - x*‖` per trial, in trial order.
    pub final_errors: Vec<f64>,
}

pub fn run_rk_trials(
    sys: &LinearSystem,
    x0: &Vector,
    steps: usize,
    n_trials: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<RkTrials> {
    let xs = sys.require_solution()?;
    if steps == 0 || n_trials == 0 {
        return Err(Error::InvalidArgument("trials need steps >= 1 and n_trials >= 1".into()));
    }
    let e0 = Vector::from_dvector_unchecked(x0.as_dvector() - xs.as_dvector());
    let e0_sq = e0.norm_sq();
    let len = steps + 1;
    let produce = |trial: usize| -> Result<(Vec<f64>, Vec<f64>, usize, PathStats)> {
        let hist = solve_rk(sys, x0, steps, RngStream::for_trial(seed, 0, trial as u32), false)?;
        let errors = hist.errors.expect("solution known");
        let mut energy = Vec::with_capacity(len);
        let mut acc = 0.0;
        energy.push(0.0);
        for u in &hist.update_norms_sq {
            acc += u;
            energy.push(acc);
        }
        let tol = 1e-9 * e0_sq.sqrt();
        let violations = errors.windows(2).filter(|w| w[1] > w[0] + tol).count();
        let last = errors[steps];
        let stats = PathStats {
            steps,
            frame_energy: acc,
            final_residual_sq: last * last,
            parseval_defect: (acc + last * last - e0_sq).abs(),
        };
        Ok((errors.iter().map(|e| e * e).collect(), energy, violations, stats))
    };
    let mut res = StepAccumulator::new(len);
    let mut energy = StepAccumulator::new(len);
    let mut final_errors = Vec::with_capacity(n_trials);
    let mut violations = 0;
    let mut max_defect: f64 = 0.0;
    let mut paths = Vec::with_capacity(n_trials);
    ordered_trials(n_trials, workers, produce, |(r, e, v, stats)| {
        final_errors.push(r[steps].sqrt());
        res.push(&r);
        energy.push(&e);
        violations += v;
        max_defect = max_defect.max(stats.parseval_defect);
        paths.push(stats);
    })?;
    Ok(RkTrials {
        summary: TrialSummary {
            description: format!("randomized Kaczmarz on a {}x{} system", sys.a.nrows(), sys.a.ncols()),
            x: e0,
            n_trials,
            n_steps: steps,
            random: !sys.sampler.is_deterministic(),
            residual_sq: res.finish(),
            frame_energy: energy.finish(),
            exceedances: Vec::new(),
            violations,
            max_parseval_defect: max_defect,
            paths,
        },
        final_errors,
    })
}

impl RkTrials {
    /// Fraction of trials whose final error is at most `tol`.
    pub fn fraction_within(&self, tol: f64) -> f64 {
        let hits = self.final_errors.iter().filter(|&&e| e <= tol).count();
        hits as f64 / self.final_errors.len() as f64
    }
}
