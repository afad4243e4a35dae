//! Monte Carlo statistics over many independent paths, and the checks that
//! compare them with the geometric decay bound, the frame bounds, the
//! Chebyshev/Borel–Cantelli tail bound and the exact oracle.
//!
//! Trials run in parallel but are folded in trial order, so a summary is
//! bitwise identical for any worker count.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::iteration::{run_path, StoppingRule};
use crate::linalg::Vector;
use crate::rng::RngStream;
use crate::samplers::Sampler;

/// Width of the acceptance band in standard errors.
pub const STDERR_BAND: f64 = 4.0;
/// Relative allowance for floating-point rounding in bound comparisons.
pub const ROUNDING_SLACK: f64 = 1e-12;
const CHUNK: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct TrialPlan {
    pub n_steps: usize,
    pub n_trials: usize,
    pub master_seed: u64,
    /// Stream group, so that several trial sets can share a master seed.
    pub group: u32,
    /// Absolute thresholds `δ` whose exceedance counts `#{‖r_n‖ > δ}` are kept.
    pub thresholds: Vec<f64>,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl TrialPlan {
    pub fn new(n_steps: usize, n_trials: usize, master_seed: u64) -> Self {
        TrialPlan {
            n_steps,
            n_trials,
            master_seed,
            group: 0,
            thresholds: Vec::new(),
            workers: None,
        }
    }

    pub fn with_thresholds(mut self, thresholds: Vec<f64>) -> Self {
        self.thresholds = thresholds;
        self
    }

    pub fn with_workers(mut self, workers: Option<usize>) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_group(mut self, group: u32) -> Self {
        self.group = group;
        self
    }

    pub fn stream(&self, trial: usize) -> RngStream {
        RngStream::for_trial(self.master_seed, self.group, trial as u32)
    }

    fn validate(&self) -> Result<()> {
        if self.n_steps == 0 || self.n_trials == 0 {
            return Err(Error::InvalidArgument("trials need n_steps >= 1 and n_trials >= 1".into()));
        }
        if self.n_trials > u32::MAX as usize {
            return Err(Error::InvalidArgument("too many trials for the stream layout".into()));
        }
        if let Some(&d) = self.thresholds.iter().find(|d| !(**d > 0.0)) {
            return Err(Error::InvalidArgument(format!("exceedance threshold must be positive (got {d})")));
        }
        Ok(())
    }
}

/// Runs `produce(i)` for `i in 0..n` in parallel and feeds the results to
/// `consume` in index order.
pub(crate) fn ordered_trials<T, P, C>(n: usize, workers: Option<usize>, produce: P, mut consume: C) -> Result<()>
where
    T: Send,
    P: Fn(usize) -> Result<T> + Sync + Send,
    C: FnMut(T) + Send,
{
    let mut run = || -> Result<()> {
        for start in (0..n).step_by(CHUNK) {
            let end = (start + CHUNK).min(n);
            let batch: Vec<Result<T>> = (start..end).into_par_iter().map(&produce).collect();
            for item in batch {
                consume(item?);
            }
        }
        Ok(())
    };
    match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    }
}

/// Per-step mean and standard error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepSeries {
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// Running mean and variance per step (Welford), folded in trial order.
#[derive(Debug, Clone)]
pub(crate) struct StepAccumulator {
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl StepAccumulator {
    pub(crate) fn new(len: usize) -> Self {
        StepAccumulator {
            count: 0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    pub(crate) fn push(&mut self, values: &[f64]) {
        self.count += 1;
        let k = self.count as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(&mut self.m2).zip(values) {
            let delta = v - *m;
            *m += delta / k;
            *s += delta * (v - *m);
        }
    }

    /// The standard error of a mean equals its delete-one jackknife estimate.
    pub(crate) fn finish(self) -> StepSeries {
        let n = self.count as f64;
        let stderr = self
            .m2
            .iter()
            .map(|&s| if self.count > 1 { (s / (n - 1.0) / n).sqrt() } else { 0.0 })
            .collect();
        StepSeries {
            mean: self.mean,
            stderr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exceedance {
    pub delta: f64,
    /// `#{trials : ‖r_n‖ > δ}` for `n = 0..=n_steps`.
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialSummary {
    pub description: String,
    pub x: Vector,
    pub n_trials: usize,
    pub n_steps: usize,
    /// False when every trial follows the same deterministic path.
    pub random: bool,
    /// `‖r_n‖²`, `n = 0..=n_steps`.
    pub residual_sq: StepSeries,
    /// `Σ_{k≤n} ‖t_k‖²`, `n = 0..=n_steps`.
    pub frame_energy: StepSeries,
    pub exceedances: Vec<Exceedance>,
    /// Failed per-path certificates, summed over trials.
    pub violations: usize,
    pub max_parseval_defect: f64,
    /// Per-path totals, in trial order.
    pub paths: Vec<PathStats>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathStats {
    /// Steps actually taken; fewer than planned only when the residual hit zero.
    pub steps: usize,
    pub frame_energy: f64,
    pub final_residual_sq: f64,
    pub parseval_defect: f64,
}

struct Trace {
    residual_sq: Vec<f64>,
    energy: Vec<f64>,
    residual_norm: Vec<f64>,
    violations: usize,
    stats: PathStats,
}

pub fn run_trials(sampler: &Sampler, x: &Vector, plan: &TrialPlan) -> Result<TrialSummary> {
    plan.validate()?;
    let len = plan.n_steps + 1;
    let stop = StoppingRule::steps(plan.n_steps);
    let produce = |trial: usize| -> Result<Trace> {
        let path = run_path(sampler, x, stop, plan.stream(trial))?;
        let mut residual_norm = path.residual_norms.clone();
        let last = *residual_norm.last().expect("nonempty");
        residual_norm.resize(len, last);
        let mut energy = Vec::with_capacity(len);
        let mut acc = 0.0;
        energy.push(0.0);
        for t in &path.term_norms_sq {
            acc += t;
            energy.push(acc);
        }
        energy.resize(len, acc);
        Ok(Trace {
            residual_sq: residual_norm.iter().map(|r| r * r).collect(),
            energy,
            residual_norm,
            violations: path.certify().violations,
            stats: PathStats {
                steps: path.steps,
                frame_energy: acc,
                final_residual_sq: last * last,
                parseval_defect: path.parseval_defect(),
            },
        })
    };

    let mut res_acc = StepAccumulator::new(len);
    let mut energy_acc = StepAccumulator::new(len);
    let mut counts = vec![vec![0u64; len]; plan.thresholds.len()];
    let mut violations = 0;
    let mut max_defect: f64 = 0.0;
    let mut paths = Vec::with_capacity(plan.n_trials);
    ordered_trials(plan.n_trials, plan.workers, produce, |t: Trace| {
        res_acc.push(&t.residual_sq);
        energy_acc.push(&t.energy);
        for (c, &delta) in counts.iter_mut().zip(&plan.thresholds) {
            for (slot, &r) in c.iter_mut().zip(&t.residual_norm) {
                *slot += u64::from(r > delta);
            }
        }
        violations += t.violations;
        max_defect = max_defect.max(t.stats.parseval_defect);
        paths.push(t.stats);
    })?;

    Ok(TrialSummary {
        description: sampler.description(),
        x: x.clone(),
        n_trials: plan.n_trials,
        n_steps: plan.n_steps,
        random: !sampler.is_deterministic(),
        residual_sq: res_acc.finish(),
        frame_energy: energy_acc.finish(),
        exceedances: plan
            .thresholds
            .iter()
            .zip(counts)
            .map(|(&delta, counts)| Exceedance { delta, counts })
            .collect(),
        violations,
        max_parseval_defect: max_defect,
        paths,
    })
}

impl TrialSummary {
    pub fn x_norm_sq(&self) -> f64 {
        self.x.norm_sq()
    }

    /// Half-width of the acceptance band around a per-step mean.
    ///
    /// Per-trial values lie in `[0, ‖x‖²]`, so for random laws the standard
    /// error is floored at the resolution of a single trial, `‖x‖²/N`; this
    /// keeps late steps, where few or no trials are still nonzero, from
    /// reporting a spurious zero error.
    pub fn band(&self, stderr: f64) -> f64 {
        let floor = if self.random {
            self.x_norm_sq() / self.n_trials as f64
        } else {
            0.0
        };
        STDERR_BAND * stderr.max(floor) + ROUNDING_SLACK * self.x_norm_sq()
    }

    pub fn exceedance(&self, delta: f64) -> Option<&Exceedance> {
        self.exceedances.iter().find(|e| e.delta == delta)
    }

    /// CSV with columns `step, mean_res_sq, stderr, bound, mean_energy, exceed_freq`.
    /// `bound` needs the coercivity constant; `exceed_freq` a tracked `δ`.
    pub fn write_csv<W: Write>(&self, w: W, coercivity: Option<f64>, delta: Option<f64>) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            step: usize,
            mean_res_sq: f64,
            stderr: f64,
            bound: Option<f64>,
            mean_energy: f64,
            exceed_freq: Option<f64>,
        }
        let exceed = delta.and_then(|d| self.exceedance(d));
        let mut out = csv::Writer::from_writer(w);
        for step in 0..=self.n_steps {
            out.serialize(Row {
                step,
                mean_res_sq: self.residual_sq.mean[step],
                stderr: self.residual_sq.stderr[step],
                bound: coercivity.map(|c| (1.0 - c).powi(step as i32) * self.x_norm_sq()),
                mean_energy: self.frame_energy.mean[step],
                exceed_freq: exceed.map(|e| e.counts[step] as f64 / self.n_trials as f64),
            })?;
        }
        out.flush()?;
        Ok(())
    }
}

/// A single inequality `measured ≤ bound + slack` (or `≥ bound - slack`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Check {
    pub measured: f64,
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(measured: f64, bound: f64, slack: f64) -> Self {
        Check {
            measured,
            bound,
            slack,
            pass: measured <= bound + slack,
        }
    }

    pub fn at_least(measured: f64, bound: f64, slack: f64) -> Self {
        Check {
            measured,
            bound,
            slack,
            pass: measured >= bound - slack,
        }
    }

    pub fn within(measured: f64, target: f64, slack: f64) -> Self {
        Check {
            measured,
            bound: target,
            slack,
            pass: (measured - target).abs() <= slack,
        }
    }

    /// Distance to failure; negative when the check fails.
    pub fn margin_above(&self) -> f64 {
        self.bound + self.slack - self.measured
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepCheck {
    pub step: usize,
    #[serde(flatten)]
    pub check: Check,
}

/// Per-step checks; passes iff every step passes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepwiseCheck {
    pub steps: Vec<StepCheck>,
    pub pass: bool,
}

impl StepwiseCheck {
    fn from_steps(steps: Vec<StepCheck>) -> Self {
        let pass = steps.iter().all(|s| s.check.pass);
        StepwiseCheck { steps, pass }
    }

    /// The step closest to (or furthest past) failure, judged by the
    /// signed margin `bound + slack - |measured - bound|` for two-sided checks
    /// or `bound + slack - measured` for one-sided ones.
    pub fn worst(&self, two_sided: bool) -> Option<&StepCheck> {
        let margin = |s: &StepCheck| {
            if two_sided {
                s.check.slack - (s.check.measured - s.check.bound).abs()
            } else {
                s.check.margin_above()
            }
        };
        self.steps.iter().min_by(|a, b| margin(a).total_cmp(&margin(b)))
    }

    pub fn failures(&self) -> usize {
        self.steps.iter().filter(|s| !s.check.pass).count()
    }
}

fn ensure_coercive(c: f64) -> Result<()> {
    if c > 0.0 && c <= 1.0 {
        Ok(())
    } else {
        Err(Error::Coercivity(c))
    }
}

/// `mean ‖r_n‖² ≤ (1-C)ⁿ ‖x‖²` within the stderr band, for every step.
pub fn check_mean_square_bound(summary: &TrialSummary, c: f64) -> Result<StepwiseCheck> {
    ensure_coercive(c)?;
    let x2 = summary.x_norm_sq();
    let steps = (0..=summary.n_steps)
        .map(|n| StepCheck {
            step: n,
            check: Check::at_most(
                summary.residual_sq.mean[n],
                (1.0 - c).powi(n as i32) * x2,
                summary.band(summary.residual_sq.stderr[n]),
            ),
        })
        .collect();
    Ok(StepwiseCheck::from_steps(steps))
}

/// `|mean ‖r_n‖² - exact_n| ≤ band` for each step covered by `exact`.
pub fn compare_residuals(summary: &TrialSummary, exact: &[f64]) -> StepwiseCheck {
    compare_series(summary, &summary.residual_sq, exact)
}

/// `|mean Σ_{k≤n} ‖t_k‖² - exact_n| ≤ band` for each step covered by `exact`.
pub fn compare_energies(summary: &TrialSummary, exact: &[f64]) -> StepwiseCheck {
    compare_series(summary, &summary.frame_energy, exact)
}

fn compare_series(summary: &TrialSummary, series: &StepSeries, exact: &[f64]) -> StepwiseCheck {
    let steps = exact
        .iter()
        .enumerate()
        .take(summary.n_steps + 1)
        .map(|(n, &e)| StepCheck {
            step: n,
            check: Check::within(series.mean[n], e, summary.band(series.stderr[n])),
        })
        .collect();
    StepwiseCheck::from_steps(steps)
}

/// Source of the expected frame energy at a fixed step.
#[derive(Debug, Clone, Copy)]
pub enum FrameEvidence<'a> {
    MonteCarlo { summary: &'a TrialSummary, step: usize },
    /// Exact energy at step n and the exact residual `ε_n = E‖R_n x‖²`.
    Oracle { energy: f64, residual: f64, x_norm_sq: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameBoundCheck {
    pub measured: f64,
    pub lower: f64,
    pub upper: f64,
    pub slack: f64,
    pub pass: bool,
}

/// `C‖x‖² ≤ E[Σ_{k≤n} ‖t_k‖²] ≤ ‖x‖²` up to the evidence's slack.
pub fn check_frame_bounds(evidence: FrameEvidence<'_>, c: f64) -> Result<FrameBoundCheck> {
    ensure_coercive(c)?;
    let (measured, x2, slack) = match evidence {
        FrameEvidence::MonteCarlo { summary, step } => {
            if step == 0 || step > summary.n_steps {
                return Err(Error::InvalidArgument(format!("frame bound step {step} outside 1..={}", summary.n_steps)));
            }
            (
                summary.frame_energy.mean[step],
                summary.x_norm_sq(),
                summary.band(summary.frame_energy.stderr[step]),
            )
        }
        FrameEvidence::Oracle {
            energy,
            residual,
            x_norm_sq,
        } => (energy, x_norm_sq, 1e-9 * x_norm_sq + residual),
    };
    let lower = c * x2;
    let upper = x2;
    Ok(FrameBoundCheck {
        measured,
        lower,
        upper,
        slack,
        pass: measured >= lower - slack && measured <= upper + slack,
    })
}

/// Empirical exceedance frequencies `P(‖r_n‖ > δ)` and their partial sums.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BorelCantelli {
    pub delta: f64,
    pub n_trials: usize,
    pub freqs: Vec<f64>,
    pub partial_sums: Vec<f64>,
}

pub fn borel_cantelli_diagnostic(summary: &TrialSummary, delta: f64) -> Result<BorelCantelli> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta must be positive (got {delta})")));
    }
    let e = summary.exceedance(delta).ok_or_else(|| {
        Error::InvalidArgument(format!("threshold {delta} was not tracked by this trial set"))
    })?;
    let n = summary.n_trials as f64;
    let freqs: Vec<f64> = e.counts.iter().map(|&c| c as f64 / n).collect();
    let mut acc = 0.0;
    let partial_sums = freqs
        .iter()
        .map(|f| {
            acc += f;
            acc
        })
        .collect();
    Ok(BorelCantelli {
        delta,
        n_trials: summary.n_trials,
        freqs,
        partial_sums,
    })
}

impl BorelCantelli {
    /// Binomial standard error at probability `p`, floored at one count.
    fn binomial_se(&self, p: f64) -> f64 {
        let n = self.n_trials as f64;
        ((p * (1.0 - p)).max(1.0 / n) / n).sqrt()
    }

    /// `Σ_n P(‖R_n x‖ > δ) ≤ ‖x‖² / (C δ²)`, the Chebyshev tail summed over
    /// `(1-C)ⁿ`.
    pub fn check_tail(&self, x_norm_sq: f64, c: f64) -> Result<Check> {
        ensure_coercive(c)?;
        let bound = x_norm_sq / (c * self.delta * self.delta);
        let slack: f64 = STDERR_BAND * self.freqs.iter().map(|&p| self.binomial_se(p)).sum::<f64>();
        let measured = *self.partial_sums.last().expect("at least step 0");
        Ok(Check::at_most(measured, bound, slack))
    }

    /// Per-step Chebyshev bound `P(‖R_n x‖ > δ) ≤ (1-C)ⁿ ‖x‖² / δ²`.
    pub fn check_chebyshev(&self, x_norm_sq: f64, c: f64) -> Result<StepwiseCheck> {
        ensure_coercive(c)?;
        let d2 = self.delta * self.delta;
        let steps = self
            .freqs
            .iter()
            .enumerate()
            .map(|(n, &p)| StepCheck {
                step: n,
                check: Check::at_most(p, (1.0 - c).powi(n as i32) * x_norm_sq / d2, STDERR_BAND * self.binomial_se(p)),
            })
            .collect();
        Ok(StepwiseCheck::from_steps(steps))
    }

    /// Frequencies against exact exceedance probabilities, with the binomial
    /// standard error evaluated at the exact value.
    pub fn check_exact(&self, exact: &[f64]) -> StepwiseCheck {
        let steps = self
            .freqs
            .iter()
            .zip(exact)
            .enumerate()
            .map(|(n, (&f, &p))| StepCheck {
                step: n,
                check: Check::within(f, p, STDERR_BAND * self.binomial_se(p)),
            })
            .collect();
        StepwiseCheck::from_steps(steps)
    }
}

/// A residual curve that has stopped decreasing at a nonzero level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Plateau {
    pub level: f64,
    pub from_step: usize,
}

/// Detects stagnation: over the second half of the run the mean squared
/// residual fell by less than a relative `1e-9` while staying above
/// `1e-12 ‖x‖²`.
pub fn detect_plateau(summary: &TrialSummary) -> Option<Plateau> {
    let mean = &summary.residual_sq.mean;
    let n = summary.n_steps;
    if n < 2 {
        return None;
    }
    let half = n / 2;
    let (early, late) = (mean[half], mean[n]);
    if late > 1e-12 * summary.x_norm_sq() && late >= early * (1.0 - 1e-9) {
        let from_step = (1..=n).find(|&k| (mean[k] - late).abs() <= 1e-9 * late).unwrap_or(half);
        Some(Plateau { level: late, from_step })
    } else {
        None
    }
}

/// Mean reconstruction error for one canonical basis vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BasisCheck {
    pub index: usize,
    pub mean_error_sq: f64,
    pub stderr: f64,
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub n_steps: usize,
    pub coercivity: f64,
    pub per_basis: Vec<BasisCheck>,
    pub max_error: f64,
    pub pass: bool,
}

/// Checks `Σ_k T_k → I` through its action on each `e_j`:
/// `mean ‖e_j - Σ_{k≤n} t_k‖² ≤ (1-C)ⁿ` within the stderr band.
pub fn verify_operator_identity(
    sampler: &Sampler,
    n_steps: usize,
    n_trials: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<IdentityReport> {
    let d = sampler.dim();
    let c = sampler.analytic_coercivity()?;
    ensure_coercive(c)?;
    let bound = (1.0 - c).powi(n_steps as i32);
    let mut per_basis = Vec::with_capacity(d);
    for j in 0..d {
        let plan = TrialPlan::new(n_steps, n_trials, seed).with_group(j as u32).with_workers(workers);
        let summary = run_trials(sampler, &Vector::basis(d, j), &plan)?;
        let mean = summary.residual_sq.mean[n_steps];
        let stderr = summary.residual_sq.stderr[n_steps];
        let slack = summary.band(stderr);
        per_basis.push(BasisCheck {
            index: j,
            mean_error_sq: mean,
            stderr,
            bound,
            slack,
            pass: mean <= bound + slack,
        });
    }
    let max_error = per_basis.iter().map(|b| b.mean_error_sq).fold(0.0, f64::max);
    let pass = per_basis.iter().all(|b| b.pass);
    Ok(IdentityReport {
        n_steps,
        coercivity: c,
        per_basis,
        max_error,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymOperator;
    use crate::oracle::oracle_curve;

    fn v(x: &[f64]) -> Vector {
        Vector::new(x.to_vec()).unwrap()
    }

    fn half() -> Sampler {
        Sampler::deterministic(SymOperator::scaled_identity(2, 0.5)).unwrap()
    }

    #[test]
    fn deterministic_trials_are_exact() {
        let x = v(&[3.0, 4.0]);
        let s = run_trials(&half(), &x, &TrialPlan::new(20, 50, 1)).unwrap();
        assert!(!s.random);
        for n in 0..=20 {
            assert_eq!(s.residual_sq.mean[n], 25.0 * 0.25f64.powi(n as i32));
            assert_eq!(s.residual_sq.stderr[n], 0.0);
        }
        let bound = check_mean_square_bound(&s, 0.25).unwrap();
        assert!(bound.pass);
        let fb = check_frame_bounds(FrameEvidence::MonteCarlo { summary: &s, step: 20 }, 0.25).unwrap();
        assert!(fb.pass && (fb.measured - 25.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn single_trial_equals_its_path() {
        let x = v(&[1.0, 2.0]);
        let sampler = Sampler::coordinate_axes(2);
        let plan = TrialPlan::new(6, 1, 3);
        let s = run_trials(&sampler, &x, &plan).unwrap();
        let p = run_path(&sampler, &x, StoppingRule::steps(6), plan.stream(0)).unwrap();
        for (n, r) in p.residual_norms.iter().enumerate() {
            assert_eq!(s.residual_sq.mean[n], r * r);
        }
        assert!(s.residual_sq.stderr.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn two_axis_matches_oracle() {
        let x = v(&[0.6, 0.8]);
        let sampler = Sampler::coordinate_axes(2);
        let s = run_trials(&sampler, &x, &TrialPlan::new(10, 10_000, 7)).unwrap();
        let curve = oracle_curve(&sampler, &x, 10).unwrap();
        let exact: Vec<f64> = curve.points.iter().map(|p| p.exp_residual_sq).collect();
        assert!(compare_residuals(&s, &exact).pass);
        assert!(check_mean_square_bound(&s, 0.5).unwrap().pass);
        assert_eq!(s.violations, 0);
        assert!(s.max_parseval_defect <= 1e-9);
    }

    #[test]
    fn overstated_constant_fails() {
        let x = v(&[0.6, 0.8]);
        let s = run_trials(&Sampler::coordinate_axes(2), &x, &TrialPlan::new(10, 2_000, 8)).unwrap();
        let check = check_mean_square_bound(&s, 0.9).unwrap();
        assert!(!check.pass);
        assert!(matches!(check_mean_square_bound(&s, 0.0), Err(Error::Coercivity(_))));
    }

    #[test]
    fn plateau_for_fixed_projection() {
        let p = SymOperator::diagonal(&[1.0, 0.0]).unwrap();
        let sampler = Sampler::deterministic(p).unwrap();
        assert_eq!(sampler.coercivity_constant().unwrap(), 0.0);
        let x = v(&[1.0, 2.0]);
        let s = run_trials(&sampler, &x, &TrialPlan::new(30, 10, 0)).unwrap();
        let plateau = detect_plateau(&s).expect("plateau");
        assert_eq!(plateau.level, 4.0);
        assert_eq!(plateau.from_step, 1);

        let conv = run_trials(&half(), &x, &TrialPlan::new(30, 10, 0)).unwrap();
        assert!(detect_plateau(&conv).is_none());
    }

    #[test]
    fn borel_cantelli_small_cases() {
        let x = v(&[3.0, 4.0]);
        let s = run_trials(&half(), &x, &TrialPlan::new(12, 20, 0).with_thresholds(vec![2.5, 6.0])).unwrap();
        let bc = borel_cantelli_diagnostic(&s, 2.5).unwrap();
        assert_eq!(bc.freqs[0], 1.0);
        assert!(bc.freqs[1..].iter().all(|&f| f == 0.0));
        let over = borel_cantelli_diagnostic(&s, 6.0).unwrap();
        assert!(over.freqs.iter().all(|&f| f == 0.0));
        assert!(borel_cantelli_diagnostic(&s, 1.0).is_err());
        assert!(bc.check_tail(25.0, 0.25).unwrap().pass);
    }

    #[test]
    fn worker_count_does_not_change_summary() {
        let x = v(&[0.3, -1.0, 2.0]);
        let sampler = Sampler::random_spectral(3, 0.1, 0.9).unwrap();
        let base = TrialPlan::new(15, 3_000, 99).with_thresholds(vec![0.5]);
        let one = run_trials(&sampler, &x, &base.clone().with_workers(Some(1))).unwrap();
        let four = run_trials(&sampler, &x, &base.clone().with_workers(Some(4))).unwrap();
        let global = run_trials(&sampler, &x, &base).unwrap();
        assert_eq!(one, four);
        assert_eq!(one, global);
    }

    #[test]
    fn identity_sweep() {
        let id = Sampler::deterministic(SymOperator::identity(3)).unwrap();
        let r = verify_operator_identity(&id, 1, 5, 0, None).unwrap();
        assert!(r.pass);
        assert_eq!(r.max_error, 0.0);

        let r = verify_operator_identity(&Sampler::coordinate_axes(2), 20, 2_000, 4, None).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn csv_has_documented_columns() {
        let x = v(&[1.0]);
        let s = run_trials(
            &Sampler::deterministic(SymOperator::scaled_identity(1, 0.5)).unwrap(),
            &x,
            &TrialPlan::new(1, 2, 0).with_thresholds(vec![0.75]),
        )
        .unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf, Some(0.25), Some(0.75)).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "step,mean_res_sq,stderr,bound,mean_energy,exceed_freq\n0,1.0,0.0,1.0,0.0,1.0\n1,0.25,0.0,0.75,0.25,0.0\n"
        );
    }
}
