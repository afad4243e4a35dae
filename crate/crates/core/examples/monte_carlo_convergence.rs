//! Mean-square decay over many trials, compared with (1 - C)^n |x|^2 and
//! the exact curve, plus the Borel–Cantelli partial sums.

use opframe::analysis::{borel_cantelli_diagnostic, check_mean_square_bound, compare_residuals, run_trials, TrialPlan};
use opframe::linalg::{SymOperator, Vector};
use opframe::oracle::oracle_curve;
use opframe::samplers::Sampler;

fn main() -> opframe::error::Result<()> {
    let s = Sampler::mixture(vec![
        (SymOperator::diagonal(&[0.9, 0.1])?, 0.5),
        (SymOperator::diagonal(&[0.2, 0.8])?, 0.5),
    ])?;
    let x = Vector::new(vec![3.0, 4.0])?;
    let c = s.coercivity_constant()?;
    let n = 30;
    let delta = 0.1 * x.norm();
    let plan = TrialPlan::new(n, 20_000, 42).with_thresholds(vec![delta]);
    let summary = run_trials(&s, &x, &plan)?;
    let exact: Vec<f64> = oracle_curve(&s, &x, n)?.points.iter().map(|p| p.exp_residual_sq).collect();

    for k in (0..=n).step_by(5) {
        println!(
            "n={k:>2}  mean {:.5e} ± {:.1e}  exact {:.5e}  bound {:.5e}",
            summary.residual_sq.mean[k],
            summary.residual_sq.stderr[k],
            exact[k],
            (1.0 - c).powi(k as i32) * x.norm_sq()
        );
    }
    println!("bound check pass: {}", check_mean_square_bound(&summary, c)?.pass);
    println!("oracle agreement pass: {}", compare_residuals(&summary, &exact).pass);
    let bc = borel_cantelli_diagnostic(&summary, delta)?;
    println!(
        "sum of P(|r_n| > {delta:.2}) = {:.4}, tail bound {:.4}",
        bc.partial_sums[n],
        bc.check_tail(x.norm_sq(), c)?.bound
    );
    let mut csv = Vec::new();
    summary.write_csv(&mut csv, Some(c), Some(delta))?;
    println!("csv: {} rows", csv.iter().filter(|&&b| b == b'\n').count() - 1);
    Ok(())
}
