//! Randomized Kaczmarz on a Matrix Market system: the error process is the
//! residual process for the row-projection sampler.

use std::path::Path;

use opframe::kaczmarz::{error_process_equivalence, rate, run_rk_trials, solve_rk, steps_for_accuracy, LinearSystem};
use opframe::linalg::Vector;
use opframe::mtx::read_matrix_market_file;
use opframe::rng::RngStream;

fn main() -> opframe::error::Result<()> {
    let a = read_matrix_market_file(Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/data/small_system.mtx"))?;
    let x_star = vec![1.0, -1.0, 2.0];
    let sys = LinearSystem::with_solution(a, x_star)?;
    let x0 = Vector::zeros(sys.dim());
    let r = rate(&sys)?;
    let steps = steps_for_accuracy(r.c, 1e-10)?;
    println!("{}x{} system, C = {:.5}, steps for 1e-10: {steps}", sys.matrix().nrows(), sys.dim(), r.c);

    let hist = solve_rk(&sys, &x0, steps, RngStream::new(9, 0), false)?;
    println!("final iterate {:?}", hist.final_iterate.as_slice());
    let dev = error_process_equivalence(&sys, &x0, steps, RngStream::new(9, 0))?;
    println!("max |(x_k - x*) - (-r_k)| = {dev:.2e}");

    let trials = run_rk_trials(&sys, &x0, steps, 500, 9, None)?;
    println!("fraction of 500 runs within 1e-4: {:.3}", trials.fraction_within(1e-4));
    Ok(())
}
