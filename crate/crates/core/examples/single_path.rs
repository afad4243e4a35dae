//! One realization of r_k = (I - Ψ_k) r_{k-1} with its certificates.

use opframe::iteration::{run_path, StoppingRule};
use opframe::linalg::Vector;
use opframe::rng::RngStream;
use opframe::samplers::Sampler;

fn main() -> opframe::error::Result<()> {
    let s = Sampler::random_spectral(4, 0.1, 0.6)?;
    let x = Vector::new(vec![1.0, -2.0, 0.5, 3.0])?;
    let path = run_path(&s, &x, StoppingRule::steps(25), RngStream::for_trial(11, 0, 0))?;
    for (k, r) in path.residual_norms.iter().enumerate().step_by(5) {
        println!("k={k:>3}  |r_k| = {r:.6e}");
    }
    let cert = path.certify();
    println!("violations: {}", cert.violations);
    println!(
        "energy {:.6} + residual {:.6} <= |x|^2 = {:.6}",
        path.frame_energy(),
        path.final_residual_norm().powi(2),
        x.norm_sq()
    );
    Ok(())
}
