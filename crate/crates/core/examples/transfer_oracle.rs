//! Exact expected residuals through the transfer map, checked against full
//! path enumeration for a small discrete sampler.

use opframe::linalg::Vector;
use opframe::oracle::{brute_force_paths, oracle_curve, steps_to_residual};
use opframe::samplers::Sampler;

fn main() -> opframe::error::Result<()> {
    let s = Sampler::coordinate_axes(3);
    let x = Vector::new(vec![1.0, 2.0, 2.0])?;
    let curve = oracle_curve(&s, &x, 8)?;
    println!("C = {:.4}", curve.coercivity);
    println!("{:>3} {:>12} {:>12} {:>12} {:>12}", "n", "E|r_n|^2", "enumerated", "bound", "E energy");
    for p in &curve.points {
        let (brute, _) = brute_force_paths(&s, &x, p.step)?;
        println!(
            "{:>3} {:>12.6} {:>12.6} {:>12.6} {:>12.6}",
            p.step, p.exp_residual_sq, brute, p.bound, p.exp_frame_energy
        );
    }
    if let Some((n, energy, res)) = steps_to_residual(&s, &x, 1e-6, 1000)? {
        println!("E|r_n|^2 <= 1e-6 first at n = {n} (energy {energy:.8}, residual {res:.2e})");
    }
    Ok(())
}
