//! A weighted fusion frame of lines in R^2: C equals the lower frame bound,
//! projections give Parseval on every path, and Σ t_k reconstructs x.

use opframe::analysis::verify_operator_identity;
use opframe::iteration::{run_path, StoppingRule};
use opframe::linalg::Vector;
use opframe::oracle::TransferMap;
use opframe::rng::RngStream;
use opframe::samplers::Sampler;

fn main() -> opframe::error::Result<()> {
    let line = |deg: f64| vec![Vector::new(vec![deg.to_radians().cos(), deg.to_radians().sin()]).unwrap()];
    let s = Sampler::fusion(vec![(line(0.0), 1.0 / 3.0), (line(60.0), 1.0 / 3.0), (line(120.0), 1.0 / 3.0)])?;
    let (a, b) = s.fusion_frame_bounds()?;
    println!("frame bounds A = {a:.6}, B = {b:.6}, C = {:.6}", s.coercivity_constant()?);

    let x = Vector::new(vec![0.3, -1.2])?;
    let path = run_path(&s, &x, StoppingRule::steps(40), RngStream::new(5, 0))?;
    println!("parseval defect after 40 steps: {:.2e}", path.parseval_defect());
    let err = x.combine(1.0, &path.reconstruction, -1.0)?.norm();
    println!("|x - Σ t_k| = {err:.3e}");

    let map = TransferMap::from_sampler(&s)?;
    println!("E[Σ_(k<=40) T_k] =\n{:.8}", map.frame_gram(40).matrix());
    let report = verify_operator_identity(&s, 20, 2000, 5, None)?;
    println!("operator identity on basis vectors: pass = {}, max error {:.2e}", report.pass, report.max_error);
    Ok(())
}
