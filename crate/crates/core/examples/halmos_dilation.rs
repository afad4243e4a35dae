//! Dilating a positive contraction to a projection on twice the space.

use opframe::dilation::{halmos_dilate, verify_dilation};
use opframe::linalg::{contraction_gap, SymOperator};
use opframe::random::gaussian_vector;
use opframe::rng::RngStream;

fn main() -> opframe::error::Result<()> {
    let t = SymOperator::from_rows(&[vec![0.7, 0.2, 0.0], vec![0.2, 0.5, 0.1], vec![0.0, 0.1, 0.3]])?;
    let d = halmos_dilate(&t)?;
    println!("P =\n{:.4}", d.projection.matrix());
    let report = verify_dilation(&t, &d, 1e-10);
    println!("|W'W - I| = {:.2e}", report.isometry_residual);
    println!("|P^2 - P| = {:.2e}", report.idempotence_residual);
    println!("|W'PW - T| = {:.2e}", report.compression_residual);

    let x = gaussian_vector(3, &mut RngStream::new(1, 0).rng());
    let (a, b) = d.compression_slacks(&x);
    println!("gap {:.6}  compression slacks {:.6} + {:.6}", contraction_gap(&t, &x)?, a, b);
    println!("pythagoras defect {:.2e}", d.pythagoras_defect(&x));
    Ok(())
}
