//! Second moments and coercivity constants for each sampler family, exact
//! where available and by Monte Carlo otherwise.

use nalgebra::DMatrix;
use opframe::linalg::{SymOperator, Vector};
use opframe::rng::RngStream;
use opframe::samplers::Sampler;

fn main() -> opframe::error::Result<()> {
    let e = |i| Vector::basis(3, i);
    let samplers = vec![
        Sampler::deterministic(SymOperator::scaled_identity(3, 0.5))?,
        Sampler::coordinate_axes(3),
        Sampler::mixture(vec![
            (SymOperator::diagonal(&[1.0, 0.5, 0.0])?, 0.5),
            (SymOperator::diagonal(&[0.0, 0.5, 1.0])?, 0.5),
        ])?,
        Sampler::fusion(vec![(vec![e(0), e(1)], 0.5), (vec![e(2)], 0.25), (vec![e(0)], 0.25)])?,
        Sampler::kaczmarz(DMatrix::from_row_slice(4, 3, &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0]))?,
        Sampler::random_spectral(3, 0.2, 0.9)?,
    ];
    for s in &samplers {
        let est = s.estimate_coercivity_mc(20_000, RngStream::new(3, 0))?;
        match s.coercivity_constant() {
            Ok(c) => println!("{:<48} C = {c:.6}  (MC {:.6} ± {:.1e})", s.description(), est.estimate, est.stderr),
            Err(_) => println!("{:<48} C ≈ {:.6} ± {:.1e}", s.description(), est.estimate, est.stderr),
        }
    }
    Ok(())
}
