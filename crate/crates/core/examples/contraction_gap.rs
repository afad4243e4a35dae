//! The gap ‖x‖² - ‖Tx‖² - ‖x - Tx‖² = 2⟨(T - T²)x, x⟩ for random positive
//! contractions, and its vanishing on projections.

use opframe::linalg::contraction_gap;
use opframe::random::{gaussian_vector, random_positive_contraction, random_projection};
use opframe::rng::RngStream;

fn main() -> opframe::error::Result<()> {
    let mut rng = RngStream::new(7, 0).rng();
    println!("{:>4} {:>14} {:>14}", "dim", "min gap/|x|^2", "proj gap/|x|^2");
    for dim in [1, 2, 4, 8, 16] {
        let mut min_gap = f64::INFINITY;
        let mut max_proj: f64 = 0.0;
        for rank in 0..=dim.min(5) {
            let t = random_positive_contraction(dim, &mut rng);
            let p = random_projection(dim, rank, &mut rng);
            let x = gaussian_vector(dim, &mut rng);
            min_gap = min_gap.min(contraction_gap(&t, &x)? / x.norm_sq());
            max_proj = max_proj.max(contraction_gap(&p, &x)?.abs() / x.norm_sq());
        }
        println!("{dim:>4} {min_gap:>14.3e} {max_proj:>14.3e}");
    }
    Ok(())
}
