use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use opframe::dilation::{halmos_dilate, verify_dilation};
use opframe::iteration::{run_path, StoppingRule};
use opframe::kaczmarz::{error_process_equivalence, solve_rk, LinearSystem};
use opframe::linalg::{contraction_gap, extreme_eigenvalues, is_positive_contraction, spectral, SymOperator, Vector};
use opframe::mtx::parse_matrix_market;
use opframe::oracle::{expected_frame_energy, expected_residual_sq, TransferMap};
use opframe::random::{gaussian_vector, random_basis, random_positive_contraction, random_projection};
use opframe::rng::RngStream;
use opframe::samplers::{Sampler, SamplerSpec};

fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    RngStream::new(seed, 0).rng()
}

/// One sampler of each family, chosen by `variant`.
fn sampler_of(variant: u8, dim: usize, seed: u64) -> Sampler {
    let mut r = rng(seed);
    match variant % 5 {
        0 => Sampler::deterministic(random_positive_contraction(dim, &mut r)).unwrap(),
        1 => {
            let k = r.random_range(1..=3);
            Sampler::mixture((0..k).map(|_| (random_positive_contraction(dim, &mut r), 1.0 / k as f64)).collect()).unwrap()
        }
        2 => {
            let k = dim + 1;
            Sampler::fusion(
                (0..k)
                    .map(|_| {
                        let rank = r.random_range(1..=dim);
                        (random_basis(dim, rank, &mut r), 1.0 / k as f64)
                    })
                    .collect(),
            )
            .unwrap()
        }
        3 => Sampler::kaczmarz(DMatrix::from_fn(2 * dim, dim, |_, _| StandardNormal.sample(&mut r))).unwrap(),
        _ => {
            let lo = r.random_range(0.0..0.5);
            Sampler::random_spectral(dim, lo, r.random_range(lo..1.0)).unwrap()
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gap_nonnegative_and_zero_for_projections(seed in any::<u64>(), dim in 1usize..=8) {
        let mut r = rng(seed);
        let t = random_positive_contraction(dim, &mut r);
        let x = gaussian_vector(dim, &mut r);
        prop_assert!(contraction_gap(&t, &x).unwrap() >= -1e-9 * x.norm_sq());
        let rank = r.random_range(0..=dim);
        let p = random_projection(dim, rank, &mut r);
        prop_assert!(contraction_gap(&p, &x).unwrap().abs() <= 1e-10 * x.norm_sq());
    }

    #[test]
    fn spectral_reconstructs(seed in any::<u64>(), dim in 1usize..=10) {
        let mut r = rng(seed);
        let m = DMatrix::<f64>::from_fn(dim, dim, |_, _| StandardNormal.sample(&mut r));
        let t = SymOperator::new(&m + m.transpose()).unwrap();
        let s = spectral(&t).unwrap();
        prop_assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!((s.reconstruct().matrix() - t.matrix()).norm() <= 1e-10 * t.frobenius_norm().max(1.0));
        prop_assert!(s.orthonormality_defect() <= 1e-10);
    }

    #[test]
    fn dilation_certificates(seed in any::<u64>(), dim in 1usize..=12) {
        let t = random_positive_contraction(dim, &mut rng(seed));
        let rep = verify_dilation(&t, &halmos_dilate(&t).unwrap(), 1e-10);
        prop_assert!(rep.pass, "{rep:?}");
        prop_assert!(rep.isometry_residual <= 1e-12);
    }

    #[test]
    fn draws_are_positive_contractions(variant in 0u8..5, seed in any::<u64>(), dim in 1usize..=5) {
        let s = sampler_of(variant, dim, seed);
        let mut r = rng(seed ^ 1);
        for _ in 0..20 {
            let cert = is_positive_contraction(&s.sample(&mut r), 1e-9).unwrap();
            prop_assert!(cert.is_contraction, "{cert:?}");
        }
    }

    #[test]
    fn path_certificates_hold(variant in 0u8..5, seed in any::<u64>(), dim in 1usize..=5, steps in 1usize..40) {
        let s = sampler_of(variant, dim, seed);
        let x = gaussian_vector(dim, &mut rng(seed ^ 2));
        let p = run_path(&s, &x, StoppingRule::steps(steps), RngStream::new(seed, 3)).unwrap();
        let cert = p.certify();
        prop_assert_eq!(cert.violations, 0, "{:?}", cert);
        prop_assert!(p.frame_energy() + p.final_residual_norm().powi(2) <= x.norm_sq() * (1.0 + 1e-9));
        if s.is_projection_valued() {
            prop_assert!(p.parseval_defect() <= 1e-9 * x.norm_sq());
        }
    }

    #[test]
    fn paths_are_reproducible(variant in 0u8..5, seed in any::<u64>(), dim in 1usize..=4) {
        let s = sampler_of(variant, dim, seed);
        let x = gaussian_vector(dim, &mut rng(seed));
        let stream = RngStream::new(seed, 9);
        let a = run_path(&s, &x, StoppingRule::steps(15), stream).unwrap();
        let b = run_path(&s, &x, StoppingRule::steps(15), stream).unwrap();
        prop_assert_eq!(a.residual_norms, b.residual_norms);
        prop_assert_eq!(a.terms, b.terms);
    }

    #[test]
    fn oracle_decays_geometrically(variant in 0u8..4, seed in any::<u64>(), dim in 1usize..=4) {
        let s = sampler_of(variant, dim, seed);
        let c = s.coercivity_constant().unwrap().max(0.0);
        let x = gaussian_vector(dim, &mut rng(seed ^ 4));
        let x2 = x.norm_sq();
        let mut prev = f64::INFINITY;
        for n in 0..=50 {
            let e = expected_residual_sq(&s, &x, n).unwrap();
            prop_assert!(e <= (1.0 - c).powi(n as i32) * x2 + 1e-9 * x2.max(1.0));
            prop_assert!(e <= prev + 1e-12 * x2);
            prev = e;
        }
    }

    #[test]
    fn oracle_parseval_for_projections(variant in 2u8..4, seed in any::<u64>(), dim in 1usize..=4, n in 1usize..30) {
        let s = sampler_of(variant, dim, seed);
        let x = gaussian_vector(dim, &mut rng(seed ^ 5));
        let total = expected_frame_energy(&s, &x, n).unwrap() + expected_residual_sq(&s, &x, n).unwrap();
        prop_assert!((total - x.norm_sq()).abs() <= 1e-10 * x.norm_sq().max(1.0));
    }

    #[test]
    fn transfer_map_is_positive_and_monotone(variant in 0u8..4, seed in any::<u64>(), dim in 1usize..=4) {
        let map = TransferMap::from_sampler(&sampler_of(variant, dim, seed)).unwrap();
        let g = DMatrix::<f64>::from_fn(dim, dim, |_, _| StandardNormal.sample(&mut rng(seed ^ 6)));
        let psd = SymOperator::new(&g * g.transpose()).unwrap();
        prop_assert!(extreme_eigenvalues(&map.apply(&psd).unwrap()).unwrap().0 >= -1e-12 * psd.frobenius_norm().max(1.0));
        prop_assert!(map.contraction_excess().unwrap() <= 1e-10);
        let mut prev = f64::INFINITY;
        for n in 0..10 {
            let top = extreme_eigenvalues(&map.residual_gram(n)).unwrap().1;
            prop_assert!(top <= prev + 1e-12);
            prev = top;
        }
    }

    #[test]
    fn fusion_constant_is_lower_bound(seed in any::<u64>(), dim in 1usize..=5) {
        let s = sampler_of(2, dim, seed);
        let (a, b) = s.fusion_frame_bounds().unwrap();
        prop_assert!((s.coercivity_constant().unwrap() - a).abs() <= 1e-12);
        prop_assert!(a <= b + 1e-12 && b <= 1.0 + 1e-12);
    }

    #[test]
    fn kaczmarz_error_tracks_residual(seed in any::<u64>(), m in 1usize..12, d in 1usize..5) {
        let mut r = rng(seed);
        let a = DMatrix::from_fn(m, d, |_, _| StandardNormal.sample(&mut r));
        let xs = gaussian_vector(d, &mut r);
        let sys = LinearSystem::with_solution(a, xs.as_slice().to_vec()).unwrap();
        let x0 = gaussian_vector(d, &mut r);
        let e0 = (x0.as_dvector() - xs.as_dvector()).norm();
        let dev = error_process_equivalence(&sys, &x0, 60, RngStream::new(seed, 1)).unwrap();
        prop_assert!(dev <= 1e-10 * e0.max(1e-300));
        let h = solve_rk(&sys, &x0, 60, RngStream::new(seed, 1), false).unwrap();
        let errs = h.errors.unwrap();
        prop_assert!(errs.windows(2).all(|w| w[1] <= w[0] + 1e-12 * e0));
    }

    #[test]
    fn matrix_market_round_trip(seed in any::<u64>(), rows in 1usize..6, cols in 1usize..6) {
        let mut r = rng(seed);
        let m = DMatrix::<f64>::from_fn(rows, cols, |_, _| if r.random::<bool>() { StandardNormal.sample(&mut r) } else { 0.0 });
        let mut coord = format!("%%MatrixMarket matrix coordinate real general\n{rows} {cols} {}\n", m.iter().filter(|v| **v != 0.0).count());
        let mut array = format!("%%MatrixMarket matrix array real general\n{rows} {cols}\n");
        for j in 0..cols {
            for i in 0..rows {
                let v = m[(i, j)];
                array.push_str(&format!("{v:e}\n"));
                if v != 0.0 {
                    coord.push_str(&format!("{} {} {v:e}\n", i + 1, j + 1));
                }
            }
        }
        prop_assert_eq!(parse_matrix_market(&coord).unwrap(), m.clone());
        prop_assert_eq!(parse_matrix_market(&array).unwrap(), m);
    }

    #[test]
    fn sampler_spec_json_round_trip(variant in 0u8..5, seed in any::<u64>(), dim in 1usize..=4) {
        let spec = sampler_of(variant, dim, seed).spec().clone();
        let json = serde_json::to_string(&spec).unwrap();
        let back: SamplerSpec = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }

    #[test]
    fn vector_json_round_trip(entries in prop::collection::vec(-1e6f64..1e6, 1..8)) {
        let v = Vector::new(entries).unwrap();
        let back: Vector = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
        prop_assert_eq!(back, v);
    }
}
