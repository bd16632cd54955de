use proptest::prelude::*;

use emhd_core::checkpoint::{read_checkpoint, write_checkpoint};
use emhd_core::diagnostics::{logarithmic_mean, power_law_fit};
use emhd_core::init::{dilate, random_band, rescale_to_norm};
use emhd_core::lp::{lp_project, reconstruct, shell_range};
use emhd_core::model::{hall_nonlinearity, ModelParams};
use emhd_core::solver::heat_semigroup;
use emhd_core::spectral::{
    curl, divergence, forward_transform, fractional_laplacian, gradient, inverse_transform,
    leray_project, sobolev_norm,
};
use emhd_core::{Grid3, PhysicalVectorField, SpectralField, SpectralVectorField};

fn band(n: usize, seed: u64) -> SpectralVectorField {
    let f = random_band(Grid3::new(n).unwrap(), 1.0, (n / 3) as f64, seed).unwrap();
    f.scale(1.0 / f.l2_norm())
}

fn physical(n: usize, values: &[f64]) -> PhysicalVectorField {
    let g = Grid3::new(n).unwrap();
    let len = g.len();
    let comp = |c: usize| (0..len).map(|i| values[(c * len + i) % values.len()] * ((i * (c + 3)) as f64).sin()).collect();
    PhysicalVectorField::from_components(g, [comp(0), comp(1), comp(2)]).unwrap()
}

fn dist(a: &SpectralVectorField, b: &SpectralVectorField) -> f64 {
    a.try_sub(b).unwrap().l2_norm()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transform_round_trip_and_parseval(n in prop::sample::select(vec![4usize, 6, 8]), values in prop::collection::vec(-5.0f64..5.0, 1..40)) {
        let f = physical(n, &values);
        let spec = forward_transform(&f);
        prop_assert!((spec.l2_norm() - f.l2_norm()).abs() <= 1e-12 * (1.0 + f.l2_norm()));
        let back = inverse_transform(&spec).unwrap();
        prop_assert!(back.try_sub(&f).unwrap().max_abs() <= 1e-12 * (1.0 + f.max_abs()));
    }

    #[test]
    fn vector_calculus_identities(seed in any::<u64>()) {
        let f = band(8, seed);
        prop_assert!(divergence(&curl(&f)).l2_norm() < 1e-12);
        prop_assert!(curl(&gradient(&f.component(0))).l2_norm() < 1e-12);
        let p = leray_project(&f);
        prop_assert!(divergence(&p).l2_norm() < 1e-12);
        prop_assert!(dist(&leray_project(&p), &p) < 1e-14);
    }

    #[test]
    fn fractional_powers_compose(seed in any::<u64>(), a in -1.5f64..1.5, b in -1.5f64..1.5) {
        let f = band(8, seed);
        let ab = fractional_laplacian(&fractional_laplacian(&f, a).unwrap(), b).unwrap();
        let direct = fractional_laplacian(&f, a + b).unwrap();
        prop_assert!(dist(&ab, &direct) <= 1e-12 * direct.l2_norm().max(1.0));
    }

    #[test]
    fn sobolev_norm_is_homogeneous(seed in any::<u64>(), sigma in -1.0f64..3.0, c in -10.0f64..10.0) {
        let f = band(8, seed);
        let lhs = sobolev_norm(&f.scale(c), sigma).unwrap();
        let rhs = c.abs() * sobolev_norm(&f, sigma).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
    }

    #[test]
    fn littlewood_paley_blocks_sum_and_are_orthogonal_beyond_neighbours(seed in any::<u64>()) {
        let f = band(16, seed);
        prop_assert!(dist(&reconstruct(&f), &f) < 1e-12);
        let (lo, hi) = shell_range(f.grid());
        for j in lo..=hi {
            for k in (j + 2)..=hi {
                prop_assert!(lp_project(&f, j).inner(&lp_project(&f, k)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn hall_term_is_solenoidal_and_cancels(seed in any::<u64>(), s in -0.45f64..0.45, kappa in 1.6f64..2.9) {
        let b = band(8, seed);
        let p = ModelParams::new(s, kappa).unwrap();
        let h = hall_nonlinearity(&b, &b, &p).unwrap();
        prop_assert!(divergence(&h).l2_norm() <= 1e-12 * h.l2_norm().max(1.0));
        let t = fractional_laplacian(&b, -s).unwrap();
        prop_assert!(h.inner(&t).abs() <= 1e-12 * h.l2_norm() * t.l2_norm());
    }

    #[test]
    fn heat_semigroup_contracts_and_composes(seed in any::<u64>(), t1 in 0.0f64..0.5, t2 in 0.0f64..0.5) {
        let b = band(8, seed);
        let p = ModelParams::new(0.0, 2.2).unwrap();
        let a = heat_semigroup(&b, t1, &p);
        prop_assert!(a.l2_norm() <= b.l2_norm() * (1.0 + 1e-14));
        let two = heat_semigroup(&a, t2, &p);
        let one = heat_semigroup(&b, t1 + t2, &p);
        prop_assert!(dist(&two, &one) < 1e-14);
    }

    #[test]
    fn dilation_and_rescaling(seed in any::<u64>(), sigma in -0.5f64..2.0, target in 1e-6f64..10.0) {
        let b = band(8, seed);
        let d = dilate(&b, 2).unwrap();
        prop_assert_eq!(d.grid().n(), 16);
        prop_assert!((d.l2_norm() - b.l2_norm()).abs() < 1e-13);
        let r = rescale_to_norm(&b, sigma, target).unwrap();
        prop_assert!((sobolev_norm(&r, sigma).unwrap() - target).abs() <= 1e-12 * target);
    }

    #[test]
    fn checkpoint_round_trip(seed in any::<u64>(), s in -0.5f64..0.5, kappa in 0.5f64..3.0, t in 0.0f64..100.0) {
        let b = band(8, seed);
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &b, s, kappa, t).unwrap();
        let c = read_checkpoint(buf.as_slice()).unwrap();
        prop_assert_eq!(c.field, b);
        prop_assert_eq!((c.s, c.kappa, c.time), (s, kappa, t));
    }

    #[test]
    fn logarithmic_mean_lies_between(a in 1e-8f64..1e8, b in 1e-8f64..1e8) {
        let m = logarithmic_mean(a, b);
        prop_assert!((m - logarithmic_mean(b, a)).abs() <= 1e-12 * m);
        prop_assert!(m >= a.min(b) * (1.0 - 1e-12) && m <= a.max(b) * (1.0 + 1e-12));
        prop_assert!(m <= 0.5 * (a + b) * (1.0 + 1e-12) && m >= (a * b).sqrt() * (1.0 - 1e-12));
    }

    #[test]
    fn power_law_fit_recovers_exponents(slope in -3.0f64..3.0, c in 0.1f64..10.0) {
        let t: Vec<f64> = (0..10).map(|i| 0.01 * 1.6f64.powi(i)).collect();
        let v: Vec<f64> = t.iter().map(|t| c * t.powf(slope)).collect();
        let (s, ln_c, r2) = power_law_fit(&t, &v).unwrap();
        prop_assert!((s - slope).abs() < 1e-10);
        prop_assert!((ln_c - c.ln()).abs() < 1e-9);
        prop_assert!(r2 > 1.0 - 1e-10);
    }
}
