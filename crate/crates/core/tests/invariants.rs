use pinning::homogeneous::free_energy;
use pinning::intersection::{deconvolve, square_renewal};
use pinning::laws::{geometric, make_power_law, tilt, SlowVariation};
use pinning::quenched::{estimate_f_and_mu, largest_gap};
use pinning::renewal::renewal_function;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn renewal_is_a_probability(alpha in 0.1f64..0.95, n in 64usize..600) {
        let law = make_power_law(alpha, SlowVariation::constant(1.0), n, 1e-8).unwrap();
        let direct = renewal_function(&law, n, false).unwrap();
        let fast = renewal_function(&law, n, true).unwrap();
        prop_assert_eq!(direct.u[0], 1.0);
        for (a, b) in direct.u.iter().zip(&fast.u) {
            prop_assert!((0.0..=1.0).contains(a));
            prop_assert!((a - b).abs() < 1e-12);
        }
        prop_assert!(direct.residuals().unwrap().iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn tilting_keeps_mass(alpha in 0.1f64..0.95, b in 1e-3f64..2.0) {
        let law = make_power_law(alpha, SlowVariation::constant(1.0), 256, 1e-8).unwrap();
        let t = tilt(&law, b).unwrap();
        prop_assert!(t.cb() > 1.0);
        prop_assert!((t.mass() - 1.0).abs() < 1e-10);
        prop_assert!(t.k(1) > law.k(1));
    }

    #[test]
    fn free_energy_between_zero_and_h(alpha in 0.1f64..0.95, h in -1.0f64..2.0) {
        let law = make_power_law(alpha, SlowVariation::constant(1.0), 256, 1e-8).unwrap();
        let s = free_energy(&law, h, 1e-13).unwrap();
        prop_assert!(s.f >= 0.0 && s.f <= h.max(0.0));
        prop_assert!(s.df >= 0.0 && s.df <= 1.0);
    }

    #[test]
    fn geometric_intersection_is_geometric(p in 0.05f64..0.95, n in 10usize..120) {
        let g = geometric(p).unwrap().with_cache(n);
        let u = renewal_function(&g, n, false).unwrap();
        let kk = deconvolve(&square_renewal(&u), 1e-12).unwrap();
        let q = (1.0 - p) * (1.0 - p);
        for m in 1..=n {
            let exact = q * (1.0 - q).powi(m as i32 - 1);
            prop_assert!((kk.kk[m] / exact - 1.0).abs() < 1e-10, "m={}", m);
        }
    }

    #[test]
    fn largest_gap_bounded(mut pts in proptest::collection::btree_set(1usize..500, 0..40)) {
        pts.insert(0);
        pts.insert(500);
        let v: Vec<usize> = pts.into_iter().collect();
        let g = largest_gap(&v);
        prop_assert!(g <= 499);
        prop_assert!(v.windows(2).any(|w| (w[1] - w[0]).saturating_sub(2) == g));
    }

    #[test]
    fn jensen_chain(beta in 0.0f64..1.5, h in -1.0f64..0.5, seed in 0u64..1000) {
        let law = make_power_law(0.3, SlowVariation::constant(1.0), 128, 1e-8).unwrap();
        let run = estimate_f_and_mu(&law, beta, h, 128, 6, seed).unwrap();
        prop_assert!(run.mu_hat <= run.f_hat && run.f_hat <= run.annealed_hat);
    }
}
