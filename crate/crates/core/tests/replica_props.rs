use pinning::homogeneous::free_energy;
use pinning::intersection::{deconvolve, horizon_for, square_renewal};
use pinning::laws::{geometric, make_power_law, tilt, InterArrivalLaw, SlowVariation};
use pinning::renewal::{renewal_function, renewal_limit};
use pinning::replica::*;

fn a03(n: usize) -> InterArrivalLaw {
    make_power_law(0.3, SlowVariation::constant(1.0), n, 1e-8).unwrap()
}

fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| (a.ln() + (b / a).ln() * i as f64 / (n - 1) as f64).exp().min(b)).collect()
}

#[test]
fn sandwich_on_grid() {
    let law = a03(1024);
    let consts = paper_constants(&law, 0.1, 0.5, GridSpec::default()).unwrap();
    assert!(consts.dc >= consts.dhat0 && consts.dhat0 > 1.0);
    assert!(((-consts.lambda0).exp_m1().abs() - 0.5 / consts.dc).abs() < 1e-14);
    assert!(consts.b0_eps > 0.0);
    for b in logspace(1e-3, consts.b0_eps, 5) {
        let n = horizon_for(b);
        let lb = tilt(&law.with_cache(n), b).unwrap();
        let u = renewal_function(&lb, n, true).unwrap();
        for lambda in logspace(1e-3, consts.lambda0, 5) {
            let s = replica_free_energy_renewal(&u, lambda, 1e-14).unwrap();
            let bounds = replica_bounds(&s, &lb, &consts, 0.5).unwrap();
            assert!(bounds.within, "b={b} λ={lambda}: {} not in [{}, {}]", s.big_b, bounds.lower, bounds.upper);
        }
    }
    let lb = tilt(&law, 0.05).unwrap();
    let s = replica_free_energy_renewal(&renewal_function(&lb.with_cache(1024), 1024, true).unwrap(), 2.0 * consts.lambda0, 1e-12).unwrap();
    assert!(replica_bounds(&s, &lb, &consts, 0.5).is_err());
}

#[test]
fn first_order_limit() {
    let path: Vec<(f64, f64)> = (4..=8).map(|k| (2f64.powi(-k), 2f64.powi(-k))).collect();
    let pts = first_order_check(&a03(1024), &path).unwrap();
    let last = pts.last().unwrap();
    assert!((last.ratio - 1.0).abs() < 0.1, "{pts:?}");
    for w in pts.windows(2) {
        assert!((w[1].ratio - 1.0).abs() <= (w[0].ratio - 1.0).abs(), "{pts:?}");
    }
}

#[test]
fn finite_n_gap_halves() {
    let g = geometric(0.5).unwrap().with_cache(4000);
    let u = renewal_function(&g, 4000, false).unwrap();
    let kb = deconvolve(&square_renewal(&u), 1e-10).unwrap();
    let g1 = finite_n_replica(&kb, 0.1, 1000).unwrap().b_gap;
    let g2 = finite_n_replica(&kb, 0.1, 2000).unwrap().b_gap;
    let g4 = finite_n_replica(&kb, 0.1, 4000).unwrap().b_gap;
    assert!((g1 / g2 - 2.0).abs() < 0.05 && (g2 / g4 - 2.0).abs() < 0.05, "{g1} {g2} {g4}");
}

#[test]
fn tilt_at_free_energy_gives_derivative() {
    let law = a03(4096);
    for h in [0.05, 0.5] {
        let s = free_energy(&law, h, 1e-15).unwrap();
        let u = renewal_limit(&tilt(&law, s.f).unwrap());
        assert!((u / s.df - 1.0).abs() < 1e-10);
    }
}
