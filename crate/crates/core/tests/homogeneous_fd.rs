use pinning::homogeneous::{free_energy, free_energy_derivative, homogeneous_log_partition};
use pinning::laws::{geometric, make_power_law, SlowVariation};
use pinning::renewal::{renewal_function, renewal_limit};

#[test]
fn derivative_three_ways() {
    let law = make_power_law(0.3, SlowVariation::constant(1.0), 4096, 1e-8).unwrap();
    let step = 1e-5;
    for h in [0.01, 0.1, 1.0] {
        let s = free_energy(&law, h, 1e-15).unwrap();
        let implicit = free_energy_derivative(&s).unwrap();
        let limit = renewal_limit(&s.tilted);
        let fp = free_energy(&law, h + step, 1e-15).unwrap().f;
        let fm = free_energy(&law, h - step, 1e-15).unwrap().f;
        let fd = (fp - fm) / (2.0 * step);
        for (a, b) in [(implicit, limit), (implicit, fd), (limit, fd)] {
            assert!((a / b - 1.0).abs() < 1e-6, "h={h}: {a} vs {b}");
        }
    }
}

#[test]
fn geometric_free_energy_closed_form() {
    for p in [0.2, 0.5, 0.8] {
        let g = geometric(p).unwrap();
        for h in [0.05, 0.5, 2.0] {
            let s = free_energy(&g, h, 1e-15).unwrap();
            let exact = (p + (1.0 - p) * f64::exp(h)).ln();
            assert!((s.f - exact).abs() < 1e-12, "p={p} h={h}");
        }
    }
}

#[test]
fn partition_identity_large_n() {
    let n = 10_000;
    let laws = [
        geometric(0.5).unwrap().with_cache(n),
        make_power_law(0.3, SlowVariation::constant(1.0), n, 1e-8).unwrap(),
        make_power_law(0.5, SlowVariation::log_power(1.0), n, 1e-8).unwrap(),
    ];
    for law in &laws {
        for h in [0.1, 1.0] {
            let s = free_energy(law, h, 1e-15).unwrap();
            let u = renewal_function(&s.tilted, n, false).unwrap();
            let lz = homogeneous_log_partition(law, h, n);
            let gap = (lz - s.f * n as f64 - u.u[n].ln()).abs();
            assert!(gap < 1e-9, "h={h}: {gap:e}");
        }
    }
}
