//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Runs with `cargo test -p pinning-cli --test acceptance`; the Monte Carlo criteria take a few
//! minutes on a multi-core machine.

use pinning::homogeneous::{free_energy, free_energy_derivative, homogeneous_log_partition};
use pinning::intersection::{deconvolve, horizon_for, plancherel_check, prop57_check, prop58_rate, square_renewal};
use pinning::laws::{geometric, make_power_law, tilt, InterArrivalLaw, SlowVariation};
use pinning::quenched::{
    annealed_critical_point, estimate_f_and_mu, interpolation_bound_check, prop26_experiment, theorem23_experiment,
};
use pinning::renewal::{garsia_lamperti_ratio, renewal_function, renewal_limit};
use pinning::replica::{
    first_order_check, paper_constants, replica_bounds, replica_free_energy, replica_free_energy_renewal, GridSpec,
};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

type Check = Result<String, String>;

fn power(alpha: f64, n: usize) -> InterArrivalLaw {
    make_power_law(alpha, SlowVariation::constant(1.0), n, 1e-8).unwrap()
}

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// `a c^{n−1} / 2^{k n}` for a dyadic `q = a/2^k`, `1 − q = c/2^k`, rounded once while the
/// numerator fits in 128 bits.
fn dyadic_geometric(a: u128, c: u128, k: i32, n: usize) -> f64 {
    let mut num = a;
    for _ in 1..n {
        match num.checked_mul(c) {
            Some(v) => num = v,
            None => {
                let q = a as f64 / 2f64.powi(k);
                return q * (c as f64 / 2f64.powi(k)).powi(n as i32 - 1);
            }
        }
    }
    num as f64 * 2f64.powi(-k * n as i32)
}

fn c1_oracles() -> Check {
    // geometric K(n) = (1 − p) p^{n−1}; q = (1 − p)² is dyadic for these p
    let cases: [(f64, u128, u128, i32); 3] = [(0.5, 1, 3, 2), (0.25, 9, 7, 4), (0.75, 1, 15, 4)];
    let (mut ef, mut eu, mut ek, mut eb) = (0f64, 0f64, 0f64, 0f64);
    let n = 2000;
    for (p, a, c, k) in cases {
        let g = geometric(p).unwrap().with_cache(n);
        for h in [0.1, 1.0, 3.0] {
            let f = free_energy(&g, h, 1e-15).unwrap().f;
            ef = ef.max((f - (p + (1.0 - p) * f64::exp(h)).ln()).abs());
        }
        let u = renewal_function(&g, n, false).unwrap();
        eu = u.u[1..].iter().fold(eu, |m, v| m.max((v - (1.0 - p)).abs()));
        let kb = deconvolve(&square_renewal(&u), 1e-12).unwrap();
        for m in 1..=n {
            ek = ek.max((kb.kk[m] - dyadic_geometric(a, c, k, m)).abs());
        }
        let q = (1.0 - p) * (1.0 - p);
        for lambda in [0.01, 0.1, 0.5] {
            let s = replica_free_energy(&kb, lambda, 1e-15).unwrap();
            eb = eb.max((s.big_b - (q * f64::exp(lambda) + 1.0 - q).ln()).abs());
        }
    }
    ensure(
        ef < 1e-12 && eu < 1e-12 && ek < 1e-18 && eb < 1e-10,
        format!("max errors F {ef:.1e}, u {eu:.1e}, KK {ek:.1e}, B {eb:.1e}"),
    )
}

fn c2_partition_identity() -> Check {
    let n = 10_000;
    let laws = [
        ("geometric", geometric(0.5).unwrap().with_cache(n)),
        ("alpha=0.3", power(0.3, n)),
        ("alpha=0.5,gamma=1", make_power_law(0.5, SlowVariation::log_power(1.0), n, 1e-8).unwrap()),
    ];
    let mut worst = 0f64;
    for (_, law) in &laws {
        for h in [0.1, 1.0] {
            let s = free_energy(law, h, 1e-15).unwrap();
            let u = renewal_function(&s.tilted, n, false).unwrap();
            let lz = homogeneous_log_partition(law, h, n);
            worst = worst.max((lz - s.f * n as f64 - u.u[n].ln()).abs());
        }
    }
    ensure(worst < 1e-9, format!("max |log Z − FN − log u_F(N)| = {worst:.2e} at N = {n}"))
}

fn c3_derivative() -> Check {
    let law = power(0.3, 4096);
    let step = 1e-5;
    let mut worst = 0f64;
    for h in [0.01, 0.1, 1.0] {
        let s = free_energy(&law, h, 1e-15).unwrap();
        let d = free_energy_derivative(&s).unwrap();
        let l = renewal_limit(&s.tilted);
        let f = (free_energy(&law, h + step, 1e-15).unwrap().f - free_energy(&law, h - step, 1e-15).unwrap().f) / (2.0 * step);
        for (a, b) in [(d, l), (d, f), (l, f)] {
            worst = worst.max((a / b - 1.0).abs());
        }
    }
    ensure(worst < 1e-6, format!("worst pairwise relative gap {worst:.2e}"))
}

fn c4_garsia_lamperti() -> Check {
    let n = 100_000;
    let law = power(0.3, n);
    let u = renewal_function(&law, n, true).unwrap();
    let r = garsia_lamperti_ratio(&u, &law).unwrap();
    let last = r.last().unwrap();
    ensure(last.0 == n && (last.1 - 1.0).abs() < 0.1, format!("ratio {:.5} at n = {}", last.1, last.0))
}

fn c5_prop57() -> Check {
    let n = 10_000;
    let law = power(0.3, n);
    let u0 = renewal_function(&law, n, true).unwrap();
    let k0 = deconvolve(&square_renewal(&u0), 1e-9).unwrap();
    let r = prop57_check(&k0, &u0).unwrap();
    let in_range: Vec<f64> = r.ratios.iter().filter(|x| x.0 >= 1000).map(|x| x.1).collect();
    let worst = in_range.iter().fold(0f64, |m, v| m.max((v - 1.0).abs()));
    ensure(
        r.passed && r.c > 0.0 && r.c < 1.0 && worst < 0.1 && !in_range.is_empty(),
        format!("c = {:.6}, worst |ratio − 1| on [1e3, 1e4] = {worst:.4} ({} bits)", r.c, k0.precision_bits),
    )
}

fn c6_prop58() -> Check {
    let n = 600;
    let lb = tilt(&power(0.3, n), 0.5).unwrap();
    let u = renewal_function(&lb, n, false).unwrap();
    let kb = deconvolve(&square_renewal(&u), 1e-9).unwrap();
    let p = prop58_rate(&lb, &u, &kb).unwrap();
    ensure(p.agreement < 0.01, format!("fitted rate {:.9} vs log r {:.9}, relative gap {:.2e}", p.fitted_rate, p.log_r, p.agreement))
}

fn c7_plancherel() -> Check {
    let mut parts = Vec::new();
    let mut ok = true;
    for alpha in [0.3, 0.4] {
        let n = 10_000;
        let law = power(alpha, n);
        let u0 = renewal_function(&law, n, true).unwrap();
        let r = plancherel_check(&u0, &law).unwrap();
        ok &= r.passed && r.gap < 0.05;
        parts.push(format!("alpha {alpha}: Σu² {:.6} vs ∫ {:.6}, gap {:.2e}", r.sum_sq, r.integral, r.gap));
    }
    ensure(ok, parts.join("; "))
}

fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| (a.ln() + (b / a).ln() * i as f64 / (n - 1) as f64).exp().min(b)).collect()
}

fn c8_sandwich() -> Check {
    let law = power(0.3, 1024);
    let k = paper_constants(&law, 0.1, 0.5, GridSpec::default()).unwrap();
    let mut inside = 0;
    let mut worst_margin = f64::INFINITY;
    for b in logspace(1e-3, k.b0_eps, 5) {
        let n = horizon_for(b);
        let lb = tilt(&law.with_cache(n), b).unwrap();
        let u = renewal_function(&lb, n, true).unwrap();
        for l in logspace(1e-3, k.lambda0, 5) {
            let s = replica_free_energy_renewal(&u, l, 1e-14).unwrap();
            let r = replica_bounds(&s, &lb, &k, 0.5).unwrap();
            inside += usize::from(r.within);
            worst_margin = worst_margin.min(((s.big_b - r.lower) / r.lower).min((r.upper - s.big_b) / r.upper));
        }
    }
    ensure(
        inside == 25,
        format!("{inside}/25 inside; Dc {:.4}, λ0 {:.4}, c1 {:.3}, b0 {:.3}; tightest relative margin {worst_margin:.2e}", k.dc, k.lambda0, k.c1, k.b0_eps),
    )
}

fn c9_first_order() -> Check {
    let path: Vec<(f64, f64)> = (4..=8).map(|k| (2f64.powi(-k), 2f64.powi(-k))).collect();
    let pts = first_order_check(&power(0.3, 1024), &path).unwrap();
    let last = pts.last().unwrap();
    ensure((last.ratio - 1.0).abs() < 0.1, format!("B/(λ u_b(∞)²) = {:.5} at b = λ = 2^-8", last.ratio))
}

fn c10_jensen(extra: &[(f64, f64, f64)]) -> Check {
    let law = power(0.3, 1024);
    let mut runs = 0;
    let mut broken = Vec::new();
    for beta in [0.2, 0.5, 1.0] {
        for h in [-0.5, annealed_critical_point(beta), 0.2] {
            for n in [256, 1024] {
                let r = estimate_f_and_mu(&law, beta, h, n, 64, 7).map_err(|e| format!("β {beta} h {h} N {n}: {e}"))?;
                runs += 1;
                if !(r.mu_hat <= r.f_hat && r.f_hat <= r.annealed_hat) {
                    broken.push(format!("β {beta} h {h} N {n}"));
                }
            }
        }
    }
    for &(mu, f, a) in extra {
        runs += 1;
        if !(mu <= f && f <= a) {
            broken.push(format!("desk-scale run {mu} {f} {a}"));
        }
    }
    ensure(broken.is_empty(), format!("{runs} runs, {} violations {}", broken.len(), broken.join(", ")))
}

fn c11_interpolation() -> Check {
    let n = 1 << 14;
    let rep = interpolation_bound_check(&power(0.3, n), 0.2, 0.2, n, 1000, 1, &[1.0, 4.0]).unwrap();
    let rows: Vec<String> = rep.rows.iter().map(|r| format!("M={}: rhs {:.4e}, margin {:.1} SE", r.m, r.rhs, r.margin_sigmas)).collect();
    ensure(
        rep.rows.iter().all(|r| r.holds),
        format!("lhs {:.4e} ± {:.1e}; {}", rep.lhs, rep.lhs_se, rows.join("; ")),
    )
}

fn c12_sandwich(jensen: &mut Vec<(f64, f64, f64)>) -> Check {
    let n = 1 << 14;
    let rows = theorem23_experiment(&power(0.3, n), 0.2, &[0.2], n, 1000, 1, 0.5, false).unwrap();
    let r = &rows[0];
    jensen.push((r.mu_hat, r.f_hat, r.annealed_hat));
    ensure(
        r.sandwich_ok,
        format!(
            "mu_hat {:.6e} ± {:.1e} in [{:.6e}, F_hat {:.6e}]; signal-below-noise: {}",
            r.mu_hat, r.mu_se, r.lower_mu, r.f_hat, r.signal_below_noise
        ),
    )
}

fn c13_prop26() -> Check {
    let ns: Vec<usize> = (10..=15).map(|k| 1 << k).collect();
    let rep = prop26_experiment(&power(0.3, 1 << 15), 0.2, &ns, 256, 1).unwrap();
    let ng: Vec<String> = rep.rows.iter().map(|r| format!("{:.3}", r.n_gap)).collect();
    ensure(
        rep.bounded,
        format!(
            "N·gap [{}]; top-octave growth {:.4} vs 3 SE {:.4}; increasing at every step: {}",
            ng.join(", "),
            rep.top_growth,
            3.0 * rep.top_growth_se,
            rep.monotone
        ),
    )
}

fn c14_determinism() -> Check {
    let bin = env!("CARGO_BIN_EXE_pinning");
    let base = std::env::temp_dir().join(format!("pinning-acceptance-{}", std::process::id()));
    let run = |tag: &str, threads: &str, args: &[&str]| -> Result<Vec<u8>, String> {
        let dir = base.join(tag);
        let st = Command::new(bin)
            .args(["--threads", threads, "--seed", "2024", "--out"])
            .arg(&dir)
            .args(args)
            .status()
            .map_err(|e| e.to_string())?;
        if !st.success() {
            return Err(format!("{args:?} exited with {st}"));
        }
        std::fs::read(dir.join(format!("{}.csv", args[0]))).map_err(|e| e.to_string())
    };
    let q = ["quench", "--law", "power:alpha=0.3", "-p", "beta=0.3", "-p", "h=-0.03", "-p", "n=2048", "-p", "samples=64"];
    let fe = ["fe", "--law", "power:alpha=0.3", "-p", "h=[0.01,0.1,1]"];
    let a = run("q1a", "1", &q)?;
    let b = run("q1b", "1", &q)?;
    let c = run("q8a", "8", &q)?;
    let d = run("q8b", "8", &q)?;
    let e = run("fe1", "1", &fe)?;
    let f = run("fe8", "8", &fe)?;
    let _ = std::fs::remove_dir_all(&base);
    let same = a == b && b == c && c == d && e == f;
    ensure(same && !a.contains(&b'\r'), format!("quench CSV {} bytes identical across 2 runs × threads {{1, 8}}: {same}", a.len()))
}

fn main() {
    let mut jensen_extra = Vec::new();
    let mut results: Vec<(u32, &str, Check, f64)> = Vec::new();
    let mut go = |id: u32, name: &'static str, f: &mut dyn FnMut() -> Check| {
        let t = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = t.elapsed().as_secs_f64();
        let (mark, detail) = match &r {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("criterion {id:>2} [{mark}] {name}: {detail} ({secs:.1} s)");
        results.push((id, name, r, secs));
    };
    go(1, "geometric oracle chain", &mut c1_oracles);
    go(2, "log Z = FN + log u_F(N)", &mut c2_partition_identity);
    go(3, "derivative: implicit, renewal limit, finite difference", &mut c3_derivative);
    go(4, "Garsia-Lamperti ratio", &mut c4_garsia_lamperti);
    go(5, "intersection kernel vs c u0(n)^2", &mut c5_prop57);
    go(6, "decay rate of the tilted intersection kernel", &mut c6_prop58);
    go(7, "Plancherel cross-check", &mut c7_plancherel);
    go(8, "replica sandwich on a 5x5 grid", &mut c8_sandwich);
    go(9, "first-order limit of B", &mut c9_first_order);
    go(11, "interpolation bound, M in {1, 4}", &mut c11_interpolation);
    go(12, "mu_hat sandwich at desk scale", &mut || c12_sandwich(&mut jensen_extra));
    let extra = jensen_extra.clone();
    go(10, "Jensen chain mu_hat <= F_hat <= annealed", &mut || c10_jensen(&extra));
    go(13, "no growth of N·gap at the annealed critical point", &mut c13_prop26);
    go(14, "byte-identical CSV across runs and thread counts", &mut c14_determinism);
    let failed = results.iter().filter(|r| r.2.is_err()).count();
    let total: f64 = results.iter().map(|r| r.3).sum();
    println!("acceptance: {}/{} criteria passed ({total:.0} s)", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
