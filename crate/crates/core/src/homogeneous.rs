//! Homogeneous pinning: `Σ K(n) e^{−F n} = e^{−h}`, its derivative and the exact partition identity.

use crate::error::{Error, Result};
use crate::laws::{tilt, InterArrivalLaw};
use crate::numerics::conv;
use crate::renewal::renewal_limit;

/// Solution of the homogeneous fixed point at one `h`.
#[derive(Clone, Debug)]
pub struct FreeEnergySolution {
    pub h: f64,
    pub f: f64,
    /// `∂_h F`, zero for `h ≤ 0`.
    pub df: f64,
    pub residual: f64,
    /// `K_{F(h)}`, equal to the input law when `F = 0`.
    pub tilted: InterArrivalLaw,
}

const MAX_ITER: usize = 200;

/// Solve for `F(h)`. Bisection on `[0, h]` down to width `1e-6`, then safeguarded Newton until
/// `|Σ K e^{−Fn} − e^{−h}| ≤ tol`.
pub fn free_energy(law: &InterArrivalLaw, h: f64, tol: f64) -> Result<FreeEnergySolution> {
    if law.b() != 0.0 {
        return Err(Error::InvalidInput("free energy needs an untilted law".into()));
    }
    if !h.is_finite() || !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("bad h = {h} or tol = {tol}")));
    }
    if h <= 0.0 {
        return Ok(FreeEnergySolution { h, f: 0.0, df: 0.0, residual: 0.0, tilted: law.clone() });
    }
    let target = (-h).exp();
    let phi = |f: f64| law.series_real(0, f) - target;
    let dphi = |f: f64| -law.series_real(1, f);
    let (mut lo, mut hi) = (0.0, h);
    let mut it = 0;
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        it += 1;
    }
    let mut f = 0.5 * (lo + hi);
    let mut r = phi(f);
    while r.abs() > tol {
        if it >= MAX_ITER {
            return Err(Error::NoConvergence(format!("free energy residual {r:e} after {MAX_ITER} iterations")));
        }
        if r > 0.0 {
            lo = f;
        } else {
            hi = f;
        }
        let step = f - r / dphi(f);
        let next = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
        if next == f {
            break;
        }
        f = next;
        r = phi(f);
        it += 1;
    }
    if r.abs() > tol {
        return Err(Error::NoConvergence(format!("free energy residual {r:e} stalled")));
    }
    let df = target / law.series_real(1, f);
    let tilted = tilt(law, f)?;
    Ok(FreeEnergySolution { h, f, df, residual: r, tilted })
}

/// `∂_h F = e^{−h} / Σ n K(n) e^{−Fn}`, checked against `u_{F(h)}(∞)`.
pub fn free_energy_derivative(sol: &FreeEnergySolution) -> Result<f64> {
    if sol.h == 0.0 {
        return Err(Error::AtCriticality);
    }
    if sol.h < 0.0 {
        return Err(Error::NotApplicable("derivative is defined for h > 0".into()));
    }
    let via_limit = renewal_limit(&sol.tilted);
    let rel = (via_limit - sol.df).abs() / sol.df;
    if rel > 1e-9 {
        return Err(Error::Invariant(format!(
            "derivative {} disagrees with renewal limit {via_limit} (rel {rel:e})",
            sol.df
        )));
    }
    Ok(sol.df)
}

/// `log Z_{N,h}` for the pinned homogeneous model by the direct recursion.
pub fn homogeneous_log_partition(law: &InterArrivalLaw, h: f64, n: usize) -> f64 {
    let krev: Vec<f64> = (0..=n as u64).rev().map(|j| law.k(j)).collect(); // krev[m] = K(n − m)
    let eh = h.exp();
    let mut z = vec![0.0; n + 1];
    z[0] = 1.0;
    let mut log_scale = 0.0;
    for p in 1..=n {
        z[p] = eh * conv::dot(&z[..p], &krev[n - p..n]);
        let a = z[p];
        if !(1e-100..=1e100).contains(&a) && a > 0.0 {
            let s = a.ln();
            let f = (-s).exp();
            z[..=p].iter_mut().for_each(|v| *v *= f);
            log_scale += s;
        }
    }
    z[n].ln() + log_scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::{deterministic, geometric, make_power_law, SlowVariation};
    use crate::renewal::renewal_function;

    fn a03() -> InterArrivalLaw {
        make_power_law(0.3, SlowVariation::constant(1.0), 4096, 1e-8).unwrap()
    }

    #[test]
    fn closed_forms() {
        let d = deterministic();
        let s = free_energy(&d, 0.7, 1e-14).unwrap();
        assert!((s.f - 0.7).abs() < 1e-13);
        assert!((free_energy_derivative(&s).unwrap() - 1.0).abs() < 1e-12);
        let g = geometric(0.5).unwrap();
        let s = free_energy(&g, 2f64.ln(), 1e-14).unwrap();
        assert!((s.f - 1.5f64.ln()).abs() < 1e-13);
        assert!((s.df - 2.0 / 3.0).abs() < 1e-13);
        let z = free_energy(&a03(), 0.0, 1e-12).unwrap();
        assert_eq!(z.f, 0.0);
        assert!(matches!(free_energy_derivative(&z), Err(Error::AtCriticality)));
    }

    #[test]
    fn power_law_oracle_values() {
        let law = a03();
        let cases = [
            (0.01, 1.540_137_305_484_939_8e-7, 5.108_207_287_461_791_5e-5),
            (0.1, 2.866_443_188_040_105_2e-4, 9.099_743_654_060_604_7e-3),
            (1.0, 0.197_981_903_063_344_32, 0.458_126_504_888_331_91),
        ];
        for (h, f, df) in cases {
            let s = free_energy(&law, h, 1e-13).unwrap();
            assert!((s.f / f - 1.0).abs() < 1e-8, "h={h}: {} vs {f}", s.f);
            assert!((s.df / df - 1.0).abs() < 1e-8, "h={h}: {} vs {df}", s.df);
            assert!(s.f >= 0.0 && s.f <= h);
            assert!((s.tilted.cb() - h.exp()).abs() < 1e-10 * h.exp());
            free_energy_derivative(&s).unwrap();
        }
    }

    #[test]
    fn convex_and_monotone() {
        let law = a03();
        let hs: Vec<f64> = (1..=12).map(|i| 0.05 * i as f64).collect();
        let fs: Vec<f64> = hs.iter().map(|&h| free_energy(&law, h, 1e-13).unwrap().f).collect();
        for w in fs.windows(3) {
            assert!(w[1] >= w[0]);
            assert!(w[2] - 2.0 * w[1] + w[0] >= -1e-14);
        }
    }

    #[test]
    fn partition_identity() {
        let g = geometric(0.5).unwrap().with_cache(100);
        let s = free_energy(&g, 2f64.ln(), 1e-14).unwrap();
        let lz = homogeneous_log_partition(&g, 2f64.ln(), 100);
        let u = renewal_function(&s.tilted, 100, false).unwrap();
        assert!((lz - 100.0 * s.f - u.u[100].ln()).abs() < 1e-9);
        let d = deterministic();
        assert!((homogeneous_log_partition(&d, 0.5, 10) - 5.0).abs() < 1e-12);
        // h ≤ 0: between N contacts and the single forced contact at N
        let law = a03();
        let lu = renewal_function(&law, 500, false).unwrap().u[500].ln();
        for h in [-2.0, -0.1] {
            let lz = homogeneous_log_partition(&law, h, 500);
            assert!(lz <= h + lu + 1e-9);
            assert!(lz >= 500.0 * h + lu - 1e-9);
        }
    }

    #[test]
    fn small_delta_correction_vanishes() {
        let law = a03();
        let mut prev = f64::INFINITY;
        for k in 1..8 {
            let s = free_energy(&law, 2f64.powi(-k), 1e-14).unwrap();
            let r = s.df * s.df / s.f;
            assert!(r < prev);
            prev = r;
        }
    }
}
