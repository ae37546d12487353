//! Two-replica homogeneous free energy `B(b, λ)`: pinning of the intersection renewal.

use crate::error::{Error, Result};
use crate::intersection::{eval_dhat, horizon_for, sum_u0_squared, IntersectionTable};
use crate::laws::{tilt, InterArrivalLaw};
use crate::numerics::conv;
use crate::renewal::{renewal_function, renewal_limit, RenewalTable};
use serde::Serialize;
use std::collections::BTreeMap;

/// Which representation of `𝕂̂_b` produced the solution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    /// Deconvolved table plus its fitted tail.
    Table,
    /// `𝕂̂ = 1 − (1 − z)/(u(∞)² + (1 − z) D̂(z))` from the renewal table.
    Transform,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReplicaSolution {
    pub b: f64,
    pub lambda: f64,
    #[serde(rename = "B")]
    pub big_b: f64,
    /// `(1 − e^{−B}) / u_b(∞)²`; NaN when `u_b(∞) = 0`.
    pub x: f64,
    pub residual: f64,
    pub route: Route,
    /// `b = 0` and `λ` at or below the localization threshold; `B = 0` is returned.
    pub below_threshold: bool,
}

/// Table route is used only if the extrapolated tail stays below this fraction.
const TABLE_TAIL_FRACTION: f64 = 1e-6;

/// Evaluates `1 − 𝕂̂_b(e^{−B})` along either route.
struct Transform<'a> {
    kb: Option<&'a IntersectionTable>,
    u: RenewalTable,
}

impl Transform<'_> {
    fn law(&self) -> Result<&InterArrivalLaw> {
        self.u.law().ok_or_else(|| Error::NotApplicable("renewal table carries no law".into()))
    }

    fn one_minus_table(&self, big_b: f64) -> Option<f64> {
        let kb = self.kb?;
        let (s, t) = kb.transform((-big_b).exp());
        let t = t?;
        if t.abs() > TABLE_TAIL_FRACTION * (s + t).abs() {
            return None;
        }
        Some(1.0 - s - t)
    }

    fn one_minus_identity(&self, big_b: f64) -> Result<f64> {
        let law = self.law()?;
        let u2 = self.u.u_inf * self.u.u_inf;
        if big_b == 0.0 {
            if u2 > 0.0 {
                return Ok(0.0);
            }
            return Ok(1.0 / eval_dhat(&self.u, law, 1.0)?.value);
        }
        let omz = -(-big_b).exp_m1();
        let d = eval_dhat(&self.u, law, (-big_b).exp())?.value;
        Ok(omz / (u2 + omz * d))
    }

    fn eval(&self, big_b: f64, route: Route) -> Result<f64> {
        match route {
            Route::Table => self.one_minus_table(big_b).ok_or_else(|| Error::TailDominates(f64::NAN)),
            Route::Transform => self.one_minus_identity(big_b),
        }
    }
}

/// Solve `𝕂̂_b(e^{−B}) = e^{−λ}` from the deconvolved table, falling back to the transform
/// identity when the table tail is not negligible anywhere along the bisection.
pub fn replica_free_energy(kb: &IntersectionTable, lambda: f64, tol: f64) -> Result<ReplicaSolution> {
    let u = RenewalTable::root_of(&kb.u);
    let tr = Transform { kb: Some(kb), u };
    match solve(&tr, lambda, tol, Route::Table) {
        Err(Error::TailDominates(_)) if tr.u.law().is_some() => solve(&tr, lambda, tol, Route::Transform),
        r => r,
    }
}

/// Same equation from the (unsquared) renewal table of the tilted law, through the transform identity.
pub fn replica_free_energy_renewal(u_b: &RenewalTable, lambda: f64, tol: f64) -> Result<ReplicaSolution> {
    if u_b.is_squared() {
        return Err(Error::InvalidInput("expected u_b, not its square".into()));
    }
    solve(&Transform { kb: None, u: u_b.clone() }, lambda, tol, Route::Transform)
}

fn solve(tr: &Transform, lambda: f64, tol: f64, route: Route) -> Result<ReplicaSolution> {
    if !lambda.is_finite() || !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("bad lambda = {lambda} or tol = {tol}")));
    }
    let b = tr.u.law().map_or(f64::NAN, |l| l.b());
    let ui = tr.u.u_inf;
    let recurrent = ui > 0.0;
    if recurrent && lambda < 0.0 {
        return Err(Error::InvalidInput("lambda must be nonnegative".into()));
    }
    // g(B) = (1 − 𝕂̂(e^{−B})) − (1 − e^{−λ}), increasing in B
    let target = -(-lambda).exp_m1();
    let g = |bb: f64| -> Result<f64> { Ok(tr.eval(bb, route)? - target) };
    let sol = |big_b: f64, residual: f64, below: bool| ReplicaSolution {
        b,
        lambda,
        big_b,
        x: if recurrent { -(-big_b).exp_m1() / (ui * ui) } else { f64::NAN },
        residual,
        route,
        below_threshold: below,
    };
    let g0 = g(0.0)?;
    if g0 >= 0.0 {
        // recurrent with λ = 0, or b = 0 below the threshold
        return Ok(sol(0.0, g0, !recurrent));
    }
    let mut hi = lambda.max(0.0) + 1.0;
    let mut ghi = g(hi)?;
    let mut grow = 0;
    while ghi < 0.0 {
        hi *= 2.0;
        ghi = g(hi)?;
        grow += 1;
        if grow > 60 {
            return Err(Error::NoConvergence("no bracket for B".into()));
        }
    }
    let mut lo = 0.0;
    let mut best = (hi, ghi);
    for _ in 0..400 {
        let mid = if lo > 0.0 && hi > 4.0 * lo { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid)?;
        if gm.abs() < best.1.abs() {
            best = (mid, gm);
        }
        if gm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if best.1.abs() > tol {
        return Err(Error::NoConvergence(format!("replica residual {:e}", best.1)));
    }
    Ok(sol(best.0, best.1, false))
}

/// Two-sided bounds `u_b(∞)² λ ≤ B ≤ (1 + ε) u_b(∞)² (λ + c₁ λ²)`.
#[derive(Clone, Debug, Serialize)]
pub struct ReplicaBounds {
    pub lower: f64,
    pub upper: f64,
    pub within: bool,
}

pub fn replica_bounds(sol: &ReplicaSolution, law_b: &InterArrivalLaw, consts: &PaperConstants, eps: f64) -> Result<ReplicaBounds> {
    if !(sol.b <= consts.b0_eps) || !(sol.lambda <= consts.lambda0) || sol.lambda < 0.0 {
        return Err(Error::HypothesesViolated(format!(
            "need b ≤ {} and 0 ≤ λ ≤ {}, got b = {}, λ = {}",
            consts.b0_eps, consts.lambda0, sol.b, sol.lambda
        )));
    }
    let u2 = renewal_limit(law_b).powi(2);
    let lower = u2 * sol.lambda;
    let upper = (1.0 + eps) * u2 * (sol.lambda + consts.c1 * sol.lambda * sol.lambda);
    let slack = 1e-12 * sol.lambda.abs();
    Ok(ReplicaBounds { lower, upper, within: lower - slack <= sol.big_b && sol.big_b <= upper + slack })
}

/// Resolution of the `(b, B)` grid behind `D(c)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GridSpec {
    pub b_min: f64,
    pub n_b: usize,
    pub big_b_max: f64,
    pub n_big_b: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { b_min: 1e-4, n_b: 4, big_b_max: 1.0, n_big_b: 5 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PaperConstants {
    pub dc: f64,
    pub lambda0: f64,
    pub c1: f64,
    pub b0_eps: f64,
    /// `D̂₀(1) = Σ u₀(n)²`, the `b → 0` corner included in the supremum.
    pub dhat0: f64,
    pub c: f64,
    pub eps: f64,
    pub grid_meta: String,
}

fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| (a.ln() + (b.ln() - a.ln()) * i as f64 / (n - 1) as f64).exp()).collect()
}

fn big_b_grid(max: f64, n: usize) -> Vec<f64> {
    let mut v = vec![0.0];
    if n > 1 {
        v.extend(logspace(1e-6, max, n - 1));
    }
    v
}

/// `D(c)`, `λ₀`, `c₁` and `b₀(ε)`. `D(c)` is a grid supremum, refined once; a change above 5%
/// under refinement is reported as unstable.
pub fn paper_constants(law: &InterArrivalLaw, c: f64, eps: f64, grid: GridSpec) -> Result<PaperConstants> {
    if law.b() != 0.0 || !(c > grid.b_min) || !(eps > 0.0) || grid.n_b < 2 || grid.n_big_b < 2 {
        return Err(Error::InvalidInput("paper_constants needs an untilted law, c > b_min, eps > 0".into()));
    }
    let n0 = 1usize << 16;
    let base = law.with_cache(n0);
    let u0 = renewal_function(&base, n0, true)?;
    let (dhat0, _) = sum_u0_squared(&u0, &base)?;

    let mut tables: BTreeMap<u64, (InterArrivalLaw, RenewalTable)> = BTreeMap::new();
    let mut sup_over = |bs: &[f64], big_bs: &[f64]| -> Result<f64> {
        let mut sup = dhat0;
        for &b in bs {
            if !tables.contains_key(&b.to_bits()) {
                let n = horizon_for(b);
                let lb = tilt(&law.with_cache(n), b)?;
                let t = renewal_function(&lb, n, true)?;
                tables.insert(b.to_bits(), (lb, t));
            }
            let (lb, t) = &tables[&b.to_bits()];
            for &bb in big_bs {
                sup = sup.max(eval_dhat(t, lb, (-bb).exp())?.value);
            }
        }
        Ok(sup)
    };
    let top = c * 0.99;
    let coarse = sup_over(&logspace(grid.b_min, top, grid.n_b), &big_b_grid(grid.big_b_max, grid.n_big_b))?;
    let (nb, nbb) = (2 * grid.n_b - 1, 2 * grid.n_big_b - 1);
    let dc = sup_over(&logspace(grid.b_min, top, nb), &big_b_grid(grid.big_b_max, nbb))?;
    let change = (dc - coarse).abs() / dc;
    if change > 0.05 {
        return Err(Error::GridUnstable(change));
    }
    let lambda0 = -(1.0 - 1.0 / (2.0 * dc)).ln();
    let c1 = c1_from(dc, lambda0);
    let b0_eps = b0_from(law, c, eps, lambda0, c1)?;
    Ok(PaperConstants {
        dc,
        lambda0,
        c1,
        b0_eps,
        dhat0,
        c,
        eps,
        grid_meta: format!(
            "b: {nb} log-spaced in [{}, {top}]; B: 0 and {} log-spaced in [1e-6, {}]; refined from {}x{}; refinement change {change:.3e}",
            grid.b_min,
            nbb - 1,
            grid.big_b_max,
            grid.n_b,
            grid.n_big_b
        ),
    })
}

/// `½ |f''(λ)|` for `f(λ) = y/(1 − y D)`, `y = 1 − e^{−λ}`.
pub fn half_abs_second_derivative(d: f64, lambda: f64) -> f64 {
    let y = -(-lambda).exp_m1();
    let w = 1.0 - y * d;
    0.5 * (2.0 * d * (1.0 - y).powi(2) / w.powi(3) - (1.0 - y) / (w * w)).abs()
}

fn c1_from(dc: f64, lambda0: f64) -> f64 {
    let n = 4000;
    (1..=n).map(|i| half_abs_second_derivative(dc, lambda0 * i as f64 / n as f64)).fold(0.0, f64::max)
}

fn b0_from(law: &InterArrivalLaw, c: f64, eps: f64, lambda0: f64, c1: f64) -> Result<f64> {
    let light = law.with_cache(64);
    let h = |b: f64| -> Result<f64> {
        let u = renewal_limit(&tilt(&light, b)?);
        Ok((2.0 * (lambda0 + c1 * lambda0 * lambda0) * u * u).exp_m1() - eps)
    };
    if h(c)? < 0.0 {
        return Ok(c);
    }
    let (mut lo, mut hi) = (c * 1e-12, c);
    if h(lo)? >= 0.0 {
        return Ok(lo);
    }
    for _ in 0..100 {
        let mid = (lo * hi).sqrt();
        if h(mid)? >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Clone, Debug, Serialize)]
pub struct FirstOrderPoint {
    pub b: f64,
    pub lambda: f64,
    #[serde(rename = "B")]
    pub big_b: f64,
    pub ratio: f64,
}

/// `B(b, λ) / (λ u_b(∞)²)` along a path shrinking to the origin.
pub fn first_order_check(law: &InterArrivalLaw, path: &[(f64, f64)]) -> Result<Vec<FirstOrderPoint>> {
    let mut out = Vec::with_capacity(path.len());
    for &(b, lambda) in path {
        if !(b > 0.0) || !(lambda > 0.0) {
            return Err(Error::InvalidInput("path points need b > 0 and λ > 0".into()));
        }
        let n = horizon_for(b);
        let lb = tilt(&law.with_cache(n), b)?;
        let u = renewal_function(&lb, n, true)?;
        let sol = replica_free_energy_renewal(&u, lambda, 1e-14)?;
        let mean_inv = u.u_inf;
        out.push(FirstOrderPoint { b, lambda, big_b: sol.big_b, ratio: sol.big_b / (lambda * mean_inv * mean_inv) });
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct FiniteReplica {
    pub log_w_over_n: f64,
    pub b_gap: f64,
}

/// `log W_N` for `W_0 = 1`, `W_n = e^λ Σ_{j≤n} 𝕂(j) W_{n−j}`.
pub fn log_w(kk: &[f64], lambda: f64, n: usize) -> Result<f64> {
    if n == 0 || n >= kk.len() {
        return Err(Error::HorizonExceedsCache { need: n, cached: kk.len().saturating_sub(1) });
    }
    let krev: Vec<f64> = kk[..=n].iter().rev().cloned().collect(); // krev[m] = 𝕂(n − m)
    let el = lambda.exp();
    let mut w = vec![0.0; n + 1];
    w[0] = 1.0;
    let mut log_scale = 0.0;
    for p in 1..=n {
        w[p] = el * conv::dot(&w[..p], &krev[n - p..n]);
        let a = w[p];
        if a > 0.0 && !(1e-100..=1e100).contains(&a) {
            let s = a.ln();
            let f = (-s).exp();
            w[..=p].iter_mut().for_each(|v| *v *= f);
            log_scale += s;
        }
    }
    Ok(w[n].ln() + log_scale)
}

pub fn finite_n_replica(kb: &IntersectionTable, lambda: f64, n: usize) -> Result<FiniteReplica> {
    let lw = log_w(&kb.kk, lambda, n)? / n as f64;
    let sol = replica_free_energy(kb, lambda, 1e-13)?;
    Ok(FiniteReplica { log_w_over_n: lw, b_gap: (lw - sol.big_b).abs() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intersection::{deconvolve, square_renewal};
    use crate::laws::{deterministic, geometric, make_power_law, SlowVariation};

    fn kb_of(law: &InterArrivalLaw, n: usize) -> IntersectionTable {
        let u = renewal_function(&law.with_cache(n), n, false).unwrap();
        deconvolve(&square_renewal(&u), 1e-10).unwrap()
    }

    #[test]
    fn closed_forms() {
        let d = tilt(&deterministic().with_cache(64), 0.3).unwrap();
        let kb = kb_of(&d, 64);
        let s = replica_free_energy(&kb, 0.2, 1e-14).unwrap();
        assert!((s.big_b - 0.2).abs() < 1e-13);
        assert_eq!(s.route, Route::Table);
        assert_eq!(replica_free_energy(&kb, 0.0, 1e-14).unwrap().big_b, 0.0);
        let g = geometric(0.5).unwrap();
        let kb = kb_of(&g, 2000);
        let s = replica_free_energy(&kb, 0.1, 1e-14).unwrap();
        assert!((s.big_b - 0.025_953_017_476_955_54).abs() < 1e-12, "{s:?}");
        assert!((s.x - -(-s.big_b).exp_m1() / 0.25).abs() < 1e-12);
        let f = finite_n_replica(&kb, 0.1, 2000).unwrap();
        assert!(f.b_gap < 1e-3, "{f:?}");
        let f0 = finite_n_replica(&kb, 0.0, 2000).unwrap();
        assert!(f0.log_w_over_n <= 1e-15);
        let fd = finite_n_replica(&kb_of(&d, 64), 0.2, 50).unwrap();
        assert!((fd.log_w_over_n - 0.2).abs() < 1e-14);
    }

    #[test]
    fn monotone_in_lambda() {
        let l = make_power_law(0.3, SlowVariation::constant(1.0), 4096, 1e-8).unwrap();
        let lb = tilt(&l, 0.05).unwrap();
        let u = renewal_function(&lb, 4096, true).unwrap();
        let mut prev = -1.0;
        for i in 0..10 {
            let s = replica_free_energy_renewal(&u, 0.02 * i as f64, 1e-13).unwrap();
            assert!(s.big_b >= prev);
            prev = s.big_b;
        }
    }

    #[test]
    fn threshold_at_b0() {
        let l = make_power_law(0.3, SlowVariation::constant(1.0), 1 << 14, 1e-8).unwrap();
        let u0 = renewal_function(&l, 1 << 14, true).unwrap();
        let s = replica_free_energy_renewal(&u0, 0.1, 1e-12).unwrap();
        assert!(s.below_threshold && s.big_b == 0.0);
        // threshold −log(1 − 1/Σu₀²) ≈ 1.63
        let s = replica_free_energy_renewal(&u0, 2.5, 1e-12).unwrap();
        assert!(!s.below_threshold && s.big_b > 0.0, "{s:?}");
    }

    #[test]
    fn c1_and_lambda0() {
        let d: f64 = 1.25;
        let l0 = -(1.0 - 1.0 / (2.0 * d)).ln();
        assert!(((-l0).exp_m1().abs() - 1.0 / (2.0 * d)).abs() < 1e-15);
        let c1 = c1_from(d, l0);
        assert!(c1 > 0.0);
        // near λ = 0, f'' = 2D − 1
        assert!((half_abs_second_derivative(d, 1e-9) - 0.5 * (2.0 * d - 1.0)).abs() < 1e-6);
    }
}
