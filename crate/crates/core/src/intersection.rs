//! The intersection renewal `τ ∩ τ′`: squared renewal functions, extended-precision
//! deconvolution of its inter-arrival law `𝕂_b`, and the transform diagnostics built on it.

use crate::error::{Error, Result};
use crate::laws::{InterArrivalLaw, LawKind};
use crate::numerics::fixed::FixedVec;
use crate::numerics::quad::{composite, gauss_legendre};
use crate::numerics::stats::linear_fit;
use crate::numerics::tail;
use crate::renewal::RenewalTable;
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::{E, PI};

/// How `𝕂_b(n)` is continued past the table horizon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum TailModel {
    /// `𝕂(N + m) ≈ 𝕂(N) ρ^m`.
    Geometric { ratio: f64 },
    /// `𝕂(n) ≈ 𝕂(N) (N/n)^q`.
    Power { exponent: f64 },
    None,
}

/// Deconvolved inter-arrival law of the intersection renewal.
#[derive(Clone, Debug)]
pub struct IntersectionTable {
    /// `kk[n] = 𝕂(n)`, with `kk[0] = 0`.
    pub kk: Vec<f64>,
    /// `1 − Σ 𝕂(n) − tail estimate`, an estimate of `𝕂(∞)`.
    pub mass_defect: f64,
    /// The squared renewal table the law was extracted from.
    pub u: RenewalTable,
    pub precision_bits: u32,
    pub agreement_err: f64,
    pub tail_model: TailModel,
}

impl IntersectionTable {
    pub fn horizon(&self) -> usize {
        self.kk.len() - 1
    }

    /// `Σ_{n≤N} 𝕂(n) z^n` and the model tail `Σ_{n>N}`; the tail is `None` when it diverges or
    /// no model is available.
    pub fn transform(&self, z: f64) -> (f64, Option<f64>) {
        let n = self.horizon();
        let mut s = 0.0;
        let mut zn = 1.0;
        let mut pows = Vec::with_capacity(n + 1);
        for _ in 0..=n {
            pows.push(zn);
            zn *= z;
        }
        for j in (1..=n).rev() {
            s += self.kk[j] * pows[j];
        }
        let last = self.kk[n];
        let tail = match self.tail_model {
            TailModel::Geometric { ratio } => {
                let q = ratio * z;
                if q < 1.0 {
                    Some(last * pows[n] * q / (1.0 - q))
                } else {
                    None
                }
            }
            TailModel::Power { exponent } => {
                if z > 1.0 || (z == 1.0 && exponent <= 1.0) {
                    None
                } else {
                    let nf = n as f64;
                    let g = move |x: Complex64| (x / nf).powf(-exponent);
                    Some(last * tail::sum_from_real(&g, -z.ln(), n as u64 + 1))
                }
            }
            TailModel::None => Some(0.0),
        };
        (s, tail)
    }

    /// `max_n |Σ_{j≤n} 𝕂(j) U(n−j) − U(n)|` over `1 ≤ n ≤ N`.
    pub fn reconvolution_error(&self) -> f64 {
        let n = self.horizon();
        let uu = &self.u.u;
        let mut worst: f64 = 0.0;
        for p in 1..=n {
            let s: f64 = (1..=p).map(|j| self.kk[j] * uu[p - j]).sum();
            worst = worst.max((s - uu[p]).abs());
        }
        worst
    }
}

/// `U(n) = u(n)²`, `U(∞) = u(∞)²`.
pub fn square_renewal(table: &RenewalTable) -> RenewalTable {
    RenewalTable::squared_of(table)
}

const START_BITS: u32 = 128;
const MAX_BITS: u32 = 4096;

/// `𝕂(n) = U(n) − Σ_{j<n} 𝕂(j) U(n−j)` in fixed-point arithmetic, doubling the precision from
/// 128 bits until two consecutive runs agree within `target_rel_err` on every entry above 1e-300.
///
/// When the table carries its generating law, `u` itself is recomputed at each precision from
/// the law's kernel so that the input is exact rather than double-rounded.
pub fn deconvolve(table: &RenewalTable, target_rel_err: f64) -> Result<IntersectionTable> {
    deconvolve_from(table, target_rel_err, START_BITS)
}

pub fn deconvolve_from(table: &RenewalTable, target_rel_err: f64, start_bits: u32) -> Result<IntersectionTable> {
    if table.u[0] != 1.0 {
        return Err(Error::InvalidRenewalFunction(table.u[0]));
    }
    if !(target_rel_err > 0.0) {
        return Err(Error::InvalidInput("target_rel_err must be positive".into()));
    }
    let start = start_bits.clamp(64, MAX_BITS).next_power_of_two();
    let mut bits = start;
    let mut prev = run_fixed(table, (bits / 64) as usize);
    loop {
        let next_bits = bits * 2;
        if next_bits > MAX_BITS {
            let err = disagreement(&prev, &run_fixed(table, (bits / 64) as usize));
            return Err(Error::PrecisionExhausted { bits, err });
        }
        let cur = run_fixed(table, (next_bits / 64) as usize);
        let err = disagreement(&prev, &cur);
        if err <= target_rel_err {
            return Ok(finish(table, cur, next_bits, err));
        }
        prev = cur;
        bits = next_bits;
    }
}

fn disagreement(lo: &[f64], hi: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for (a, b) in lo.iter().zip(hi).skip(1) {
        if b.abs() > 1e-300 {
            worst = worst.max((a - b).abs() / b.abs());
        }
    }
    worst
}

fn run_fixed(table: &RenewalTable, limbs: usize) -> Vec<f64> {
    let n = table.horizon();
    let mut uu = FixedVec::zeros(limbs, n + 1);
    match table.law() {
        Some(law) => {
            let mut k = FixedVec::zeros(limbs, n + 1);
            for j in 1..=n {
                k.set_f64(j, law.k(j as u64));
            }
            let mut u = FixedVec::zeros(limbs, n + 1);
            u.set_f64(0, 1.0);
            for p in 1..=n {
                u.dot_self_into(p, &k, (1..=p).map(|j| (j, p - j)));
            }
            if table.is_squared() {
                for p in 0..=n {
                    uu.square_into(p, &u, p);
                }
            } else {
                uu = u;
            }
        }
        None => {
            for p in 0..=n {
                uu.set_f64(p, table.u[p]);
            }
        }
    }
    let mut kk = FixedVec::zeros(limbs, n + 1);
    let mut tmp = FixedVec::zeros(limbs, 1);
    for p in 1..=n {
        tmp.dot_into(0, &kk, &uu, (1..p).map(|j| (j, p - j)));
        kk.sub_into(p, &uu, p, &tmp, 0);
    }
    (0..=n).map(|p| kk.get_f64(p)).collect()
}

fn finish(table: &RenewalTable, kk: Vec<f64>, bits: u32, err: f64) -> IntersectionTable {
    let n = kk.len() - 1;
    let tail_model = if table.u_inf > 0.0 {
        fit_geometric(&kk)
    } else {
        match table.law().and_then(|l| l.alpha()) {
            Some(a) if a < 0.5 && table.law().map(|l| l.b()) == Some(0.0) => TailModel::Power { exponent: 2.0 - 2.0 * a },
            _ => TailModel::None,
        }
    };
    let mut t = IntersectionTable {
        kk,
        mass_defect: 0.0,
        u: table.clone(),
        precision_bits: bits,
        agreement_err: err,
        tail_model,
    };
    let (s, tl) = t.transform(1.0);
    t.mass_defect = (1.0 - s - tl.unwrap_or(0.0)).clamp(0.0, 1.0);
    let _ = n;
    t
}

/// Geometric ratio fitted on the last decade of positive entries.
fn fit_geometric(kk: &[f64]) -> TailModel {
    match decay_fit(kk) {
        Some((rate, _, _)) if rate > 0.0 => TailModel::Geometric { ratio: (-rate).exp() },
        _ => TailModel::None,
    }
}

/// Linear regression of `log 𝕂(n)` on `[n_hi/10, n_hi]`, `n_hi` the largest index with
/// `𝕂(n) > 1e-300`; returns `(rate, n_lo, n_hi)`.
fn decay_fit(kk: &[f64]) -> Option<(f64, usize, usize)> {
    let n_hi = (1..kk.len()).rev().find(|&n| kk[n] > 1e-300)?;
    let n_lo = (n_hi / 10).max(1);
    if n_hi < n_lo + 8 {
        return None;
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        (n_lo..=n_hi).filter(|&n| kk[n] > 0.0).map(|n| (n as f64, kk[n].ln())).unzip();
    if xs.len() < 8 {
        return None;
    }
    let (_, slope) = linear_fit(&xs, &ys);
    Some((-slope, n_lo, n_hi))
}

/// `Σ_{n>N} u₀(n)²` by continuing `u₀(n) ∝ 1/(L(n) n^{1−α})` from the horizon, with weights `z^n`.
fn u0_squared_tail(u0: &RenewalTable, law: &InterArrivalLaw, z: f64) -> Result<f64> {
    let (alpha, sv) = match (law.alpha(), law.sv()) {
        (Some(a), Some(sv)) => (a, sv),
        _ => return Err(Error::Inconclusive("no asymptotic form for the tail extension".into())),
    };
    let n = u0.horizon();
    let nf = n as f64;
    let q = 2.0 - 2.0 * alpha;
    let un = u0.u[n];
    let lnv = sv.eval(nf);
    // (u(N) L(N) N^{1−α})² Σ_{n>N} z^n / (L(n)² n^q)
    let amp = (un * lnv).powi(2) * nf.powf(q);
    if z < 1.0 || q > 1.0 {
        let g = move |x: Complex64| (sv.eval_c(x).powi(2) * x.powf(q)).inv();
        return Ok(amp * tail::sum_from_real(&g, -z.ln(), n as u64 + 1));
    }
    // boundary case α = 1/2: Σ 1/(n L(n)²) ≈ ∫ dx / (x L(x)²)
    match sv.kind {
        crate::laws::SvKind::LogPower if 2.0 * sv.gamma > 1.0 => {
            let p = 2.0 * sv.gamma;
            Ok(amp / (sv.c * sv.c) * (E + nf).ln().powf(1.0 - p) / (p - 1.0))
        }
        _ => Err(Error::NotApplicable("Σ u₀² diverges".into())),
    }
}

/// `Σ_n u₀(n)²` with the regular-variation tail extension; returns `(sum, tail part)`.
pub fn sum_u0_squared(u0: &RenewalTable, law: &InterArrivalLaw) -> Result<(f64, f64)> {
    let head: f64 = u0.u.iter().rev().map(|v| v * v).sum();
    let t = u0_squared_tail(u0, law, 1.0)?;
    Ok((head + t, t))
}

/// Terminating/persistent verdict for the intersection renewal.
#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub terminating: bool,
    pub k_infinity: f64,
    pub sum_u0_sq: f64,
    /// `(n, Σ_{m≤n} u₀(m)²)` on a doubling grid.
    pub partial_sums: Vec<(usize, f64)>,
    /// `1 − Σ 𝕂₀(n)` from the deconvolved table including its tail model.
    pub table_defect: f64,
}

pub fn classify_intersection(k0: &IntersectionTable, u0: &RenewalTable) -> Result<Classification> {
    let mut partial_sums = Vec::new();
    let mut s = 0.0;
    let mut next = 1;
    for (n, v) in u0.u.iter().enumerate() {
        s += v * v;
        if n == next || n == u0.horizon() {
            partial_sums.push((n, s));
            next *= 2;
        }
    }
    let law = u0.law().ok_or_else(|| Error::Inconclusive("table carries no law".into()))?;
    if law.b() != 0.0 {
        return Err(Error::InvalidInput("classification needs the untilted law".into()));
    }
    let persistent = u0.u_inf > 0.0
        || match (law.kind(), law.alpha(), law.sv()) {
            (LawKind::Power, Some(a), Some(sv)) => {
                a > 0.5 || (a == 0.5 && !(sv.kind == crate::laws::SvKind::LogPower && 2.0 * sv.gamma > 1.0))
            }
            _ => false,
        };
    if persistent {
        return Ok(Classification {
            terminating: false,
            k_infinity: 0.0,
            sum_u0_sq: f64::INFINITY,
            partial_sums,
            table_defect: k0.mass_defect,
        });
    }
    let (sum, _) = sum_u0_squared(u0, law)?;
    Ok(Classification {
        terminating: true,
        k_infinity: 1.0 / sum,
        sum_u0_sq: sum,
        partial_sums,
        table_defect: k0.mass_defect,
    })
}

/// Value of `D̂_b(z)` with the share contributed by the tail extension.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DhatValue {
    pub value: f64,
    pub tail: f64,
    pub tail_fraction: f64,
}

/// `D̂_b(z) = Σ (u_b(n)² − u_b(∞)²) z^n`.
///
/// For `z ≤ 1` the table is summed and continued with `u_b(n) − u_b(∞) ≈ (c(b) − 1)^{−2} K_b(n)`.
/// For `z > 1` the table series is useless in double precision; the value is assembled as
/// `Σ Δ(n)² z^n + 2 u(∞) Δ̂(z)` with `Δ̂(z) = 1/(1 − K̂_b(z)) − u(∞)/(1 − z)` from the law.
pub fn eval_dhat(u_table: &RenewalTable, law_b: &InterArrivalLaw, z: f64) -> Result<DhatValue> {
    let b = law_b.b();
    if !(z > 0.0) || z > b.exp() {
        return Err(Error::InvalidInput(format!("z = {z} outside (0, e^b]")));
    }
    let n = u_table.horizon();
    let ui = u_table.u_inf;
    let out = |value: f64, tail: f64| -> Result<DhatValue> {
        if !value.is_finite() {
            return Err(Error::NoConvergence(format!("D̂ evaluation produced {value}")));
        }
        let frac = if value == 0.0 { 0.0 } else { (tail / value).abs() };
        if frac > 0.1 {
            return Err(Error::TailDominates(frac));
        }
        Ok(DhatValue { value, tail, tail_fraction: frac })
    };
    if ui == 0.0 {
        if z > 1.0 {
            return Err(Error::InvalidInput("b = 0 requires z ≤ 1".into()));
        }
        let head = weighted_sum(n, z, |k| u_table.u[k] * u_table.u[k]);
        let t = u0_squared_tail(u_table, law_b, z)?;
        return out(head + t, t);
    }
    let amp = match (law_b.kind(), b > 0.0) {
        (LawKind::Power, true) => Some((law_b.cb() - 1.0).powi(-2)),
        _ => None,
    };
    let kb2 = |s: f64, from: u64| -> f64 {
        let (a, sv) = (law_b.alpha().unwrap_or(1.0), law_b.sv());
        let pre = law_b.cb() * law_b.norm();
        let g = move |x: Complex64| {
            let k = sv.map_or(Complex64::new(0.0, 0.0), |sv| sv.eval_c(x)) * x.powf(-1.0 - a) * pre;
            k * k
        };
        // Σ K_b(n)² e^{−sn}, both tilt factors moved into the exponent
        tail::sum_from_real(&g, s + 2.0 * b, from)
    };
    if z <= 1.0 {
        let head = weighted_sum(n, z, |k| u_table.u[k] * u_table.u[k] - ui * ui);
        let t = match amp {
            Some(a) => {
                let s = -z.ln();
                let lin = law_b.series_from(0, Complex64::new(s, 0.0), n as u64 + 1).re;
                2.0 * ui * a * lin + a * a * kb2(s, n as u64 + 1)
            }
            None => 0.0,
        };
        return out(head + t, t);
    }
    // beyond the last resolved Δ(n) the table is round-off, which z^n would amplify
    let n0 = (1..=n).find(|&k| (u_table.u[k] - ui).abs() < 1e-11 * ui).map_or(n, |k| k - 1);
    let sq_head = weighted_sum(n0, z, |k| (u_table.u[k] - ui).powi(2));
    let sq_tail = match amp {
        Some(a) => a * a * kb2(-z.ln(), n0 as u64 + 1),
        None => 0.0,
    };
    let khat = law_b.series(0, Complex64::new(-z.ln(), 0.0)).re;
    let delta_hat = 1.0 / (1.0 - khat) - ui / (1.0 - z);
    out(sq_head + sq_tail + 2.0 * ui * delta_hat, sq_tail)
}

fn weighted_sum<F: Fn(usize) -> f64>(n: usize, z: f64, f: F) -> f64 {
    let mut pows = Vec::with_capacity(n + 1);
    let mut p = 1.0;
    for _ in 0..=n {
        pows.push(p);
        p *= z;
    }
    (0..=n).rev().map(|k| f(k) * pows[k]).sum()
}

/// `G(θ) = Σ_j K(j) (1 − e^{2πiθj})` for the normalized untilted power law.
pub fn eval_g(law: &InterArrivalLaw, theta: f64) -> Result<Complex64> {
    if law.kind() != LawKind::Power || law.b() != 0.0 {
        return Err(Error::NotApplicable("G needs an untilted power law".into()));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidInput(format!("theta = {theta} outside (0, 1)")));
    }
    let phi = 2.0 * PI * theta;
    const J: u64 = 256;
    let mut head = Complex64::new(0.0, 0.0);
    for j in (1..J).rev() {
        let x = phi * j as f64 / 2.0;
        // 1 − e^{2ix} = −2i sin(x) e^{ix}
        let w = Complex64::new(0.0, -2.0 * x.sin()) * Complex64::new(0.0, x).exp();
        head += w * law.k(j);
    }
    let t0 = law.series_from(0, Complex64::new(0.0, 0.0), J);
    let t1 = law.series_from(0, Complex64::new(0.0, -phi), J);
    Ok(head + t0 - t1)
}

/// Diagnostics of the spectral side of the Plancherel identity.
#[derive(Clone, Debug, Serialize)]
pub struct PlancherelReport {
    pub sum_sq: f64,
    pub integral: f64,
    pub gap: f64,
    pub passed: bool,
    pub panels: usize,
}

/// `Σ u₀(n)²` against `∫₀¹ dθ / |G(θ)|²`.
pub fn plancherel_check(u0: &RenewalTable, law: &InterArrivalLaw) -> Result<PlancherelReport> {
    let alpha = law.alpha().ok_or_else(|| Error::NotApplicable("power law required".into()))?;
    if !(alpha < 0.5) {
        return Err(Error::NotApplicable("1/G is not square integrable for alpha ≥ 1/2".into()));
    }
    let (sum_sq, _) = sum_u0_squared(u0, law)?;
    let integral_and_panels = plancherel_integral(law)?;
    let (integral, panels) = integral_and_panels;
    let gap = (sum_sq - integral).abs() / integral;
    Ok(PlancherelReport { sum_sq, integral, gap, passed: gap < 0.05, panels })
}

/// `2 ∫₀^{1/2} dθ/|G(θ)|²` with `θ = s^{1/(1−2α)}` and geometric panels near `s = 0`,
/// doubling the panel count until two rounds agree within 1e-4.
pub fn plancherel_integral(law: &InterArrivalLaw) -> Result<(f64, usize)> {
    let alpha = law.alpha().ok_or_else(|| Error::NotApplicable("power law required".into()))?;
    let p = 1.0 / (1.0 - 2.0 * alpha);
    let s_max = 0.5f64.powf(1.0 / p);
    let nodes = gauss_legendre(12);
    let integrand = |s: f64| {
        let th = s.powf(p);
        if th <= 0.0 {
            return 0.0;
        }
        let g = eval_g(law, th.min(0.5)).expect("theta in range");
        p * s.powf(p - 1.0) / g.norm_sqr()
    };
    let edges = |m: usize| -> Vec<f64> {
        // m uniform panels on [s_max/8, s_max], 12 geometric panels below
        let a = s_max / 8.0;
        let mut e: Vec<f64> = (0..12).map(|i| a * 0.5f64.powi(12 - i)).collect();
        e.insert(0, 0.0);
        e.extend((0..=m).map(|i| a + (s_max - a) * i as f64 / m as f64));
        e
    };
    let mut m = 4;
    let mut prev = 2.0 * composite(integrand, &edges(m), &nodes);
    while m < 4096 {
        m *= 2;
        let cur = 2.0 * composite(integrand, &edges(m), &nodes);
        if (cur - prev).abs() <= 1e-4 * cur.abs() {
            return Ok((cur, m));
        }
        prev = cur;
    }
    Err(Error::EndpointSingularityUnresolved(format!("no stable value after {m} panels")))
}

#[derive(Clone, Debug, Serialize)]
pub struct Prop57Report {
    pub c: f64,
    pub ratios: Vec<(usize, f64)>,
    pub passed: bool,
}

/// `𝕂₀(n) / (c u₀(n)²)` with `c = (Σ u₀²)^{−2}`; the last decade must stay within 10% of 1.
pub fn prop57_check(k0: &IntersectionTable, u0: &RenewalTable) -> Result<Prop57Report> {
    if u0.u_inf > 0.0 {
        return Err(Error::NotApplicable("intersection is recurrent".into()));
    }
    let law = u0.law().ok_or_else(|| Error::Inconclusive("table carries no law".into()))?;
    let (s, _) = sum_u0_squared(u0, law)?;
    let c = s.powi(-2);
    let n = k0.horizon().min(u0.horizon());
    let mut ratios = Vec::new();
    let mut k = 8;
    loop {
        let m = 10f64.powf(k as f64 / 8.0).round() as usize;
        if m > n {
            break;
        }
        ratios.push((m, k0.kk[m] / (c * u0.u[m] * u0.u[m])));
        k += 1;
    }
    if ratios.last().map(|r| r.0) != Some(n) {
        ratios.push((n, k0.kk[n] / (c * u0.u[n] * u0.u[n])));
    }
    let passed = c > 0.0
        && c < 1.0
        && ratios.iter().filter(|r| r.0 * 10 >= n).all(|r| (r.1 - 1.0).abs() <= 0.1);
    Ok(Prop57Report { c, ratios, passed })
}

#[derive(Clone, Debug, Serialize)]
pub struct Prop58Report {
    pub r: f64,
    pub log_r: f64,
    pub fitted_rate: f64,
    pub agreement: f64,
    pub fit_range: (usize, usize),
}

/// Minimal root `r ∈ (1, e^b)` of `(r − 1) D̂_b(r) = u_b(∞)²` against the fitted decay rate of `𝕂_b`.
pub fn prop58_rate(law_b: &InterArrivalLaw, u_b: &RenewalTable, kb: &IntersectionTable) -> Result<Prop58Report> {
    let b = law_b.b();
    if law_b.kind() != LawKind::Power || b <= 0.0 {
        return Err(Error::NotApplicable("needs a tilted power law".into()));
    }
    let (rate, n_lo, n_hi) =
        decay_fit(&kb.kk).ok_or_else(|| Error::NotApplicable("no resolvable decay in the table".into()))?;
    let u2 = u_b.u_inf * u_b.u_inf;
    let den = |r: f64| -> Result<f64> { Ok(u2 - (r - 1.0) * eval_dhat(u_b, law_b, r)?.value) };
    let top = b.exp();
    let steps = 64;
    let mut lo = 1.0;
    let mut hi = None;
    for i in 1..=steps {
        let r = 1.0 + (top - 1.0) * i as f64 / steps as f64;
        if den(r)? < 0.0 {
            hi = Some(r);
            break;
        }
        lo = r;
    }
    let mut hi = hi.ok_or(Error::NoSignChange)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if den(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    let log_r = r.ln();
    Ok(Prop58Report { r, log_r, fitted_rate: rate, agreement: (rate - log_r).abs() / log_r, fit_range: (n_lo, n_hi) })
}

/// `Q₁, Q₂` of the tilted law (weights `L(j) j^{−1−α} e^{−bj}`), their values at 1 and `F^{(i)} = Q_i/Q_i(1)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct QTransforms {
    pub q1: Complex64,
    pub q2: Complex64,
    pub q1_1: f64,
    pub q2_1: f64,
    pub f1: Complex64,
    pub f2: Complex64,
    pub f2_bounded: bool,
}

pub fn q_transforms(law_b: &InterArrivalLaw, z: Complex64) -> Result<QTransforms> {
    let b = law_b.b();
    if b <= 0.0 || law_b.kind() != LawKind::Power {
        return Err(Error::NotApplicable("needs a tilted power law".into()));
    }
    if z.norm() > 1.0 + 1e-15 {
        return Err(Error::InvalidInput("|z| must be at most 1".into()));
    }
    let scale = 1.0 / (law_b.cb() * law_b.norm());
    let zero = Complex64::new(0.0, 0.0);
    let m0 = law_b.series(0, zero).re * scale;
    let m1 = law_b.series(1, zero).re * scale;
    let m2 = law_b.series(2, zero).re * scale;
    let q1_1 = m1;
    let q2_1 = 0.5 * (m2 - m1);
    let one = Complex64::new(1.0, 0.0);
    let (q1, q2) = if (one - z).norm() >= 0.05 {
        // j-sum forms with the transforms in closed form
        let w = law_b.series(0, -z.ln()) * scale;
        let omz = one - z;
        ((m0 - w) / omz, (omz * m1 - m0 + w) / (omz * omz))
    } else {
        q_by_tails(law_b, z, scale)
    };
    let f1 = q1 / q1_1;
    let f2 = q2 / q2_1;
    Ok(QTransforms { q1, q2, q1_1, q2_1, f1, f2, f2_bounded: f2.norm() <= 1.0 + 1e-9 })
}

/// `Q₁(z) = Σ_n z^n T(n)` and `Q₂(z) = Σ_n z^n Σ_{m>n} T(m)` with `T(n) = Σ_{j>n} w_j`.
fn q_by_tails(law_b: &InterArrivalLaw, z: Complex64, scale: f64) -> (Complex64, Complex64) {
    let b = law_b.b();
    let m = ((45.0 / b).ceil() as usize).clamp(64, 20_000_000);
    let zero = Complex64::new(0.0, 0.0);
    let w = |j: usize| law_b.k(j as u64) * scale;
    let mut t = vec![0.0; m + 1];
    t[m] = law_b.series_from(0, zero, m as u64 + 1).re * scale;
    for n in (0..m).rev() {
        t[n] = t[n + 1] + w(n + 1);
    }
    // Σ_{m' > m} T(m') = Σ_{j ≥ m+2} (j − m − 1) w_j
    let far = (law_b.series_from(1, zero, m as u64 + 2).re - (m as f64 + 1.0) * law_b.series_from(0, zero, m as u64 + 2).re)
        * scale;
    let mut t2 = vec![0.0; m + 1];
    t2[m] = far;
    for n in (0..m).rev() {
        t2[n] = t2[n + 1] + t[n + 1];
    }
    let mut q1 = Complex64::new(0.0, 0.0);
    let mut q2 = Complex64::new(0.0, 0.0);
    let mut zn = Complex64::new(1.0, 0.0);
    for n in 0..=m {
        q1 += zn * t[n];
        q2 += zn * t2[n];
        zn *= z;
    }
    (q1, q2)
}

/// Two evaluations of `Δ̂_b(z) = Σ (u_b(n) − u_b(∞)) z^n`: the table series and
/// `K̂_b″(1) / (2 K̂_b′(1)²) · F^{(2)}(z) / F^{(1)}(z)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DeltaHatCheck {
    pub direct: f64,
    pub via_q: f64,
    pub factor: f64,
}

pub fn delta_hat_check(law_b: &InterArrivalLaw, u_b: &RenewalTable, z: f64) -> Result<DeltaHatCheck> {
    let q = q_transforms(law_b, Complex64::new(z, 0.0))?;
    let zero = Complex64::new(0.0, 0.0);
    let k1 = law_b.series(1, zero).re;
    let k2 = law_b.series(2, zero).re - k1;
    let pref = k2 / (2.0 * k1 * k1);
    let via_q = pref * (q.f2 / q.f1).re;
    let n = u_b.horizon();
    let ui = u_b.u_inf;
    let a = (law_b.cb() - 1.0).powi(-2);
    let tail = a * law_b.series_from(0, Complex64::new(-z.ln(), 0.0), n as u64 + 1).re;
    let direct = weighted_sum(n, z, |k| u_b.u[k] - ui) + tail;
    Ok(DeltaHatCheck { direct, via_q, factor: direct / via_q })
}

/// `K̂_b″(1)/K̂_b′(1)² · L(1/b) b^α Γ(1−α)/(1−α)`, with `L` including the normalization.
pub fn q530_ratio(law_b: &InterArrivalLaw) -> Result<f64> {
    let (alpha, sv) = match (law_b.alpha(), law_b.sv()) {
        (Some(a), Some(sv)) if a < 1.0 => (a, sv),
        _ => return Err(Error::NotApplicable("needs a power law with alpha < 1".into())),
    };
    let b = law_b.b();
    let zero = Complex64::new(0.0, 0.0);
    let k1 = law_b.series(1, zero).re;
    let k2 = law_b.series(2, zero).re - k1;
    let l = law_b.norm() * sv.eval(1.0 / b);
    Ok(k2 / (k1 * k1) * l * b.powf(alpha) * statrs::function::gamma::gamma(1.0 - alpha) / (1.0 - alpha))
}

/// `max |𝕂̂_b(z) − (1 − (1 − z)/(u_b(∞)² + (1 − z) D̂_b(z)))|` over the sample points.
pub fn identity_570(kb: &IntersectionTable, u_b: &RenewalTable, law_b: &InterArrivalLaw, zs: &[f64]) -> Result<f64> {
    let u2 = u_b.u_inf * u_b.u_inf;
    let mut worst: f64 = 0.0;
    for &z in zs {
        let (s, t) = kb.transform(z);
        let lhs = s + t.ok_or_else(|| Error::NotApplicable(format!("table series diverges at z = {z}")))?;
        let d = eval_dhat(u_b, law_b, z)?.value;
        let rhs = 1.0 - (1.0 - z) / (u2 + (1.0 - z) * d);
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// `D̂_b(e^{−B})` over a `(b, B)` grid; entry `[i][j]` for `bs[i]`, `big_bs[j]`.
#[derive(Clone, Debug, Serialize)]
pub struct DhatSweep {
    pub bs: Vec<f64>,
    pub big_bs: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub sup: f64,
}

/// Horizon used for a tilted renewal table at tilt `b`.
pub fn horizon_for(b: f64) -> usize {
    ((40.0 / b).ceil() as usize).clamp(1024, 1 << 21)
}

pub fn dhat_sweep(law: &InterArrivalLaw, bs: &[f64], big_bs: &[f64]) -> Result<DhatSweep> {
    let mut values = Vec::with_capacity(bs.len());
    let mut sup = f64::NEG_INFINITY;
    for &b in bs {
        let n = horizon_for(b);
        let lb = crate::laws::tilt(&law.with_cache(n), b)?;
        let tab = crate::renewal::renewal_function(&lb, n, true)?;
        let mut row = Vec::with_capacity(big_bs.len());
        for &bb in big_bs {
            let v = eval_dhat(&tab, &lb, (-bb).exp())?.value;
            sup = sup.max(v);
            row.push(v);
        }
        values.push(row);
    }
    Ok(DhatSweep { bs: bs.to_vec(), big_bs: big_bs.to_vec(), values, sup })
}
