//! Quenched Monte Carlo for the disordered pinning model `Z_{N,ω}`.

use crate::error::{Error, Result};
use crate::homogeneous::{free_energy, homogeneous_log_partition};
use crate::intersection::{deconvolve, square_renewal};
use crate::laws::InterArrivalLaw;
use crate::numerics::conv;
use crate::numerics::stats::{log_mean_exp, mean, shifted_mean, std_err, tree_sum};
use crate::renewal::renewal_function;
use crate::replica::log_w;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

/// Pinned in every report: sample `i` uses `ChaCha8Rng::seed_from_u64(base_seed + i)` and
/// `StandardNormal` draws for `ω_1..ω_N` in order.
pub const GENERATOR_TAG: &str = "chacha8/rand_distr-0.5/StandardNormal";

/// Stream used for path sampling, so paths never reuse disorder draws.
const PATH_STREAM: u64 = 1;

#[derive(Clone, Debug)]
pub struct DisorderSample {
    pub seed: u64,
    /// `omega[n − 1] = ω_n`.
    pub omega: Vec<f64>,
}

impl DisorderSample {
    pub fn generate(seed: u64, n: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let omega = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        DisorderSample { seed, omega }
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }
}

/// `K(0..=N)` with its reverse and logarithm.
struct Kernel {
    k: Vec<f64>,
    krev: Vec<f64>,
    lnk: Vec<f64>,
}

impl Kernel {
    fn new(law: &InterArrivalLaw, n: usize) -> Self {
        let k: Vec<f64> = (0..=n as u64).map(|j| law.k(j)).collect();
        let krev = k.iter().rev().cloned().collect();
        let lnk = k.iter().map(|v| v.ln()).collect();
        Kernel { k, krev, lnk }
    }

    fn n(&self) -> usize {
        self.k.len() - 1
    }
}

/// `log Z_{0,n}` for `n = 0..=N`.
#[derive(Clone, Debug)]
pub struct Forward {
    pub log_z: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct QuenchedPartition {
    pub log_z: f64,
    pub forward: Forward,
}

fn site_log_weight(beta: f64, h: f64, omega: &DisorderSample, n: usize) -> f64 {
    beta * omega.omega[n - 1] + h
}

fn forward_with(kern: &Kernel, beta: f64, h: f64, omega: &DisorderSample) -> Forward {
    let n = kern.n();
    let mut z = vec![0.0; n + 1];
    let mut log_z = vec![0.0; n + 1];
    z[0] = 1.0;
    let mut log_scale = 0.0;
    for p in 1..=n {
        let s = conv::dot(&z[..p], &kern.krev[n - p..n]);
        let lw = site_log_weight(beta, h, omega, p);
        z[p] = lw.exp() * s;
        log_z[p] = s.ln() + lw + log_scale;
        let a = z[p];
        if a > 0.0 && !(1e-100..=1e100).contains(&a) {
            let sh = a.ln();
            let f = (-sh).exp();
            z[..=p].iter_mut().for_each(|v| *v *= f);
            log_scale += sh;
        }
    }
    Forward { log_z }
}

/// `Z_0 = 1`, `Z_n = e^{βω_n + h} Σ_{j<n} Z_j K(n − j)`; the horizon is the disorder length.
pub fn quenched_log_partition(law: &InterArrivalLaw, beta: f64, h: f64, omega: &DisorderSample) -> Result<QuenchedPartition> {
    if omega.is_empty() {
        return Err(Error::InvalidInput("empty disorder sample".into()));
    }
    let kern = Kernel::new(law, omega.len());
    let forward = forward_with(&kern, beta, h, omega);
    Ok(QuenchedPartition { log_z: *forward.log_z.last().unwrap(), forward })
}

/// `log Z^{m,N}` for `m ∈ [m_min, N]`: the pinned partition function on `[m, N]` with the
/// weights of sites `m+1..=N`. Entries below `m_min` are NaN.
fn backward_with(kern: &Kernel, beta: f64, h: f64, omega: &DisorderSample, m_min: usize) -> Vec<f64> {
    let n = kern.n();
    let mut log_y = vec![f64::NAN; n + 1];
    // v[k] = e^{βω_k + h} Y_k in a common scale
    let mut v = vec![0.0; n + 1];
    log_y[n] = 0.0;
    v[n] = site_log_weight(beta, h, omega, n).exp();
    let mut log_scale = 0.0;
    for m in (m_min..n).rev() {
        let y = conv::dot(&kern.k[1..=n - m], &v[m + 1..=n]);
        log_y[m] = y.ln() + log_scale;
        if m == 0 {
            break;
        }
        v[m] = site_log_weight(beta, h, omega, m).exp() * y;
        let a = v[m];
        if a > 0.0 && !(1e-100..=1e100).contains(&a) {
            let sh = a.ln();
            let f = (-sh).exp();
            v[m..].iter_mut().for_each(|x| *x *= f);
            log_scale += sh;
        }
    }
    log_y
}

/// `P_{N,ω}(n ∈ τ) = Z_{0,n} Z^{n,N} / Z_{0,N}`.
pub fn contact_probability(
    forward: &Forward,
    law: &InterArrivalLaw,
    beta: f64,
    h: f64,
    omega: &DisorderSample,
    n: usize,
) -> Result<f64> {
    let big_n = omega.len();
    if n < 1 || n > big_n || forward.log_z.len() != big_n + 1 {
        return Err(Error::InvalidInput(format!("site {n} outside 1..={big_n}")));
    }
    let kern = Kernel::new(law, big_n);
    let log_y = backward_with(&kern, beta, h, omega, n);
    Ok(contact_from(forward, &log_y, n))
}

fn contact_from(forward: &Forward, log_y: &[f64], n: usize) -> f64 {
    let big_n = forward.log_z.len() - 1;
    (forward.log_z[n] + log_y[n] - forward.log_z[big_n]).exp().clamp(0.0, 1.0)
}

/// `P_{N,ω}(n ∈ τ)` for every `n ∈ 0..=N`.
pub fn contact_profile(law: &InterArrivalLaw, beta: f64, h: f64, omega: &DisorderSample) -> Result<Vec<f64>> {
    let kern = Kernel::new(law, omega.len());
    let fwd = forward_with(&kern, beta, h, omega);
    let log_y = backward_with(&kern, beta, h, omega, 0);
    Ok((0..=omega.len()).map(|m| contact_from(&fwd, &log_y, m)).collect())
}

/// Exact backward sampling of `τ ∩ [0, N]` under `P_{N,ω}`; returns the sorted points including 0 and N.
pub fn sample_path(
    forward: &Forward,
    law: &InterArrivalLaw,
    beta: f64,
    h: f64,
    omega: &DisorderSample,
    seed: u64,
) -> Result<Vec<usize>> {
    let kern = Kernel::new(law, omega.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(PATH_STREAM);
    Ok(sample_with(&kern, forward, beta, h, omega, &mut rng))
}

fn sample_with(kern: &Kernel, forward: &Forward, beta: f64, h: f64, omega: &DisorderSample, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let lz = &forward.log_z;
    let mut pts = vec![kern.n()];
    let mut n = kern.n();
    while n > 0 {
        // Σ_j Z_j K(n − j) = Z_n e^{−(βω_n + h)}
        let total = lz[n] - site_log_weight(beta, h, omega, n);
        let target: f64 = rng.random();
        let mut acc = 0.0;
        let mut pick = None;
        let mut last_pos = 0;
        for j in (0..n).rev() {
            let w = (lz[j] + kern.lnk[n - j] - total).exp();
            if w > 0.0 {
                last_pos = j;
            }
            acc += w;
            if acc > target {
                pick = Some(j);
                break;
            }
        }
        n = pick.unwrap_or(last_pos);
        pts.push(n);
    }
    pts.reverse();
    pts
}

/// `max{j − i : 1 ≤ i < j ≤ N, τ ∩ {i..j} = ∅}`.
pub fn largest_gap(points: &[usize]) -> usize {
    points.windows(2).map(|w| (w[1] - w[0]).saturating_sub(2)).max().unwrap_or(0)
}

#[derive(Clone, Debug, Serialize)]
pub struct QuenchedRun {
    pub beta: f64,
    pub h: f64,
    pub n: usize,
    pub n_samples: usize,
    pub base_seed: u64,
    pub generator: String,
    pub log_z: Vec<f64>,
    /// `1/Z` per sample divided by `e^{inv_z_log_scale}`.
    pub inv_z_scaled: Vec<f64>,
    pub inv_z_log_scale: f64,
    pub f_hat: f64,
    pub f_se: f64,
    pub mu_hat: f64,
    pub mu_se: f64,
    /// `(1/N) log mean(Z)` on the same samples.
    pub annealed_hat: f64,
}

fn summarize(beta: f64, h: f64, n: usize, base_seed: u64, log_z: Vec<f64>) -> Result<QuenchedRun> {
    let ns = log_z.len();
    if ns < 2 {
        return Err(Error::InvalidInput("need at least 2 samples".into()));
    }
    if beta != 0.0 && log_z.iter().all(|&v| v == log_z[0]) {
        return Err(Error::DegenerateVariance);
    }
    let nf = n as f64;
    let neg: Vec<f64> = log_z.iter().map(|v| -v).collect();
    let inv_z_log_scale = neg.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let inv_z_scaled: Vec<f64> = neg.iter().map(|v| (v - inv_z_log_scale).exp()).collect();
    let f_hat = shifted_mean(&log_z) / nf;
    let mu_hat = -log_mean_exp(&neg) / nf;
    let annealed_hat = log_mean_exp(&log_z) / nf;
    if !(mu_hat <= f_hat && f_hat <= annealed_hat) {
        return Err(Error::Invariant(format!("Jensen chain broken: {mu_hat} ≤ {f_hat} ≤ {annealed_hat}")));
    }
    let f_se = std_err(&log_z) / nf;
    let mu_se = jackknife_se(&neg, log_mean_exp) / nf;
    Ok(QuenchedRun {
        beta,
        h,
        n,
        n_samples: ns,
        base_seed,
        generator: GENERATOR_TAG.into(),
        log_z,
        inv_z_scaled,
        inv_z_log_scale,
        f_hat,
        f_se,
        mu_hat,
        mu_se,
        annealed_hat,
    })
}

fn jackknife_se<F: Fn(&[f64]) -> f64>(xs: &[f64], stat: F) -> f64 {
    let n = xs.len();
    let mut buf = Vec::with_capacity(n - 1);
    let leave: Vec<f64> = (0..n)
        .map(|i| {
            buf.clear();
            buf.extend(xs[..i].iter().chain(&xs[i + 1..]));
            stat(&buf)
        })
        .collect();
    let m = mean(&leave);
    let d: Vec<f64> = leave.iter().map(|v| (v - m) * (v - m)).collect();
    (tree_sum(&d) * (n as f64 - 1.0) / n as f64).sqrt()
}

fn sample_seed(base: u64, i: usize) -> u64 {
    base.wrapping_add(i as u64)
}

/// `F̂ = mean(log Z)/N`, `μ̂ = −(1/N) log mean(1/Z)` over seeds `base_seed + i`.
pub fn estimate_f_and_mu(
    law: &InterArrivalLaw,
    beta: f64,
    h: f64,
    n: usize,
    n_samples: usize,
    base_seed: u64,
) -> Result<QuenchedRun> {
    if n < 1 || n_samples < 2 {
        return Err(Error::InvalidInput("need N ≥ 1 and at least 2 samples".into()));
    }
    let kern = Kernel::new(law, n);
    let log_z: Vec<f64> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let om = DisorderSample::generate(sample_seed(base_seed, i), n);
            *forward_with(&kern, beta, h, &om).log_z.last().unwrap()
        })
        .collect();
    summarize(beta, h, n, base_seed, log_z)
}

/// Annealed critical point `h_c^a(β) = −β²/2`.
pub fn annealed_critical_point(beta: f64) -> f64 {
    -0.5 * beta * beta
}

#[derive(Clone, Debug, Serialize)]
pub struct GapRow {
    pub n: usize,
    pub f_hat: f64,
    pub f_se: f64,
    pub mu_hat: f64,
    pub inv_mu: f64,
    pub median_ratio: f64,
    pub max_gap: usize,
    pub within: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GapReport {
    pub eps: f64,
    pub rows: Vec<GapRow>,
    /// Verdict at the largest `N`.
    pub passed: bool,
}

/// Median of `Δ_N / log N` over one sampled path per disorder realization, against `1/μ̂`.
pub fn largest_gap_experiment(
    law: &InterArrivalLaw,
    beta: f64,
    h: f64,
    n_list: &[usize],
    n_samples: usize,
    base_seed: u64,
    eps: f64,
) -> Result<GapReport> {
    if law.k(1) == 1.0 {
        return Err(Error::NotApplicable("deterministic law has no gaps".into()));
    }
    let mut rows = Vec::new();
    for &n in n_list {
        let kern = Kernel::new(law, n);
        let per: Vec<(f64, usize)> = (0..n_samples)
            .into_par_iter()
            .map(|i| {
                let seed = sample_seed(base_seed, i);
                let om = DisorderSample::generate(seed, n);
                let fwd = forward_with(&kern, beta, h, &om);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(PATH_STREAM);
                let path = sample_with(&kern, &fwd, beta, h, &om, &mut rng);
                (*fwd.log_z.last().unwrap(), largest_gap(&path))
            })
            .collect();
        let run = summarize(beta, h, n, base_seed, per.iter().map(|p| p.0).collect())?;
        if run.f_hat <= 2.0 * run.f_se {
            return Err(Error::NotLocalized(format!("F̂ = {} ± {} at N = {n}", run.f_hat, run.f_se)));
        }
        let mut ratios: Vec<f64> = per.iter().map(|p| p.1 as f64 / (n as f64).ln()).collect();
        ratios.sort_by(f64::total_cmp);
        let m = ratios.len();
        let median = if m % 2 == 1 { ratios[m / 2] } else { 0.5 * (ratios[m / 2 - 1] + ratios[m / 2]) };
        let inv_mu = 1.0 / run.mu_hat;
        rows.push(GapRow {
            n,
            f_hat: run.f_hat,
            f_se: run.f_se,
            mu_hat: run.mu_hat,
            inv_mu,
            median_ratio: median,
            max_gap: per.iter().map(|p| p.1).max().unwrap_or(0),
            within: median >= (1.0 - eps) * inv_mu && median <= (1.0 + eps) * inv_mu,
        });
    }
    let passed = rows.last().is_some_and(|r| r.within);
    Ok(GapReport { eps, rows, passed })
}

/// Exact right-hand sides `−((e^{1/M} − 1)/2) (1/N) log[W_N((1 + M)β²) / W_N(0)]` built on
/// the intersection law of `K_{F(0,Δ)}`.
pub fn interpolation_rhs(law: &InterArrivalLaw, beta: f64, delta: f64, n: usize, ms: &[f64]) -> Result<Vec<(f64, f64)>> {
    if ms.iter().any(|&m| !(m > 0.0)) {
        return Err(Error::InvalidInput("M must be positive".into()));
    }
    if beta == 0.0 {
        return Ok(ms.iter().map(|&m| (m, 0.0)).collect());
    }
    let base = if law.n_max() >= n { law.clone() } else { law.with_cache(n) };
    let sol = free_energy(&base, delta, 1e-14)?;
    let u = renewal_function(&sol.tilted, n, true)?;
    let kk = deconvolve(&square_renewal(&u), 1e-9)?;
    let w0 = log_w(&kk.kk, 0.0, n)?;
    ms.iter()
        .map(|&m| {
            let wl = log_w(&kk.kk, (1.0 + m) * beta * beta, n)?;
            Ok((m, -0.5 * (1.0 / m).exp_m1() * (wl - w0) / n as f64))
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct InterpolationRow {
    pub m: f64,
    pub rhs: f64,
    /// `(lhs − rhs) / SE`.
    pub margin_sigmas: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct InterpolationReport {
    pub delta: f64,
    pub lhs: f64,
    pub lhs_se: f64,
    /// `F_N(0, Δ)`, exact.
    pub f_n_homogeneous: f64,
    pub rows: Vec<InterpolationRow>,
}

fn interpolation_from_run(law: &InterArrivalLaw, run: &QuenchedRun, delta: f64, ms: &[f64]) -> Result<InterpolationReport> {
    let n = run.n;
    let f_n0 = homogeneous_log_partition(law, delta, n) / n as f64;
    let lhs = run.f_hat - f_n0;
    let se = run.f_se;
    let rows = interpolation_rhs(law, run.beta, delta, n, ms)?
        .into_iter()
        .map(|(m, rhs)| InterpolationRow {
            m,
            rhs,
            margin_sigmas: if se > 0.0 { (lhs - rhs) / se } else { f64::INFINITY * (lhs - rhs).signum() },
            holds: lhs >= rhs - 3.0 * se,
        })
        .collect();
    Ok(InterpolationReport { delta, lhs, lhs_se: se, f_n_homogeneous: f_n0, rows })
}

/// `F̂_N(β, h_c^a + Δ) − F_N(0, Δ) ≥ rhs(M) − 3 SE`.
pub fn interpolation_bound_check(
    law: &InterArrivalLaw,
    beta: f64,
    delta: f64,
    n: usize,
    n_samples: usize,
    base_seed: u64,
    ms: &[f64],
) -> Result<InterpolationReport> {
    let run = estimate_f_and_mu(law, beta, annealed_critical_point(beta) + delta, n, n_samples, base_seed)?;
    interpolation_from_run(law, &run, delta, ms)
}

#[derive(Clone, Debug, Serialize)]
pub struct Theorem23Row {
    pub delta: f64,
    pub f0: f64,
    pub df: f64,
    /// `(1/N) log E Z_N`, exact.
    pub annealed_n: f64,
    pub f_hat: f64,
    pub f_se: f64,
    pub mu_hat: f64,
    pub mu_se: f64,
    pub annealed_hat: f64,
    /// `F(0,Δ) − 9β²(∂F)²`.
    pub lower_mu: f64,
    /// `F(0,Δ) − (β²/2)(∂F)²`, the `C = 0` value of the upper endpoint.
    pub upper_c0: f64,
    /// `F(0,Δ) − (1 + ε)(β²/2)(∂F)²`.
    pub lower_eps: f64,
    /// `C` solving `F̂ = F(0,Δ) − (β²/2)(1 − Cβ²)(∂F)²`; reported only.
    pub fitted_c: f64,
    /// `F̂ − (1/N) log u₀(N)`, reported at `Δ = 0`.
    pub gap_to_log_u0: Option<f64>,
    pub interpolation_lhs: Option<f64>,
    pub interpolation_rhs: Option<f64>,
    pub signal_below_noise: bool,
    pub annealed_ok: bool,
    pub interpolation_ok: Option<bool>,
    pub sandwich_ok: bool,
}

/// Five-way comparison at `h = h_c^a(β) + Δ` for each `Δ`.
#[allow(clippy::too_many_arguments)]
pub fn theorem23_experiment(
    law: &InterArrivalLaw,
    beta: f64,
    deltas: &[f64],
    n: usize,
    n_samples: usize,
    base_seed: u64,
    eps: f64,
    with_interpolation: bool,
) -> Result<Vec<Theorem23Row>> {
    let mut rows = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        if delta < 0.0 {
            return Err(Error::InvalidInput("Δ must be nonnegative".into()));
        }
        let sol = free_energy(law, delta, 1e-14)?;
        let (f0, df) = (sol.f, sol.df);
        let run = estimate_f_and_mu(law, beta, annealed_critical_point(beta) + delta, n, n_samples, base_seed)?;
        let annealed_n = homogeneous_log_partition(law, delta, n) / n as f64;
        let b2 = beta * beta;
        let s = b2 * df * df;
        let gap_to_log_u0 = if delta == 0.0 {
            let base = if law.n_max() >= n { law.clone() } else { law.with_cache(n) };
            let u0 = renewal_function(&base, n, true)?;
            Some(run.f_hat - u0.u[n].ln() / n as f64)
        } else {
            None
        };
        let (il, ir, iok) = if with_interpolation {
            let rep = interpolation_from_run(law, &run, delta, &[1.0])?;
            (Some(rep.lhs), Some(rep.rows[0].rhs), Some(rep.rows[0].holds))
        } else {
            (None, None, None)
        };
        let lower_mu = f0 - 9.0 * s;
        rows.push(Theorem23Row {
            delta,
            f0,
            df,
            annealed_n,
            f_hat: run.f_hat,
            f_se: run.f_se,
            mu_hat: run.mu_hat,
            mu_se: run.mu_se,
            annealed_hat: run.annealed_hat,
            lower_mu,
            upper_c0: f0 - 0.5 * s,
            lower_eps: f0 - (1.0 + eps) * 0.5 * s,
            fitted_c: if s > 0.0 { (1.0 - 2.0 * (f0 - run.f_hat) / s) / b2 } else { f64::NAN },
            gap_to_log_u0,
            interpolation_lhs: il,
            interpolation_rhs: ir,
            signal_below_noise: s < 3.0 * run.f_se,
            annealed_ok: run.f_hat <= annealed_n + 3.0 * run.f_se,
            interpolation_ok: iok,
            sandwich_ok: run.mu_hat <= run.f_hat && run.mu_hat >= lower_mu - 3.0 * run.mu_se,
        });
    }
    Ok(rows)
}

#[derive(Clone, Debug, Serialize)]
pub struct Prop26Row {
    pub n: usize,
    pub f_hat: f64,
    pub f_se: f64,
    pub log_u0_over_n: f64,
    pub gap: f64,
    pub n_gap: f64,
    pub n_gap_se: f64,
    /// `log u₀(N) / (−(1 − α) log N)`.
    pub annealed_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Prop26Report {
    pub rows: Vec<Prop26Row>,
    /// `N·gap` growth over the top octave and its combined standard error.
    pub top_growth: f64,
    pub top_growth_se: f64,
    pub bounded: bool,
    /// `N·gap` increases at every step of the grid.
    pub monotone: bool,
}

/// `N |F̂_N(β, h_c^a) − (1/N) log u₀(N)|` over a grid of `N`.
pub fn prop26_experiment(law: &InterArrivalLaw, beta: f64, n_list: &[usize], n_samples: usize, base_seed: u64) -> Result<Prop26Report> {
    let alpha = law.alpha().ok_or_else(|| Error::NotApplicable("needs a power law".into()))?;
    if n_list.len() < 2 {
        return Err(Error::InvalidInput("need at least two N".into()));
    }
    let n_top = *n_list.iter().max().unwrap();
    let base = if law.n_max() >= n_top { law.clone() } else { law.with_cache(n_top) };
    let u0 = renewal_function(&base, n_top, true)?;
    let mut rows = Vec::new();
    for &n in n_list {
        let run = estimate_f_and_mu(law, beta, annealed_critical_point(beta), n, n_samples, base_seed)?;
        let lu = u0.u[n].ln();
        let gap = (run.f_hat - lu / n as f64).abs();
        rows.push(Prop26Row {
            n,
            f_hat: run.f_hat,
            f_se: run.f_se,
            log_u0_over_n: lu / n as f64,
            gap,
            n_gap: n as f64 * gap,
            n_gap_se: n as f64 * run.f_se,
            annealed_ratio: lu / (-(1.0 - alpha) * (n as f64).ln()),
        });
    }
    let (a, b) = (&rows[rows.len() - 2], &rows[rows.len() - 1]);
    let top_growth = b.n_gap - a.n_gap;
    let top_growth_se = (a.n_gap_se.powi(2) + b.n_gap_se.powi(2)).sqrt();
    let monotone = rows.windows(2).all(|w| w[1].n_gap > w[0].n_gap);
    Ok(Prop26Report { top_growth, top_growth_se, bounded: top_growth <= 3.0 * top_growth_se, monotone, rows })
}

#[derive(Clone, Debug, Serialize)]
pub struct MultifractalRow {
    pub delta: f64,
    pub r: f64,
    pub r_se: f64,
    pub mean_p: f64,
    pub f_hat: f64,
    pub f_se: f64,
    pub signal_below_noise: bool,
    pub bounded: bool,
}

/// `R(Δ) = mean[P(⌊N/2⌋ ∈ τ)²] / mean[P(⌊N/2⌋ ∈ τ)]²` with a jackknife error.
#[allow(clippy::too_many_arguments)]
pub fn multifractal_ratio(
    law: &InterArrivalLaw,
    beta: f64,
    deltas: &[f64],
    n: usize,
    n_samples: usize,
    base_seed: u64,
    ceiling: f64,
) -> Result<Vec<MultifractalRow>> {
    if n < 2 || n_samples < 2 {
        return Err(Error::InvalidInput("need N ≥ 2 and at least 2 samples".into()));
    }
    let mid = n / 2;
    let kern = Kernel::new(law, n);
    let mut rows = Vec::new();
    for &delta in deltas {
        let h = annealed_critical_point(beta) + delta;
        let per: Vec<(f64, f64)> = (0..n_samples)
            .into_par_iter()
            .map(|i| {
                let om = DisorderSample::generate(sample_seed(base_seed, i), n);
                let fwd = forward_with(&kern, beta, h, &om);
                let ly = backward_with(&kern, beta, h, &om, mid);
                (*fwd.log_z.last().unwrap(), contact_from(&fwd, &ly, mid))
            })
            .collect();
        let run = summarize(beta, h, n, base_seed, per.iter().map(|p| p.0).collect())?;
        let ps: Vec<f64> = per.iter().map(|p| p.1).collect();
        let (r, r_se) = ratio_with_jackknife(&ps);
        let df = free_energy(law, delta, 1e-14)?.df;
        rows.push(MultifractalRow {
            delta,
            r,
            r_se,
            mean_p: mean(&ps),
            f_hat: run.f_hat,
            f_se: run.f_se,
            signal_below_noise: beta * beta * df * df < 3.0 * run.f_se,
            bounded: r <= ceiling,
        });
    }
    Ok(rows)
}

/// `1 + var(P)/mean(P)²` (biased variance), exactly 1 for constant input.
fn second_moment_ratio(ps: &[f64]) -> f64 {
    let m = mean(ps);
    if m == 0.0 {
        return f64::NAN;
    }
    let d: Vec<f64> = ps.iter().map(|p| (p - m) * (p - m)).collect();
    1.0 + mean(&d) / (m * m)
}

fn ratio_with_jackknife(ps: &[f64]) -> (f64, f64) {
    (second_moment_ratio(ps), jackknife_se(ps, second_moment_ratio))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::{deterministic, geometric, make_power_law, SlowVariation};

    fn a03(n: usize) -> InterArrivalLaw {
        make_power_law(0.3, SlowVariation::constant(1.0), n, 1e-8).unwrap()
    }

    #[test]
    fn disorder_is_reproducible() {
        let a = DisorderSample::generate(7, 100);
        let b = DisorderSample::generate(7, 100);
        assert_eq!(a.omega, b.omega);
        assert_ne!(a.omega, DisorderSample::generate(8, 100).omega);
    }

    #[test]
    fn trivial_partitions() {
        let law = a03(512);
        let om = DisorderSample::generate(1, 300);
        let q = quenched_log_partition(&law, 0.0, 0.2, &om).unwrap();
        assert!((q.log_z - homogeneous_log_partition(&law, 0.2, 300)).abs() < 1e-10);
        let one = DisorderSample::generate(3, 1);
        let q = quenched_log_partition(&law, 0.7, 0.1, &one).unwrap();
        assert!((q.log_z - (0.7 * one.omega[0] + 0.1 + law.k(1).ln())).abs() < 1e-14);
        let d = deterministic();
        let q = quenched_log_partition(&d, 0.5, -0.3, &om).unwrap();
        let exact: f64 = om.omega.iter().map(|w| 0.5 * w - 0.3).sum();
        assert!((q.log_z - exact).abs() < 1e-9);
    }

    #[test]
    fn contact_probabilities() {
        let law = a03(512);
        let n = 400;
        let om = DisorderSample::generate(5, n);
        let prof = contact_profile(&law, 0.0, 0.0, &om).unwrap();
        let u = renewal_function(&law, n, false).unwrap();
        for m in [1, 50, 200, 399] {
            let exact = u.u[m] * u.u[n - m] / u.u[n];
            assert!((prof[m] - exact).abs() < 1e-12, "m={m}");
        }
        assert_eq!(prof[n], 1.0);
        let prof = contact_profile(&law, 0.8, 0.1, &om).unwrap();
        assert!(prof.iter().all(|p| (0.0..=1.0).contains(p)));
        assert_eq!(prof[n], 1.0);
        let fwd = quenched_log_partition(&law, 0.8, 0.1, &om).unwrap().forward;
        assert!((contact_probability(&fwd, &law, 0.8, 0.1, &om, 123).unwrap() - prof[123]).abs() < 1e-12);
        let d = deterministic();
        assert!(contact_profile(&d, 0.8, 0.1, &om).unwrap().iter().all(|p| (p - 1.0).abs() < 1e-12));
    }

    #[test]
    fn paths() {
        let d = deterministic();
        let om = DisorderSample::generate(2, 30);
        let fwd = quenched_log_partition(&d, 0.3, 0.0, &om).unwrap().forward;
        assert_eq!(sample_path(&fwd, &d, 0.3, 0.0, &om, 9).unwrap(), (0..=30).collect::<Vec<_>>());
        assert_eq!(largest_gap(&[0, 1, 5, 6]), 2);
        assert_eq!(largest_gap(&[0, 1, 2]), 0);
    }

    #[test]
    fn beta_zero_collapses() {
        let law = a03(256);
        let run = estimate_f_and_mu(&law, 0.0, 0.3, 200, 4, 11).unwrap();
        let exact = homogeneous_log_partition(&law, 0.3, 200) / 200.0;
        assert!((run.f_hat - exact).abs() < 1e-9);
        assert_eq!(run.f_hat, run.mu_hat);
        assert_eq!(run.f_se, 0.0);
        let rows = multifractal_ratio(&law, 0.0, &[0.3], 200, 4, 1, 10.0).unwrap();
        assert_eq!(rows[0].r, 1.0);
        let g = geometric(0.5).unwrap();
        let rows = interpolation_rhs(&g, 0.0, 0.2, 100, &[1.0, 4.0]).unwrap();
        assert!(rows.iter().all(|r| r.1 == 0.0));
    }

    #[test]
    fn jensen_chain_and_determinism() {
        let law = a03(256);
        let a = estimate_f_and_mu(&law, 0.5, 0.0, 256, 16, 42).unwrap();
        let b = estimate_f_and_mu(&law, 0.5, 0.0, 256, 16, 42).unwrap();
        assert_eq!(a.log_z, b.log_z);
        assert!(a.mu_hat <= a.f_hat && a.f_hat <= a.annealed_hat);
        assert!(a.inv_z_scaled.iter().all(|v| *v > 0.0 && *v <= 1.0));
    }
}
