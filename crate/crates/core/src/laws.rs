//! Inter-arrival laws `K(n) = c(b) · norm · L(n) · e^{−bn} / n^{1+α}` and explicit table laws.

use crate::error::{Error, Result};
use crate::numerics::tail;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::E;

/// Number of leading terms summed explicitly before the analytic remainder takes over.
const HEAD: usize = 256;
/// Largest truncation point tried when certifying the normalization.
const MAX_CUT: u64 = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SvKind {
    Constant,
    LogPower,
}

/// Slowly varying factor: `c` or `c · (log(e + n))^γ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlowVariation {
    pub kind: SvKind,
    pub c: f64,
    pub gamma: f64,
}

impl SlowVariation {
    pub fn constant(c: f64) -> Self {
        SlowVariation { kind: SvKind::Constant, c, gamma: 0.0 }
    }

    pub fn log_power(gamma: f64) -> Self {
        SlowVariation { kind: SvKind::LogPower, c: 1.0, gamma }
    }

    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidInput(format!("L.c must be positive, got {}", self.c)));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidInput(format!("L.gamma must be nonnegative, got {}", self.gamma)));
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.kind {
            SvKind::Constant => self.c,
            SvKind::LogPower => self.c * (E + x).ln().powf(self.gamma),
        }
    }

    pub fn eval_c(&self, z: Complex64) -> Complex64 {
        match self.kind {
            SvKind::Constant => Complex64::new(self.c, 0.0),
            SvKind::LogPower => (z + E).ln().powf(self.gamma) * self.c,
        }
    }

    fn describe(&self) -> String {
        match self.kind {
            SvKind::Constant => format!("constant({})", self.c),
            SvKind::LogPower => format!("log-power({},{})", self.c, self.gamma),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LawKind {
    Power,
    Table,
}

#[derive(Clone, Debug)]
enum Shape {
    Power { alpha: f64, sv: SlowVariation },
    /// `head[i] = K(i + 1)`; beyond the head `K(len + m) = K(len) · ratio^m`.
    Table { head: Vec<f64>, ratio: Option<f64> },
}

/// A probability law on the positive integers with cached values `K(1..=n_max)`.
#[derive(Clone, Debug)]
pub struct InterArrivalLaw {
    shape: Shape,
    norm: f64,
    b: f64,
    cb: f64,
    cache: Vec<f64>,
    tail_tol: f64,
    tail_mass: f64,
    tail_bracket: (f64, f64),
    n_cut: u64,
}

impl InterArrivalLaw {
    pub fn kind(&self) -> LawKind {
        match self.shape {
            Shape::Power { .. } => LawKind::Power,
            Shape::Table { .. } => LawKind::Table,
        }
    }

    /// Tail exponent; `None` for table laws.
    pub fn alpha(&self) -> Option<f64> {
        match self.shape {
            Shape::Power { alpha, .. } => Some(alpha),
            Shape::Table { .. } => None,
        }
    }

    pub fn sv(&self) -> Option<SlowVariation> {
        match self.shape {
            Shape::Power { sv, .. } => Some(sv),
            Shape::Table { .. } => None,
        }
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn cb(&self) -> f64 {
        self.cb
    }

    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }

    pub fn n_max(&self) -> usize {
        self.cache.len() - 1
    }

    /// `Σ_{n > n_max} K(n)`.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Certified bracket on the normalization remainder (power laws), as a fraction of total mass.
    pub fn tail_bracket(&self) -> (f64, f64) {
        self.tail_bracket
    }

    /// Truncation point used to certify the normalization.
    pub fn n_cut(&self) -> u64 {
        self.n_cut
    }

    /// Cached values with `K[0] = 0`.
    pub fn cached(&self) -> &[f64] {
        &self.cache
    }

    pub fn id(&self) -> String {
        match &self.shape {
            Shape::Power { alpha, sv } => format!("power(alpha={alpha},L={},b={})", sv.describe(), self.b),
            Shape::Table { head, ratio } => {
                format!("table(len={},geo={:?},b={})", head.len(), ratio, self.b)
            }
        }
    }

    /// Total mass of the cached head plus the exact remainder.
    pub fn mass(&self) -> f64 {
        let head: f64 = self.cache[1..].iter().rev().sum();
        head + self.tail_mass
    }

    /// `K(n)` for any `n ≥ 1`, from the cache when possible.
    pub fn k(&self, n: u64) -> f64 {
        if n == 0 {
            return 0.0;
        }
        if (n as usize) < self.cache.len() {
            return self.cache[n as usize];
        }
        self.k_formula(n)
    }

    fn k_formula(&self, n: u64) -> f64 {
        match &self.shape {
            Shape::Power { alpha, sv } => {
                let x = n as f64;
                self.cb * self.norm * sv.eval(x) * (-self.b * x).exp() * x.powf(-1.0 - alpha)
            }
            Shape::Table { head, ratio } => {
                let len = head.len() as u64;
                if n <= len {
                    head[n as usize - 1]
                } else {
                    match ratio {
                        Some(r) => head[len as usize - 1] * r.powf((n - len) as f64),
                        None => 0.0,
                    }
                }
            }
        }
    }

    /// Analytic continuation of `K` off the integers (power laws only).
    pub fn k_complex(&self, x: Complex64) -> Complex64 {
        match &self.shape {
            Shape::Power { alpha, sv } => {
                sv.eval_c(x) * x.powf(-1.0 - alpha) * (-self.b * x).exp() * (self.cb * self.norm)
            }
            Shape::Table { .. } => panic!("k_complex is defined for power laws only"),
        }
    }

    /// `Σ_{n ≥ from} n^k K(n) e^{−s n}`, requiring `Re s + b ≥ 0` (and `Re s + b > 0` if the sum would diverge).
    pub fn series_from(&self, k: u32, s: Complex64, from: u64) -> Complex64 {
        let from = from.max(1);
        match &self.shape {
            Shape::Power { alpha, sv } => {
                let head_end = (HEAD as u64).max(from);
                let mut acc = Complex64::new(0.0, 0.0);
                for n in (from..head_end).rev() {
                    let nf = n as f64;
                    acc += (-s * nf).exp() * (self.k(n) * nf.powi(k as i32));
                }
                let pre = self.cb * self.norm;
                let a = *alpha;
                let sv = *sv;
                let g = move |x: Complex64| sv.eval_c(x) * x.powf(k as f64 - 1.0 - a) * pre;
                acc + tail::sum_from(&g, s + self.b, head_end)
            }
            Shape::Table { head, ratio } => {
                let len = head.len() as u64;
                let mut acc = Complex64::new(0.0, 0.0);
                for n in (from..=len).rev() {
                    let nf = n as f64;
                    acc += (-s * nf).exp() * (head[n as usize - 1] * nf.powi(k as i32));
                }
                if let Some(r) = ratio {
                    let start = from.max(len + 1);
                    // Σ_{n ≥ start} n^k h r^{n−len} e^{−s n}
                    let q = (-s).exp() * *r;
                    let h = head[len as usize - 1];
                    let base = q.powf((start - len) as f64) * (-s * len as f64).exp() * h;
                    acc += base * geometric_moment(k, q, start as f64);
                }
                acc
            }
        }
    }

    /// `Σ_{n≥1} n^k K(n) e^{−s n}`.
    pub fn series(&self, k: u32, s: Complex64) -> Complex64 {
        self.series_from(k, s, 1)
    }

    pub fn series_real(&self, k: u32, s: f64) -> f64 {
        self.series(k, Complex64::new(s, 0.0)).re
    }

    /// `Σ n K(n)`; `None` when infinite.
    pub fn mean(&self) -> Option<f64> {
        if !self.has_finite_mean() {
            return None;
        }
        Some(self.series_real(1, 0.0))
    }

    pub fn has_finite_mean(&self) -> bool {
        match &self.shape {
            Shape::Power { alpha, .. } => self.b > 0.0 || *alpha > 1.0,
            Shape::Table { .. } => true,
        }
    }

    /// Growth-safe check of the cache invariants (`K ≥ 0`, mass within `tail_tol`).
    pub fn check_invariants(&self) -> Result<()> {
        if self.cache[1..].iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::Invariant("negative or NaN cached K".into()));
        }
        let m = self.mass();
        if (m - 1.0).abs() > self.tail_tol.max(1e-12) {
            return Err(Error::Invariant(format!("mass {m} deviates from 1")));
        }
        Ok(())
    }
}

/// `Σ_{m≥0} (start + m)^k q^m` for `|q| < 1`.
fn geometric_moment(k: u32, q: Complex64, start: f64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let g0 = one / (one - q);
    match k {
        0 => g0,
        1 => g0 * start + q * g0 * g0,
        2 => {
            // Σ (s+m)² q^m = s² g0 + 2 s q g0² + q(1+q) g0³
            g0 * start * start + q * g0 * g0 * (2.0 * start) + q * (one + q) * g0 * g0 * g0
        }
        _ => {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut qm = one;
            let mut m = 0.0;
            loop {
                let t = qm * (start + m).powi(k as i32);
                acc += t;
                if t.norm() < 1e-18 * acc.norm() && m > 10.0 {
                    break acc;
                }
                qm *= q;
                m += 1.0;
            }
        }
    }
}

/// Normalized power law `K(n) = norm · L(n) / n^{1+α}`.
pub fn make_power_law(alpha: f64, sv: SlowVariation, n_max: usize, tail_tol: f64) -> Result<InterArrivalLaw> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidInput(format!("alpha must be positive, got {alpha}")));
    }
    sv.validate()?;
    if n_max < 64 {
        return Err(Error::InvalidInput(format!("n_max must be at least 64, got {n_max}")));
    }
    if !(tail_tol > 0.0 && tail_tol <= 1e-6) {
        return Err(Error::InvalidInput(format!("tail_tol must lie in (0, 1e-6], got {tail_tol}")));
    }
    let f = |x: f64| sv.eval(x) * x.powf(-1.0 - alpha);
    let g = move |x: Complex64| sv.eval_c(x) * x.powf(-1.0 - alpha);
    let zero = Complex64::new(0.0, 0.0);
    // f is decreasing beyond x once γ / log(e + x) < 1 + α
    let mono = |x: f64| match sv.kind {
        SvKind::Constant => true,
        SvKind::LogPower => sv.gamma / (E + x).ln() < 1.0 + alpha,
    };
    // Cut where the certified bracket (width ≈ f(N)) is below tail_tol relative to the total.
    let z_lower = f(1.0);
    let mut cut: u64 = 64;
    loop {
        let width = tail::integral_from(&g, zero, cut as f64).re - tail::integral_from(&g, zero, cut as f64 + 1.0).re;
        if mono(cut as f64) && width / z_lower <= tail_tol {
            break;
        }
        if cut >= MAX_CUT {
            return Err(Error::TailNotResolvable(format!(
                "bracket width {width:e} at N_cut = {cut} exceeds tail_tol {tail_tol:e}"
            )));
        }
        cut = (cut * 2).min(MAX_CUT);
    }
    let head: f64 = (1..=cut).rev().map(|n| f(n as f64)).sum();
    let rem = tail::sum_from_real(&g, 0.0, cut + 1);
    let lo = tail::integral_from(&g, zero, cut as f64 + 1.0).re;
    let hi = tail::integral_from(&g, zero, cut as f64).re;
    let slack = 1e-12 * hi;
    if !(rem >= lo - slack && rem <= hi + slack) {
        return Err(Error::Invariant(format!("remainder {rem} outside certified bracket [{lo}, {hi}]")));
    }
    let z = head + rem;
    let norm = 1.0 / z;
    let shape = Shape::Power { alpha, sv };
    let mut law = InterArrivalLaw {
        shape,
        norm,
        b: 0.0,
        cb: 1.0,
        cache: Vec::new(),
        tail_tol,
        tail_mass: 0.0,
        tail_bracket: (lo * norm, hi * norm),
        n_cut: cut,
    };
    law.fill_cache(n_max);
    Ok(law)
}

/// Table law `K(i + 1) = table[i]`, optionally continued by `K(len + m) = K(len) · ratio^m`.
pub fn make_table_law(table: &[f64], geo_tail: Option<f64>) -> Result<InterArrivalLaw> {
    if table.is_empty() || table.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidInput("table entries must be positive and finite".into()));
    }
    if let Some(r) = geo_tail {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::InvalidInput(format!("geometric tail ratio must lie in (0, 1), got {r}")));
        }
    }
    let head_mass: f64 = table.iter().sum();
    let tail = match geo_tail {
        Some(r) => table[table.len() - 1] * r / (1.0 - r),
        None => 0.0,
    };
    let total = head_mass + tail;
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::NotAProbability(total));
    }
    let mut law = InterArrivalLaw {
        shape: Shape::Table { head: table.to_vec(), ratio: geo_tail },
        norm: 1.0,
        b: 0.0,
        cb: 1.0,
        cache: Vec::new(),
        tail_tol: 1e-12,
        tail_mass: 0.0,
        tail_bracket: (0.0, 0.0),
        n_cut: table.len() as u64,
    };
    law.fill_cache(table.len().max(64));
    Ok(law)
}

/// Geometric law `K(n) = (1 − p) p^{n−1}` as a table law.
pub fn geometric(p: f64) -> Result<InterArrivalLaw> {
    make_table_law(&[1.0 - p], Some(p))
}

/// Point mass at 1.
pub fn deterministic() -> InterArrivalLaw {
    make_table_law(&[1.0], None).expect("valid deterministic law")
}

impl InterArrivalLaw {
    fn fill_cache(&mut self, n_max: usize) {
        let mut cache = vec![0.0; n_max + 1];
        for (n, c) in cache.iter_mut().enumerate().skip(1) {
            *c = self.k_formula(n as u64);
        }
        self.cache = cache;
        self.tail_mass = match &self.shape {
            Shape::Power { .. } => self.series_from(0, Complex64::new(0.0, 0.0), n_max as u64 + 1).re,
            Shape::Table { head, ratio } => {
                let len = head.len();
                match ratio {
                    Some(r) if n_max >= len => head[len - 1] * r.powf((n_max - len) as f64) * r / (1.0 - r),
                    Some(r) => head[n_max..].iter().sum::<f64>() + head[len - 1] * r / (1.0 - r),
                    None if n_max >= len => 0.0,
                    None => head[n_max..].iter().sum(),
                }
            }
        };
    }

    /// Same law with a larger (or smaller) cache.
    pub fn with_cache(&self, n_max: usize) -> InterArrivalLaw {
        let mut l = self.clone();
        l.fill_cache(n_max.max(1));
        l
    }
}

/// Exponentially tilted law `K_b(n) = c(b) e^{−bn} K(n)` with `c(b) = 1 / Σ K(n) e^{−bn}`.
pub fn tilt(law: &InterArrivalLaw, b: f64) -> Result<InterArrivalLaw> {
    if law.b != 0.0 {
        return Err(Error::InvalidInput("tilt expects an untilted law".into()));
    }
    if !(b >= 0.0 && b.is_finite()) {
        return Err(Error::InvalidInput(format!("tilt b must be nonnegative, got {b}")));
    }
    if b == 0.0 {
        return Ok(law.clone());
    }
    let n_max = law.n_max();
    match &law.shape {
        Shape::Power { .. } => {
            let z = law.series_real(0, b);
            let mut t = law.clone();
            t.b = b;
            t.cb = 1.0 / z;
            t.fill_cache(n_max);
            Ok(t)
        }
        Shape::Table { head, ratio } => {
            let eb = (-b).exp();
            let scaled: Vec<f64> = head.iter().enumerate().map(|(i, h)| h * eb.powi(i as i32 + 1)).collect();
            let new_ratio = ratio.map(|r| r * eb);
            let mut z: f64 = scaled.iter().sum();
            if let Some(r) = new_ratio {
                z += scaled[scaled.len() - 1] * r / (1.0 - r);
            }
            let cb = 1.0 / z;
            let mut t = law.clone();
            t.shape = Shape::Table { head: scaled.iter().map(|v| v * cb).collect(), ratio: new_ratio };
            t.b = b;
            t.cb = cb;
            t.fill_cache(n_max);
            Ok(t)
        }
    }
}

/// Outcome of the (2.11)-type condition test.
#[derive(Clone, Debug, Serialize)]
pub struct IrrelevanceReport {
    pub holds: bool,
    /// `(n, Σ_{m≤n} 1/(m L(m)²))` on a decade grid.
    pub partial_sums: Vec<(u64, f64)>,
    /// Value of the series when it converges.
    pub series_value: Option<f64>,
}

/// `α < 1/2`, or `α = 1/2` with `Σ 1/(n L(n)²) < ∞`.
pub fn check_irrelevance_condition(law: &InterArrivalLaw) -> Result<IrrelevanceReport> {
    let (alpha, sv) = match law.shape {
        Shape::Power { alpha, sv } => (alpha, sv),
        Shape::Table { .. } => return Err(Error::UnsupportedL("table laws carry no asymptotic form".into())),
    };
    if law.b != 0.0 {
        return Err(Error::InvalidInput("condition is stated for the untilted law".into()));
    }
    let term = |n: f64| 1.0 / (n * sv.eval(n).powi(2));
    let mut partial_sums = Vec::new();
    let mut s = 0.0;
    let mut next = 10u64;
    for n in 1..=1_000_000u64 {
        s += term(n as f64);
        if n == next {
            partial_sums.push((n, s));
            next *= 10;
        }
    }
    let convergent = match sv.kind {
        SvKind::Constant => false,
        SvKind::LogPower => 2.0 * sv.gamma > 1.0,
    };
    let series_value = if convergent {
        let g = move |x: Complex64| (x * sv.eval_c(x).powi(2)).inv();
        let head: f64 = (1..HEAD as u64).rev().map(|n| term(n as f64)).sum();
        Some(head + tail::sum_from_real(&g, 0.0, HEAD as u64))
    } else {
        None
    };
    let holds = alpha < 0.5 || (alpha == 0.5 && convergent);
    Ok(IrrelevanceReport { holds, partial_sums, series_value })
}
