//! Renewal functions `u(n) = P(n ∈ τ)` from the discrete renewal equation.

use crate::error::{Error, Result};
use crate::laws::{InterArrivalLaw, LawKind};
use crate::numerics::conv;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;

/// `u(0..=N)` together with its limit `u(∞)`.
#[derive(Clone, Debug)]
pub struct RenewalTable {
    pub u: Vec<f64>,
    pub u_inf: f64,
    pub law_ref: String,
    law: Option<Arc<InterArrivalLaw>>,
    squared: bool,
}

impl RenewalTable {
    /// A table from raw values; no generating law is attached.
    pub fn from_values(u: Vec<f64>, u_inf: f64, law_ref: impl Into<String>) -> Self {
        RenewalTable { u, u_inf, law_ref: law_ref.into(), law: None, squared: false }
    }

    pub fn horizon(&self) -> usize {
        self.u.len() - 1
    }

    /// The law the table was generated from, if known.
    pub fn law(&self) -> Option<&InterArrivalLaw> {
        self.law.as_deref()
    }

    /// Inverse of squaring: `u(n) = √U(n)`, keeping the attached law.
    pub(crate) fn root_of(t: &RenewalTable) -> RenewalTable {
        if !t.squared {
            return t.clone();
        }
        RenewalTable {
            u: t.u.iter().map(|v| v.sqrt()).collect(),
            u_inf: t.u_inf.sqrt(),
            law_ref: t.law.as_ref().map_or_else(|| t.law_ref.clone(), |l| l.id()),
            law: t.law.clone(),
            squared: false,
        }
    }

    /// Whether the values are `u(n)²` of the attached law.
    pub fn is_squared(&self) -> bool {
        self.squared
    }

    pub(crate) fn squared_of(t: &RenewalTable) -> RenewalTable {
        RenewalTable {
            u: t.u.iter().map(|v| v * v).collect(),
            u_inf: t.u_inf * t.u_inf,
            law_ref: format!("square({})", t.law_ref),
            law: t.law.clone(),
            squared: true,
        }
    }

    /// `u(n) − Σ_{j=1..n} K(j) u(n−j)` for every `n ≥ 1` (entry 0 is `u(0) − 1`).
    pub fn residuals(&self) -> Option<Vec<f64>> {
        let law = self.law.as_ref()?;
        if self.squared {
            return None;
        }
        let n = self.horizon();
        let k: Vec<f64> = (0..=n as u64).map(|j| law.k(j)).collect();
        let c = conv::linear(&k, &self.u, n + 1);
        let mut r: Vec<f64> = self.u.iter().zip(&c).map(|(u, s)| u - s).collect();
        r[0] = self.u[0] - 1.0;
        Some(r)
    }
}

/// Solve the renewal equation up to `n`. With `accel` the self-referential convolution uses
/// divide-and-conquer FFT products.
pub fn renewal_function(law: &InterArrivalLaw, n: usize, accel: bool) -> Result<RenewalTable> {
    if n < 1 {
        return Err(Error::InvalidInput("horizon must be at least 1".into()));
    }
    if law.n_max() < n {
        return Err(Error::HorizonExceedsCache { need: n, cached: law.n_max() });
    }
    let k = &law.cached()[..=n];
    let mut u = if accel { conv::renewal_online(k, 1.0, n) } else { direct(k, n) };
    // keep round-off from leaving [0, 1]
    for v in u.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
    Ok(RenewalTable {
        u,
        u_inf: renewal_limit(law),
        law_ref: law.id(),
        law: Some(Arc::new(law.clone())),
        squared: false,
    })
}

fn direct(k: &[f64], n: usize) -> Vec<f64> {
    let krev: Vec<f64> = k.iter().rev().cloned().collect(); // krev[m] = k[n − m]
    let mut u = vec![0.0; n + 1];
    u[0] = 1.0;
    for p in 1..=n {
        // Σ_{i<p} u[i] k[p − i], with k[p − i] = krev[n − p + i]
        u[p] = conv::dot(&u[..p], &krev[n - p..n]);
    }
    u
}

/// `u(∞) = 1 / Σ n K(n)`, zero when the mean is infinite.
pub fn renewal_limit(law: &InterArrivalLaw) -> f64 {
    match law.mean() {
        Some(m) => 1.0 / m,
        None => 0.0,
    }
}

/// `u(n) · L(n) · n^{1−α} · π / (α sin πα)` on a logarithmic grid, where `L` includes the
/// normalizing constant of the law.
pub fn garsia_lamperti_ratio(table: &RenewalTable, law: &InterArrivalLaw) -> Result<Vec<(usize, f64)>> {
    let (alpha, sv) = match (law.kind(), law.alpha(), law.sv()) {
        (LawKind::Power, Some(a), Some(sv)) if a > 0.0 && a < 1.0 => (a, sv),
        _ => return Err(Error::NotApplicable("ratio needs a power law with alpha in (0, 1)".into())),
    };
    if law.b() != 0.0 {
        return Err(Error::NotApplicable("ratio needs the untilted law".into()));
    }
    let c = PI / (alpha * (PI * alpha).sin());
    let n_max = table.horizon();
    let mut out = Vec::new();
    let mut k = 4;
    loop {
        let n = 10f64.powf(k as f64 / 4.0).round() as usize;
        if n > n_max {
            break;
        }
        let nf = n as f64;
        out.push((n, table.u[n] * law.norm() * sv.eval(nf) * nf.powf(1.0 - alpha) * c));
        k += 1;
    }
    if out.last().map(|p| p.0) != Some(n_max) {
        let nf = n_max as f64;
        out.push((n_max, table.u[n_max] * law.norm() * sv.eval(nf) * nf.powf(1.0 - alpha) * c));
    }
    Ok(out)
}

/// `(u_b(n) − u_b(∞)) / ((c(b) − 1)^{−2} K_b(n))` on a logarithmic grid, restricted to indices
/// where the difference is resolved in double precision.
#[derive(Clone, Debug, Serialize)]
pub struct TailRatio {
    pub n: usize,
    pub ratio: f64,
}

pub fn tail_asymptotic_ratio(table: &RenewalTable, law_b: &InterArrivalLaw) -> Result<Vec<TailRatio>> {
    if law_b.b() <= 0.0 {
        return Err(Error::NotApplicable("tail asymptotics need b > 0".into()));
    }
    let a = (law_b.cb() - 1.0).powi(-2);
    let mut out = Vec::new();
    let mut k = 4;
    loop {
        let n = 10f64.powf(k as f64 / 8.0).round() as usize;
        if n > table.horizon() {
            break;
        }
        let d = table.u[n] - table.u_inf;
        if d.abs() < 1e-12 * table.u_inf.max(1e-300) * 1e3 {
            break;
        }
        out.push(TailRatio { n, ratio: d / (a * law_b.k(n as u64)) });
        k += 1;
    }
    Ok(out)
}
