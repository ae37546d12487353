//! Online convolution: solves `u[n] = Σ_{j=1..n} k[j] u[n−j]` for `n ≥ 1` in O(N log² N).

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::Arc;

const LEAF: usize = 64;

struct Plans {
    planner: FftPlanner<f64>,
    cache: HashMap<usize, (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)>,
}

impl Plans {
    fn get(&mut self, n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
        if let Some(p) = self.cache.get(&n) {
            return p.clone();
        }
        let p = (self.planner.plan_fft_forward(n), self.planner.plan_fft_inverse(n));
        self.cache.insert(n, p.clone());
        p
    }
}

/// Fill `u[0..=n]` given `u[0]` and the kernel `k` (index 0 ignored, `k.len() > n`).
pub fn renewal_online(k: &[f64], u0: f64, n: usize) -> Vec<f64> {
    assert!(k.len() > n, "kernel shorter than horizon");
    let mut u = vec![0.0; n + 1];
    u[0] = u0;
    let mut acc = vec![0.0; n + 1];
    let mut plans = Plans { planner: FftPlanner::new(), cache: HashMap::new() };
    solve(k, &mut u, &mut acc, 0, n + 1, &mut plans);
    u
}

/// On entry `acc[p]` holds the contributions to `u[p]` from indices below `lo`.
fn solve(k: &[f64], u: &mut [f64], acc: &mut [f64], lo: usize, hi: usize, plans: &mut Plans) {
    if hi - lo <= LEAF {
        for p in lo..hi {
            if p > 0 {
                let mut s = acc[p];
                for i in lo..p {
                    s += k[p - i] * u[i];
                }
                u[p] = s;
            }
        }
        return;
    }
    let mid = lo + (hi - lo) / 2;
    solve(k, u, acc, lo, mid, plans);
    // contribution of u[lo..mid) to positions [mid, hi): Σ u[i] k[p - i], p - i ∈ [1, hi - lo)
    let la = mid - lo;
    let lb = hi - lo;
    let size = (la + lb).next_power_of_two();
    let (fwd, inv) = plans.get(size);
    let mut a: Vec<Complex64> = (0..size)
        .map(|i| Complex64::new(if i < la { u[lo + i] } else { 0.0 }, 0.0))
        .collect();
    let mut b: Vec<Complex64> = (0..size)
        .map(|i| Complex64::new(if i < lb && i < k.len() { k[i] } else { 0.0 }, 0.0))
        .collect();
    b[0] = Complex64::new(0.0, 0.0);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    inv.process(&mut a);
    let scale = 1.0 / size as f64;
    for p in mid..hi {
        acc[p] += a[p - lo].re * scale;
    }
    solve(k, u, acc, mid, hi, plans);
}

/// Full linear convolution `c[n] = Σ a[i] b[n − i]`, truncated to `len` entries.
pub fn linear(a: &[f64], b: &[f64], len: usize) -> Vec<f64> {
    let size = (a.len() + b.len()).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut x: Vec<Complex64> = (0..size).map(|i| Complex64::new(*a.get(i).unwrap_or(&0.0), 0.0)).collect();
    let mut y: Vec<Complex64> = (0..size).map(|i| Complex64::new(*b.get(i).unwrap_or(&0.0), 0.0)).collect();
    fwd.process(&mut x);
    fwd.process(&mut y);
    for (p, q) in x.iter_mut().zip(&y) {
        *p *= q;
    }
    inv.process(&mut x);
    let scale = 1.0 / size as f64;
    x.iter().take(len).map(|v| v.re * scale).collect()
}

/// Dot product with eight independent accumulators (fixed evaluation order).
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut s = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            s[l] += x[l] * y[l];
        }
    }
    let mut t = ((s[0] + s[1]) + (s[2] + s[3])) + ((s[4] + s[5]) + (s[6] + s[7]));
    for (x, y) in ra.iter().zip(rb) {
        t += x * y;
    }
    t
}
