//! Remainders of series `Σ_{n≥m} g(n) e^{-ω n}` with `g` analytic in the right half plane.
//!
//! The sum is evaluated by the Abel-Plana formula. The continuous part is integrated
//! along the ray on which `e^{-ω x}` is non-oscillating, so oscillatory and
//! slowly decaying summands cost the same.

use super::quad::adaptive;
use num_complex::Complex64;
use std::f64::consts::PI;

const REL: f64 = 1e-15;

/// Reduce the imaginary part of `ω` to (-π, π]; integer-indexed sums do not see the shift.
fn reduce(omega: Complex64) -> Complex64 {
    let mut im = omega.im % (2.0 * PI);
    if im > PI {
        im -= 2.0 * PI;
    } else if im <= -PI {
        im += 2.0 * PI;
    }
    Complex64::new(omega.re, im)
}

/// `∫_a^∞ g(x) e^{-ω x} dx` for `Re ω ≥ 0`, taken along `a + t·conj(ω)/|ω|`.
///
/// The integrand must decay along that ray (polynomially when `ω = 0`).
pub fn integral_from<G: Fn(Complex64) -> Complex64>(g: &G, omega: Complex64, a: f64) -> Complex64 {
    assert!(omega.re >= 0.0, "integral_from needs Re ω ≥ 0");
    let w = omega.norm();
    let dir = if w > 0.0 { omega.conj() / w } else { Complex64::new(1.0, 0.0) };
    let pre = (-omega * a).exp() * dir;
    // t = a (e^u - 1): resolves both the scale a of g and the scale 1/|ω| of the exponential
    let scale = a.max(1.0);
    let h = |u: f64| {
        let eu = u.exp();
        let t = scale * (eu - 1.0);
        let x = Complex64::new(a, 0.0) + dir * t;
        g(x) * (-w * t).exp() * (scale * eu)
    };
    let mut total = Complex64::new(0.0, 0.0);
    let mut quiet = 0;
    let mut u = 0.0;
    let width = 1.0;
    while u < 700.0 {
        let q = adaptive(h, u, u + width, 1e-300, REL, 400);
        total += q.value;
        u += width;
        let t_end = scale * (u.exp() - 1.0);
        if q.value.norm() <= 1e-18 * total.norm() || w * t_end > 800.0 {
            quiet += 1;
            if quiet >= 3 || w * t_end > 800.0 {
                break;
            }
        } else {
            quiet = 0;
        }
    }
    total * pre
}

/// `Σ_{n≥m} g(n) e^{-ω n}` with `Re ω ≥ 0`.
pub fn sum_from<G: Fn(Complex64) -> Complex64>(g: &G, omega: Complex64, m: u64) -> Complex64 {
    let omega = reduce(omega);
    let mf = m as f64;
    let f = |x: Complex64| g(x) * (-omega * x).exp();
    let integral = integral_from(g, omega, mf);
    let half = f(Complex64::new(mf, 0.0)) * 0.5;
    let corr = adaptive(
        |t| {
            let up = f(Complex64::new(mf, t));
            let dn = f(Complex64::new(mf, -t));
            (up - dn) / (2.0 * PI * t).exp_m1()
        },
        0.0,
        40.0,
        1e-300,
        REL,
        400,
    );
    integral + half + Complex64::new(0.0, 1.0) * corr.value
}

/// Real sum `Σ_{n≥m} g(n) e^{-s n}` for a real-analytic `g` and real `s ≥ 0`.
pub fn sum_from_real<G: Fn(Complex64) -> Complex64>(g: &G, s: f64, m: u64) -> f64 {
    sum_from(g, Complex64::new(s, 0.0), m).re
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn basel_remainder() {
        let g = |x: Complex64| x.powf(-2.0);
        let head: f64 = (1..10).map(|n| 1.0 / (n * n) as f64).sum();
        let tail = sum_from_real(&g, 0.0, 10);
        assert!((head + tail - PI * PI / 6.0).abs() < 1e-15);
    }

    #[test]
    fn slow_power_tail() {
        // Σ_{n≥1} n^{-1.3} = ζ(1.3)
        let g = |x: Complex64| x.powf(-1.3);
        let head: f64 = (1..20).map(|n| (n as f64).powf(-1.3)).sum();
        let z = head + sum_from_real(&g, 0.0, 20);
        assert!((z - 1.0 / 0.254_326_784_536_411_76).abs() < 1e-13, "{z}");
    }

    #[test]
    fn log_series_on_unit_circle() {
        // Σ_{n≥1} e^{iφ n}/n = -log(1 - e^{iφ})
        let phi = 2.0 * PI * 0.3;
        let g = |x: Complex64| x.inv();
        let om = Complex64::new(0.0, -phi);
        let s = sum_from(&g, om, 1);
        let exact = -(c(1.0) - Complex64::new(0.0, phi).exp()).ln();
        assert!((s - exact).norm() < 1e-13, "{s} {exact}");
    }

    #[test]
    fn damped_geometric() {
        let g = |_x: Complex64| c(1.0);
        let s = sum_from_real(&g, 0.5, 3);
        let q: f64 = (-0.5f64).exp();
        assert!((s - q.powi(3) / (1.0 - q)).abs() < 1e-15);
    }

    #[test]
    fn oscillating_tilted_tail() {
        // Σ_{n≥5} n^{-1.3} e^{-(0.01 - 2πi·0.45) n} against brute force
        let om = Complex64::new(0.01, -2.0 * PI * 0.45);
        let g = |x: Complex64| x.powf(-1.3);
        let s = sum_from(&g, om, 5);
        let mut brute = Complex64::new(0.0, 0.0);
        for n in (5..20_000u64).rev() {
            let nf = n as f64;
            brute += (-om * nf).exp() * nf.powf(-1.3);
        }
        assert!((s - brute).norm() < 1e-12, "{s} {brute}");
    }
}
