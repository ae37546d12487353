//! Small statistics helpers with a fixed summation order.

/// Pairwise (tree) sum; the result depends only on the order of `xs`.
pub fn tree_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let m = xs.len() / 2;
    tree_sum(&xs[..m]) + tree_sum(&xs[m..])
}

pub fn mean(xs: &[f64]) -> f64 {
    tree_sum(xs) / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let d: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    tree_sum(&d) / (xs.len() as f64 - 1.0)
}

/// Standard error of the mean.
pub fn std_err(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// `log(mean(exp(x)))` shifted by the maximum.
pub fn log_mean_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = xs.iter().map(|x| (x - m).exp()).collect();
    m + mean(&e).ln()
}

/// Mean computed relative to the maximum, `max + mean(x − max)`.
pub fn shifted_mean(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let d: Vec<f64> = xs.iter().map(|x| x - m).collect();
    m + mean(&d)
}

/// Least-squares line `y = a + b x`; returns `(a, b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let mx = mean(x);
    let my = mean(y);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let b = sxy / sxx;
    (my - b * mx, b)
}

/// Delete-one jackknife estimate and standard error of a statistic.
pub fn jackknife<F: Fn(&[f64]) -> f64>(xs: &[f64], stat: F) -> (f64, f64) {
    let n = xs.len();
    let full = stat(xs);
    let mut buf = Vec::with_capacity(n - 1);
    let mut leave = Vec::with_capacity(n);
    for i in 0..n {
        buf.clear();
        buf.extend(xs[..i].iter().chain(&xs[i + 1..]));
        leave.push(stat(&buf));
    }
    let lm = mean(&leave);
    let var: f64 = leave.iter().map(|v| (v - lm) * (v - lm)).sum::<f64>() * (n as f64 - 1.0) / n as f64;
    (full, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_fit_recovers_slope() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let (a, b) = linear_fit(&x, &y);
        assert!((a - 2.0).abs() < 1e-12 && (b + 0.5).abs() < 1e-12);
    }

    #[test]
    fn jackknife_of_mean_is_std_err() {
        let x = [1.0, 4.0, 2.0, 8.0, 5.0, 7.0];
        let (_, se) = jackknife(&x, mean);
        assert!((se - std_err(&x)).abs() < 1e-12);
    }

    #[test]
    fn jensen_is_exact_for_constant_samples() {
        let x = [0.3; 7];
        assert_eq!(shifted_mean(&x), log_mean_exp(&x));
    }
}
