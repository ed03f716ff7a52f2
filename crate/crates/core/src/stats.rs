//! Small statistics toolkit: two-sample Kolmogorov–Smirnov, Mann–Kendall trend test, least
//! squares with bootstrap intervals, moments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

/// Two-sample KS distance and asymptotic p-value.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    ks_two_sample_tol(a, b, 0.0)
}

/// KS distance after identifying values closer than `tol`: sorted runs of the pooled sample
/// with gaps `≤ tol` are snapped to their first value. Keeps atoms of the law from being split
/// by rounding noise.
pub fn ks_two_sample_tol(a: &[f64], b: &[f64], tol: f64) -> KsResult {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    if tol > 0.0 {
        let mut pooled: Vec<f64> = x.iter().chain(&y).copied().collect();
        pooled.sort_by(f64::total_cmp);
        let mut reps = Vec::with_capacity(pooled.len());
        let mut prev = f64::NEG_INFINITY;
        let mut rep = f64::NEG_INFINITY;
        for &v in &pooled {
            if v - prev > tol {
                rep = v;
            }
            reps.push((v, rep));
            prev = v;
        }
        let snap = |v: f64| {
            let k = reps.partition_point(|p| p.0 < v);
            reps[k].1
        };
        x.iter_mut().for_each(|v| *v = snap(*v));
        y.iter_mut().for_each(|v| *v = snap(*v));
    }
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    KsResult { statistic: d, p_value: kolmogorov_q(lambda) }
}

/// `Q(λ) = 2 Σ (-1)^{k-1} exp(-2k²λ²)`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut s = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        s += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// One-sided Mann–Kendall test for an upward trend.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MannKendall {
    pub s: i64,
    pub z: f64,
    /// Probability of an upward trend at least this strong with no trend.
    pub p_up: f64,
}

pub fn mann_kendall(x: &[f64]) -> MannKendall {
    let n = x.len();
    let mut s = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            s += match x[j].partial_cmp(&x[i]) {
                Some(std::cmp::Ordering::Greater) => 1,
                Some(std::cmp::Ordering::Less) => -1,
                _ => 0,
            };
        }
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut ties = 0.0;
    let mut k = 0;
    while k < n {
        let mut l = k;
        while l + 1 < n && sorted[l + 1] == sorted[k] {
            l += 1;
        }
        let t = (l - k + 1) as f64;
        ties += t * (t - 1.0) * (2.0 * t + 5.0);
        k = l + 1;
    }
    let nf = n as f64;
    let var = (nf * (nf - 1.0) * (2.0 * nf + 5.0) - ties) / 18.0;
    let z = if var <= 0.0 {
        0.0
    } else if s > 0 {
        (s as f64 - 1.0) / var.sqrt()
    } else if s < 0 {
        (s as f64 + 1.0) / var.sqrt()
    } else {
        0.0
    };
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    MannKendall { s, z, p_up: 1.0 - normal.cdf(z) }
}

/// `(intercept, slope)` of the least-squares line.
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SlopeEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// OLS slope with a 95% percentile interval from resampling the points.
pub fn slope_with_bootstrap(x: &[f64], y: &[f64], reps: usize, seed: u64) -> SlopeEstimate {
    let (intercept, slope) = ols(x, y);
    let n = x.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slopes = Vec::with_capacity(reps);
    for _ in 0..reps {
        let idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        let xs: Vec<f64> = idx.iter().map(|&i| x[i]).collect();
        if xs.iter().all(|&v| v == xs[0]) {
            continue;
        }
        let ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
        slopes.push(ols(&xs, &ys).1);
    }
    slopes.sort_by(f64::total_cmp);
    let q = |p: f64| slopes[((slopes.len() - 1) as f64 * p).round() as usize];
    SlopeEstimate { slope, intercept, ci_low: q(0.025), ci_high: q(0.975) }
}

/// Mean, variance, skewness, excess kurtosis.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

pub fn moments(x: &[f64]) -> Moments {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let m2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m3 = x.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let (skewness, kurtosis) = if m2 > 0.0 { (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0) } else { (0.0, 0.0) };
    Moments { mean, variance: m2, skewness, kurtosis }
}

/// Interval from the block bootstrap of the mean of `x` with blocks of length `block`.
pub fn block_bootstrap_mean(x: &[f64], block: usize, reps: usize, seed: u64) -> (f64, f64) {
    let n = x.len();
    let block = block.clamp(1, n);
    let nblocks = n.div_ceil(block);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means = Vec::with_capacity(reps);
    for _ in 0..reps {
        let mut s = 0.0;
        let mut cnt = 0usize;
        for _ in 0..nblocks {
            let start = rng.gen_range(0..=n - block);
            for v in &x[start..start + block] {
                s += v;
                cnt += 1;
            }
        }
        means.push(s / cnt as f64);
    }
    means.sort_by(f64::total_cmp);
    let q = |p: f64| means[((reps - 1) as f64 * p).round() as usize];
    (q(0.025), q(0.975))
}
