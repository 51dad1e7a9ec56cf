//! Goodness-of-fit statistics used by the statistical test suites.

use crate::specfun::gamma_q;
use crate::{Error, Result};

/// Kolmogorov–Smirnov distance from CDF values of an ascending sample.
pub fn ks_statistic(cdf_sorted: &[f64]) -> f64 {
    let n = cdf_sorted.len() as f64;
    cdf_sorted
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            let lo = i as f64 / n;
            let hi = (i + 1) as f64 / n;
            (hi - f).max(f - lo)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value of the one-sample KS statistic `d` with `n` draws.
pub fn kolmogorov_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let x = (sn + 0.12 + 0.11 / sn) * d;
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// KS p-value of a sample against `cdf`.
pub fn ks_test(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let f: Vec<f64> = xs.iter().map(|&x| cdf(x)).collect();
    kolmogorov_pvalue(ks_statistic(&f), xs.len())
}

/// Pearson chi-square p-value; `ddof` extra degrees of freedom are removed.
pub fn chi_square_pvalue(observed: &[f64], expected: &[f64], ddof: usize) -> Result<f64> {
    if observed.len() != expected.len() || observed.len() < ddof + 2 {
        return Err(Error::domain(
            "chi-square needs matching bins and at least two free cells",
        ));
    }
    let stat: f64 = observed.iter().zip(expected).map(|(o, e)| (o - e) * (o - e) / e).sum();
    let df = (observed.len() - 1 - ddof) as f64;
    gamma_q(0.5 * df, 0.5 * stat)
}

/// Bins counts against a probability mass function on {0, 1, …}, merging
/// sparse cells so every expected count is at least 5.
pub fn discrete_bins(counts: &[u64], pmf: impl Fn(u64) -> f64) -> (Vec<f64>, Vec<f64>) {
    let n = counts.len() as f64;
    let max = counts.iter().copied().max().unwrap_or(0);
    let mut hist = vec![0.0; max as usize + 1];
    for &c in counts {
        hist[c as usize] += 1.0;
    }
    let mut obs = Vec::new();
    let mut exp = Vec::new();
    let (mut o_acc, mut e_acc, mut e_total) = (0.0, 0.0, 0.0);
    for k in 0..=max {
        let e = n * pmf(k);
        o_acc += hist[k as usize];
        e_acc += e;
        e_total += e;
        if e_acc >= 5.0 {
            obs.push(o_acc);
            exp.push(e_acc);
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    // Everything above the last full cell, plus the unobserved tail mass.
    let tail = (n - e_total).max(0.0) + e_acc;
    if let (Some(lo), Some(le)) = (obs.last_mut(), exp.last_mut()) {
        if tail < 5.0 {
            *lo += o_acc;
            *le += tail;
        } else {
            obs.push(o_acc);
            exp.push(tail);
        }
    }
    (obs, exp)
}

/// [`discrete_bins`] for a Poisson(λ) law.
pub fn poisson_bins(counts: &[u64], lambda: f64) -> (Vec<f64>, Vec<f64>) {
    discrete_bins(counts, |k| {
        let kf = k as f64;
        (kf * lambda.ln() - lambda - crate::specfun::ln_gamma(kf + 1.0)).exp()
    })
}

/// Mean and standard error of a sample.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}
