//! Summary statistics used by the experiments.

use serde::{Deserialize, Serialize};

use crate::error::{check_same_len, Error, Result};

fn nonempty(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        Err(Error::TooShort { needed: 1, got: 0 })
    } else {
        Ok(())
    }
}

pub fn mean(x: &[f64]) -> Result<f64> {
    nonempty(x)?;
    Ok(x.iter().sum::<f64>() / x.len() as f64)
}

/// `mean((x − truth)²)`.
pub fn mse(estimates: &[f64], truth: f64) -> Result<f64> {
    nonempty(estimates)?;
    Ok(estimates.iter().map(|e| (e - truth).powi(2)).sum::<f64>() / estimates.len() as f64)
}

/// `√(mean((x − truth)²))`.
pub fn rmse(estimates: &[f64], truth: f64) -> Result<f64> {
    Ok(mse(estimates, truth)?.sqrt())
}

/// Variance with the `1/n` convention.
pub fn variance(x: &[f64]) -> Result<f64> {
    let m = mean(x)?;
    Ok(x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64)
}

/// Sample quantile, linear interpolation between order statistics
/// (R's default `type = 7`).
pub fn quantile(x: &[f64], p: f64) -> Result<f64> {
    nonempty(x)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("quantile level {p} outside [0, 1]")));
    }
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&s, p))
}

fn quantile_sorted(s: &[f64], p: f64) -> f64 {
    let h = (s.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
}

pub fn summary(x: &[f64]) -> Result<Summary> {
    nonempty(x)?;
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(Summary {
        q1: quantile_sorted(&s, 0.25),
        median: quantile_sorted(&s, 0.5),
        mean: mean(&s)?,
        q3: quantile_sorted(&s, 0.75),
    })
}

/// Pearson correlation.
pub fn correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    check_same_len(x.len(), y.len())?;
    let (mx, my) = (mean(x)?, mean(y)?);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("correlation of a constant sequence".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Mid-ranks (ties share the average rank), starting at 1.
pub fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_same_len(x.len(), y.len())?;
    correlation(&ranks(x), &ranks(y))
}

/// Two-sample Kolmogorov–Smirnov distance `sup|F₁ − F₂|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    nonempty(a)?;
    nonempty(b)?;
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[2.0, 2.0, 2.0], 2.0).unwrap(), 0.0);
        assert_eq!(rmse(&[1.0, 3.0], 2.0).unwrap(), 1.0);
        assert_abs_diff_eq!(rmse(&[0.0, 1.0, 2.0], 0.0).unwrap(), (5.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        assert!(rmse(&[], 0.0).is_err());
    }

    #[test]
    fn type7_quantiles() {
        // R: quantile(c(1, 2, 3, 4, 10)) -> 2, 3, 4 at 0.25, 0.5, 0.75
        let s = summary(&[4.0, 1.0, 10.0, 3.0, 2.0]).unwrap();
        assert_eq!((s.q1, s.median, s.q3, s.mean), (2.0, 3.0, 4.0, 4.0));
        // R: quantile(1:4, 0.25) = 1.75
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.25).unwrap(), 1.75);
    }

    #[test]
    fn ks_and_ranks() {
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 1.0);
        assert_eq!(ks_two_sample(&[1.0, 3.0], &[2.0, 4.0]).unwrap(), 0.5);
        assert_eq!(ranks(&[3.0, 1.0, 3.0]), vec![2.5, 1.0, 2.5]);
        assert_abs_diff_eq!(spearman(&[1.0, 2.0, 3.0], &[1.0, 4.0, 9.0]).unwrap(), 1.0, epsilon = 1e-15);
    }
}
