//! Periodogram and local Whittle estimation of the memory parameter.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{check_open_unit_half, Error, Result};
use crate::optimize::minimize_scalar;
use crate::sim::constants::d_const;

pub const DEFAULT_BRACKET: (f64, f64) = (0.501, 0.999);
pub const PSI_TOL: f64 = 1e-8;
pub const MULTISTARTS: usize = 5;

/// `I(λ_j) = |Σ_t ξ_t e^{itλ_j}|² / (2πn)` at `λ_j = 2πj/n`, `j = 1..⌊n/2⌋`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Periodogram {
    pub n: usize,
    pub freqs: Vec<f64>,
    pub ordinates: Vec<f64>,
}

/// All `n` ordinates `I(λ_0), …, I(λ_{n−1})`.
pub fn periodogram_full(series: &[f64]) -> Vec<f64> {
    let n = series.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex64> = series.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / (2.0 * PI * n as f64);
    buf.iter().map(|z| z.norm_sqr() * scale).collect()
}

pub fn periodogram(series: &[f64]) -> Result<Periodogram> {
    let n = series.len();
    if n < 4 {
        return Err(Error::TooShort { needed: 4, got: n });
    }
    let full = periodogram_full(series);
    let half = n / 2;
    Ok(Periodogram {
        n,
        freqs: (1..=half).map(|j| 2.0 * PI * j as f64 / n as f64).collect(),
        ordinates: full[1..=half].to_vec(),
    })
}

/// How many Fourier frequencies enter the objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum MRule {
    Fixed { m: usize },
    /// `⌊n/k⌋`.
    Fraction { k: usize },
    /// `⌊c n^a⌋`.
    Power { c: f64, a: f64 },
    /// `⌊(n−1)/2⌋`, every frequency below Nyquist.
    MaxFourier,
}

impl Default for MRule {
    fn default() -> Self {
        MRule::Fraction { k: 8 }
    }
}

impl MRule {
    /// Real-valued `m(n)`, used for the asymptotic checks.
    pub fn value(self, n: f64) -> f64 {
        match self {
            MRule::Fixed { m } => m as f64,
            MRule::Fraction { k } => n / k as f64,
            MRule::Power { c, a } => c * n.powf(a),
            MRule::MaxFourier => (n - 1.0) / 2.0,
        }
    }

    /// Growth exponent `a` in `m ≍ n^a`.
    pub fn exponent(self) -> f64 {
        match self {
            MRule::Fixed { .. } => 0.0,
            MRule::Power { a, .. } => a,
            MRule::Fraction { .. } | MRule::MaxFourier => 1.0,
        }
    }

    /// Integer `m` for a series of length `n`, clamped to `[1, ⌊(n−1)/2⌋]`.
    pub fn resolve(self, n: usize) -> usize {
        let cap = ((n.saturating_sub(1)) / 2).max(1);
        let m = match self {
            MRule::Fixed { m } => m,
            MRule::Fraction { k } => n / k.max(1),
            MRule::Power { c, a } => (c * (n as f64).powf(a)).floor() as usize,
            MRule::MaxFourier => cap,
        };
        m.clamp(1, cap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhittleResult {
    #[serde(rename = "H_hat")]
    pub h_hat: f64,
    #[serde(rename = "G_hat")]
    pub g_hat: f64,
    pub psi1_hat: f64,
    pub m: usize,
    pub a1: f64,
    pub a2: f64,
    pub minimizer_iterations: usize,
    pub at_boundary: bool,
}

/// Profiled local Whittle objective over the first `m` frequencies.
#[derive(Debug, Clone)]
pub struct WhittleObjective {
    log_freqs: Vec<f64>,
    ordinates: Vec<f64>,
    mean_log_freq: f64,
}

impl WhittleObjective {
    /// Mean-corrects `series` and keeps `I(λ_1..λ_m)`.
    pub fn new(series: &[f64], m: usize) -> Result<Self> {
        let n = series.len();
        if n < 4 {
            return Err(Error::TooShort { needed: 4, got: n });
        }
        if m < 1 || 2 * m >= n {
            return Err(Error::InvalidArgument(format!("need 1 <= m < n/2, got m = {m}, n = {n}")));
        }
        let mean = series.iter().sum::<f64>() / n as f64;
        let centred: Vec<f64> = series.iter().map(|v| v - mean).collect();
        let full = periodogram_full(&centred);
        let ordinates = full[1..=m].to_vec();
        if ordinates.iter().all(|&v| v <= 0.0) {
            return Err(Error::Degenerate("all periodogram ordinates in the band are zero".into()));
        }
        let log_freqs: Vec<f64> = (1..=m).map(|j| (2.0 * PI * j as f64 / n as f64).ln()).collect();
        let mean_log_freq = log_freqs.iter().sum::<f64>() / m as f64;
        Ok(WhittleObjective { log_freqs, ordinates, mean_log_freq })
    }

    pub fn m(&self) -> usize {
        self.ordinates.len()
    }

    /// `Q(ψ) = m⁻¹ Σ λ_j^{2ψ−1} I(λ_j)`.
    pub fn q(&self, psi: f64) -> f64 {
        let e = 2.0 * psi - 1.0;
        self.log_freqs
            .iter()
            .zip(&self.ordinates)
            .map(|(l, i)| (e * l).exp() * i)
            .sum::<f64>()
            / self.m() as f64
    }

    /// `R(ψ) = log Q(ψ) − (2ψ−1) m⁻¹ Σ log λ_j`.
    pub fn r(&self, psi: f64) -> f64 {
        self.q(psi).ln() - (2.0 * psi - 1.0) * self.mean_log_freq
    }
}

pub fn local_whittle(series: &[f64], m: usize, bracket: (f64, f64)) -> Result<WhittleResult> {
    let (a1, a2) = bracket;
    if !(a1 > 0.5 && a1 < a2 && a2 < 1.0) {
        return Err(Error::InvalidArgument(format!("bracket must satisfy 1/2 < a1 < a2 < 1, got ({a1}, {a2})")));
    }
    let obj = WhittleObjective::new(series, m)?;
    let min = minimize_scalar(|psi| obj.r(psi), a1, a2, PSI_TOL, MULTISTARTS);
    let h_hat = min.x.clamp(a1, a2);
    let g_hat = obj.q(h_hat);
    Ok(WhittleResult {
        h_hat,
        g_hat,
        psi1_hat: psi1_hat(g_hat, h_hat)?,
        m,
        a1,
        a2,
        minimizer_iterations: min.iterations,
        at_boundary: min.at_boundary,
    })
}

/// [`local_whittle`] with `m` from a rule and the default bracket.
pub fn local_whittle_rule(series: &[f64], rule: MRule) -> Result<WhittleResult> {
    local_whittle(series, rule.resolve(series.len()), DEFAULT_BRACKET)
}

/// `ψ̂₁ = √(Ĝ D(Ĥ))`.
pub fn psi1_hat(g_hat: f64, h_hat: f64) -> Result<f64> {
    if !(g_hat >= 0.0) {
        return Err(Error::Domain { what: "G", value: g_hat, domain: "[0, ∞)" });
    }
    Ok((g_hat * d_const(h_hat)?).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Condition41 {
    pub value: f64,
    pub value_2n: f64,
    /// `value_2n < value`.
    pub satisfied_trend: bool,
    /// Power of `n` the expression behaves like, ignoring the log factor;
    /// negative means it eventually vanishes.
    pub exponent: f64,
}

/// `(ln n)⁴((m/n)^{2H−1} + m^{2(H−h)}/n^{1+H−2h})` at `n` and `2n`.
/// `n` is real so the trend can be probed far beyond feasible sample sizes,
/// where the log factor no longer dominates.
pub fn check_condition_41(n: f64, m: MRule, big_h: f64, h: f64) -> Result<Condition41> {
    check_open_unit_half("H", big_h)?;
    check_open_unit_half("h", h)?;
    if !(n > 1.0) {
        return Err(Error::InvalidArgument(format!("n must exceed 1, got {n}")));
    }
    let eval = |n: f64| {
        let mm = m.value(n);
        n.ln().powi(4) * ((mm / n).powf(2.0 * big_h - 1.0) + mm.powf(2.0 * (big_h - h)) / n.powf(1.0 + big_h - 2.0 * h))
    };
    let (value, value_2n) = (eval(n), eval(2.0 * n));
    let a = m.exponent();
    let exponent = ((a - 1.0) * (2.0 * big_h - 1.0)).max(2.0 * a * (big_h - h) - (1.0 + big_h - 2.0 * h));
    Ok(Condition41 { value, value_2n, satisfied_trend: value_2n < value, exponent })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn direct(series: &[f64], j: usize) -> f64 {
        let n = series.len();
        let lam = 2.0 * PI * j as f64 / n as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for (t, x) in series.iter().enumerate() {
            let a = (t + 1) as f64 * lam;
            re += x * a.cos();
            im += x * a.sin();
        }
        (re * re + im * im) / (2.0 * PI * n as f64)
    }

    #[test]
    fn matches_direct_sum() {
        let x: Vec<f64> = (0..64).map(|t| ((t * 37 % 17) as f64 - 8.0) / 3.0).collect();
        let p = periodogram(&x).unwrap();
        for (j, v) in p.ordinates.iter().enumerate() {
            assert_relative_eq!(*v, direct(&x, j + 1), max_relative = 1e-9, epsilon = 1e-14);
        }
    }

    #[test]
    fn cosine_concentrates() {
        let n = 128;
        let k = 5;
        let x: Vec<f64> = (0..n).map(|t| (2.0 * PI * k as f64 * t as f64 / n as f64).cos()).collect();
        let p = periodogram(&x).unwrap();
        let peak = p.ordinates[k - 1];
        for (j, v) in p.ordinates.iter().enumerate() {
            if j + 1 != k {
                assert!(*v <= 1e-9 * peak);
            }
        }
    }

    #[test]
    fn psi1_values() {
        assert_relative_eq!(psi1_hat(1.0, 0.75).unwrap(), 6.684_342_065_f64.sqrt(), max_relative = 1e-9);
        assert_eq!(psi1_hat(0.0, 0.75).unwrap(), 0.0);
        assert_relative_eq!(psi1_hat(4.0, 0.75).unwrap(), 2.0 * psi1_hat(1.0, 0.75).unwrap(), max_relative = 1e-15);
    }

    #[test]
    fn m_rules() {
        assert_eq!(MRule::default().resolve(437), 54);
        assert_eq!(MRule::MaxFourier.resolve(500), 249);
        assert_eq!(MRule::MaxFourier.resolve(501), 250);
        assert_eq!(MRule::Fixed { m: 10_000 }.resolve(100), 49);
        assert_eq!(MRule::Power { c: 1.0, a: 0.8 }.resolve(4096), 776);
    }

    #[test]
    fn degenerate_band() {
        assert!(matches!(local_whittle(&[3.0; 64], 8, DEFAULT_BRACKET), Err(Error::Degenerate(_))));
        assert!(local_whittle(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 3, DEFAULT_BRACKET).is_err());
    }

    #[test]
    fn condition_41() {
        let ok = check_condition_41(1e20, MRule::Power { c: 1.0, a: 0.8 }, 0.8, 0.6).unwrap();
        assert!(ok.satisfied_trend && ok.exponent < 0.0 && ok.value > 0.0);
        let bad = check_condition_41(1e20, MRule::Power { c: 1.0, a: 0.2 }, 0.6, 0.9).unwrap();
        assert!(!bad.satisfied_trend && bad.exponent > 0.0);
        assert!(bad.value_2n > bad.value);
    }
}
