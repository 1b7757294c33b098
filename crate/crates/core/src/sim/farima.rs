//! FARIMA(0, H−1/2, 0) errors: moving-average coefficients and generators.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};

use super::constants::{farima_acf, farima_raw_variance};
use super::gaussian::GaussianSampler;
use crate::error::{check_open_unit_half, Error, Result};
use crate::quad::gauss_legendre;

/// Normalized MA(∞) weights `b_0..b_J` of FARIMA(0, d, 0), `d = H − 1/2`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaCoefficients {
    pub hurst: f64,
    pub b: Vec<f64>,
    /// Truncation lag `J`.
    pub truncation: usize,
    /// `1 − Σ_{j≤J} b_j²`: the variance the truncated filter loses.
    pub truncation_deficit: f64,
    /// `Σ_{j>J} b_j²`, evaluated independently of the partial sum.
    pub tail_mass: f64,
    /// `|Σ_{j≤J} b_j² + tail_mass − 1|`.
    pub norm_error: f64,
}

/// MA coefficients by the recursion `b_j = b_{j−1}(j−1+d)/j`, divided by
/// the square root of the closed-form infinite sum `Γ(1−2d)/Γ(1−d)²`.
pub fn ma_coeffs(hurst: f64, truncation: usize) -> Result<MaCoefficients> {
    check_open_unit_half("H", hurst)?;
    if truncation < 1 {
        return Err(Error::InvalidArgument("MA truncation must be at least 1".into()));
    }
    let d = hurst - 0.5;
    let norm = farima_raw_variance(d).sqrt();
    let mut b = Vec::with_capacity(truncation + 1);
    let mut raw = 1.0f64;
    b.push(1.0 / norm);
    for j in 1..=truncation {
        let jf = j as f64;
        raw *= (jf - 1.0 + d) / jf;
        b.push(raw / norm);
    }
    // Summing from the small end keeps the rounding well below 1e-10.
    let partial: f64 = b.iter().rev().map(|x| x * x).sum();
    let tail_mass = ma_tail_mass(d, truncation);
    Ok(MaCoefficients {
        hurst,
        b,
        truncation,
        truncation_deficit: 1.0 - partial,
        tail_mass,
        norm_error: (partial + tail_mass - 1.0).abs(),
    })
}

/// `ln Γ(x+a) − ln Γ(x+b)`, switching to the asymptotic series for large
/// `x` where the direct difference cancels badly.
fn ln_gamma_ratio(x: f64, a: f64, b: f64) -> f64 {
    if x < 50.0 {
        return ln_gamma(x + a) - ln_gamma(x + b);
    }
    // Σ_k (−1)^{k+1} [B_{k+1}(a) − B_{k+1}(b)] / (k(k+1) x^k)
    let b2 = |t: f64| t * t - t + 1.0 / 6.0;
    let b3 = |t: f64| t * t * t - 1.5 * t * t + 0.5 * t;
    let b4 = |t: f64| t.powi(4) - 2.0 * t.powi(3) + t * t - 1.0 / 30.0;
    let b5 = |t: f64| t.powi(5) - 2.5 * t.powi(4) + 5.0 / 3.0 * t.powi(3) - t / 6.0;
    let inv = 1.0 / x;
    (a - b) * x.ln() + (b2(a) - b2(b)) / 2.0 * inv - (b3(a) - b3(b)) / 6.0 * inv * inv
        + (b4(a) - b4(b)) / 12.0 * inv.powi(3)
        - (b5(a) - b5(b)) / 20.0 * inv.powi(4)
}

/// `Σ_{j>J} b_j²` for the normalized weights: `∫_J^∞ f − f(J)/2 − f'(J)/12`
/// (Euler–Maclaurin), with the integral mapped onto `[0, 1]` by
/// `x = J y^{−1/(1−2d)}` where the integrand becomes bounded and smooth.
fn ma_tail_mass(d: f64, truncation: usize) -> f64 {
    let lnorm = (farima_raw_variance(d)).ln();
    let lg_d = ln_gamma(d);
    // ln f(x) with f(x) = b(x)²
    let ln_f = |x: f64| 2.0 * (ln_gamma_ratio(x, d, 1.0) - lg_d) - lnorm;
    let j = truncation as f64;
    let p = 1.0 / (1.0 - 2.0 * d);
    let (nodes, weights) = gauss_legendre(64);
    let mut acc = 0.0;
    for (t, w) in nodes.iter().zip(&weights) {
        let y = 0.5 * (t + 1.0);
        let x = j * y.powf(-p);
        // g(x) = f(x) x^{2−2d}
        let lg = if x.is_finite() {
            ln_f(x) + (2.0 - 2.0 * d) * x.ln()
        } else {
            -2.0 * lg_d - lnorm
        };
        acc += 0.5 * w * lg.exp();
    }
    let integral = j.powf(2.0 * d - 1.0) / (1.0 - 2.0 * d) * acc;
    let fj = ln_f(j).exp();
    let dfj = fj * 2.0 * (digamma(j + d) - digamma(j + 1.0));
    integral - 0.5 * fj - dfj / 12.0
}

/// How the FARIMA errors are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FarimaMethod {
    /// Circulant embedding of the exact FARIMA(0,d,0) autocovariance.
    Exact,
    /// `u_t = Σ_{j=0}^{J} b_j ε_{t−j}` with `J = burn_in + n`.
    TruncatedMa { burn_in: usize },
}

impl Default for FarimaMethod {
    fn default() -> Self {
        FarimaMethod::Exact
    }
}

/// Variance convention for the errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnovationScale {
    /// `Σ b_j² = 1`, so `Var u_t = 1`.
    #[default]
    UnitVariance,
    /// `b_0 = 1` with unit-variance innovations, `Var u_t = Γ(1−2d)/Γ(1−d)²`.
    UnitInnovation,
}

/// Standardized i.i.d. innovation law driving the MA filter.
pub trait Innovation: Sync {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StandardGaussian;

impl Innovation for StandardGaussian {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        rng.sample(StandardNormal)
    }
}

pub fn default_burn_in(n: usize) -> usize {
    n.max(10_000)
}

struct MaFilter {
    truncation: usize,
    len: usize,
    spectrum: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

enum Inner {
    Exact(GaussianSampler),
    Ma(MaFilter),
}

/// Reusable generator for FARIMA(0, H−1/2, 0) paths of a fixed length.
pub struct FarimaGenerator {
    n: usize,
    hurst: f64,
    scale: f64,
    method: FarimaMethod,
    inner: Inner,
    norm_error: f64,
}

impl std::fmt::Debug for FarimaGenerator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FarimaGenerator")
            .field("n", &self.n)
            .field("hurst", &self.hurst)
            .field("method", &self.method)
            .field("scale", &self.scale)
            .finish()
    }
}

impl FarimaGenerator {
    pub fn new(n: usize, hurst: f64, method: FarimaMethod, scale: InnovationScale) -> Result<Self> {
        check_open_unit_half("H", hurst)?;
        if n < 2 {
            return Err(Error::TooShort { needed: 2, got: n });
        }
        let d = hurst - 0.5;
        let scale = match scale {
            InnovationScale::UnitVariance => 1.0,
            InnovationScale::UnitInnovation => farima_raw_variance(d).sqrt(),
        };
        let (inner, norm_error) = match method {
            FarimaMethod::Exact => {
                let max_lag = (2 * (n - 1)).next_power_of_two() / 2;
                let acf = farima_acf(d, max_lag);
                let sampler = GaussianSampler::from_acvf(n, |k| acf[k])?;
                (Inner::Exact(sampler), 0.0)
            }
            FarimaMethod::TruncatedMa { burn_in } => {
                if burn_in < n {
                    return Err(Error::InvalidArgument(format!(
                        "burn-in {burn_in} must be at least n = {n}"
                    )));
                }
                let truncation = burn_in + n;
                let coeffs = ma_coeffs(hurst, truncation)?;
                let len = (truncation + n).next_power_of_two();
                let mut planner = FftPlanner::new();
                let forward = planner.plan_fft_forward(len);
                let inverse = planner.plan_fft_inverse(len);
                let mut spectrum: Vec<Complex64> = (0..len)
                    .map(|j| Complex64::new(coeffs.b.get(j).copied().unwrap_or(0.0), 0.0))
                    .collect();
                forward.process(&mut spectrum);
                let inv_len = 1.0 / len as f64;
                spectrum.iter_mut().for_each(|z| *z *= inv_len);
                (
                    Inner::Ma(MaFilter {
                        truncation,
                        len,
                        spectrum,
                        forward,
                        inverse,
                    }),
                    coeffs.truncation_deficit,
                )
            }
        };
        Ok(FarimaGenerator {
            n,
            hurst,
            scale,
            method,
            inner,
            norm_error,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn method(&self) -> FarimaMethod {
        self.method
    }

    /// Variance lost to MA truncation (0 for the exact method).
    pub fn variance_deficit(&self) -> f64 {
        self.norm_error
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.sample_with(&StandardGaussian, rng)
    }

    /// Draws a path; `innovation` is used by the MA method only, the exact
    /// method is Gaussian by construction.
    pub fn sample_with<I: Innovation, R: Rng + ?Sized>(&self, innovation: &I, rng: &mut R) -> Vec<f64> {
        let mut u = match &self.inner {
            Inner::Exact(s) => s.sample(rng),
            Inner::Ma(f) => {
                let total = f.truncation + self.n;
                let mut buf: Vec<Complex64> = (0..f.len)
                    .map(|i| {
                        let e = if i < total { innovation.draw(rng) } else { 0.0 };
                        Complex64::new(e, 0.0)
                    })
                    .collect();
                f.forward.process(&mut buf);
                buf.iter_mut().zip(&f.spectrum).for_each(|(z, s)| *z *= s);
                f.inverse.process(&mut buf);
                buf[f.truncation..total].iter().map(|z| z.re).collect()
            }
        };
        if self.scale != 1.0 {
            u.iter_mut().for_each(|x| *x *= self.scale);
        }
        u
    }
}
