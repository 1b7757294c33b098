//! Kernel estimation of the conditional variance function.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{check_open_unit_half, check_same_len, Error, Result};
use crate::par::{self, Execution};
use crate::regress::mean_var;

/// Evaluation points further than this many standard deviations from the
/// sample mean are rejected.
pub const SUPPORT_SDS: f64 = 6.0;
/// Truncation radius of the gaussian kernel.
pub const GAUSSIAN_CUTOFF: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    /// `0.5(1 + cos(πv))` on `[−1, 1]`.
    #[default]
    Cosine,
    /// `1/2` on `[−1, 1]`.
    Uniform,
    /// Standard normal density, cut at `|v| = 8`.
    Gaussian,
}

impl Kernel {
    pub fn eval(self, v: f64) -> f64 {
        let a = v.abs();
        match self {
            Kernel::Cosine if a <= 1.0 => 0.5 * (1.0 + (PI * a).cos()),
            Kernel::Uniform if a <= 1.0 => 0.5,
            Kernel::Gaussian if a <= GAUSSIAN_CUTOFF => (-0.5 * a * a).exp() / (2.0 * PI).sqrt(),
            _ => 0.0,
        }
    }

    /// Radius outside which the kernel vanishes.
    pub fn radius(self) -> f64 {
        match self {
            Kernel::Cosine | Kernel::Uniform => 1.0,
            Kernel::Gaussian => GAUSSIAN_CUTOFF,
        }
    }

    pub fn is_compact(self) -> bool {
        !matches!(self, Kernel::Gaussian)
    }

    /// `K_b(v) = K(v/b)/b`.
    pub fn scaled(self, v: f64, b: f64) -> f64 {
        self.eval(v / b) / b
    }
}

impl std::str::FromStr for Kernel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(Kernel::Cosine),
            "uniform" => Ok(Kernel::Uniform),
            "gaussian" | "normal" => Ok(Kernel::Gaussian),
            other => Err(Error::Parse(format!("unknown kernel `{other}`"))),
        }
    }
}

/// `b = C n^{−δ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bandwidth {
    pub c: f64,
    pub delta: f64,
    pub n: usize,
    pub b: f64,
}

impl Bandwidth {
    pub fn new(c: f64, delta: f64, n: usize) -> Result<Self> {
        let b = c * (n as f64).powf(-delta);
        if !(c > 0.0 && b > 0.0 && b.is_finite()) {
            return Err(Error::InvalidArgument(format!("bandwidth must be positive, got C = {c}, δ = {delta}")));
        }
        Ok(Bandwidth { c, delta, n, b })
    }

    /// A bandwidth given directly.
    pub fn fixed(b: f64) -> Result<Self> {
        Self::new(b, 0.0, 1)
    }

    /// The bandwidths used for the ASE tables: `C` per `(H, h)` cell and
    /// `δ = 0.2`, or `0.099` when `h = 0.95`. Off-grid parameters take the
    /// constant of the nearest cell.
    pub fn table_default(big_h: f64, h: f64, n: usize) -> Result<Self> {
        let (c, delta) = table_constant(big_h, h);
        Self::new(c, delta, n)
    }
}

const TABLE_GRID: [f64; 4] = [0.65, 0.75, 0.85, 0.95];
const TABLE_C: [[f64; 4]; 4] = [
    [3.0, 3.5, 4.0, 1.5],
    [4.0, 4.0, 4.0, 2.0],
    [4.5, 6.0, 5.0, 2.5],
    [6.0, 7.0, 7.5, 4.5],
];

fn nearest(v: f64) -> usize {
    (0..4)
        .min_by(|&a, &b| (TABLE_GRID[a] - v).abs().total_cmp(&(TABLE_GRID[b] - v).abs()))
        .unwrap_or(0)
}

/// `(C, δ)` for a parameter cell.
pub fn table_constant(big_h: f64, h: f64) -> (f64, f64) {
    let j = nearest(h);
    let delta = if j == 3 { 0.099 } else { 0.2 };
    (TABLE_C[nearest(big_h)][j], delta)
}

/// One point estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    pub x: f64,
    pub value: f64,
    pub b: f64,
    pub phi_n_x: f64,
}

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Precomputed state for evaluating
/// `σ̂²(x) = (nφ_n(x))^{-1} Σ K_b(x − X_t) ẽ_t²` at many points.
#[derive(Debug, Clone)]
pub struct VarianceEstimator {
    /// `(X_t, ẽ_t²)` sorted by `X_t`, then by `ẽ_t²`.
    points: Vec<(f64, f64)>,
    xbar: f64,
    s: f64,
    b: f64,
    kernel: Kernel,
}

impl VarianceEstimator {
    pub fn new(x: &[f64], residuals: &[f64], bandwidth: Bandwidth, kernel: Kernel) -> Result<Self> {
        check_same_len(x.len(), residuals.len())?;
        if x.len() < 2 {
            return Err(Error::TooShort { needed: 2, got: x.len() });
        }
        if !(bandwidth.b > 0.0) {
            return Err(Error::InvalidArgument("bandwidth must be positive".into()));
        }
        let (xbar, s2) = mean_var(x);
        let s = s2.sqrt();
        if !(s > 0.0) {
            return Err(Error::Degenerate("design has zero sample variance".into()));
        }
        let mut points: Vec<(f64, f64)> = x.iter().zip(residuals).map(|(&a, &e)| (a, e * e)).collect();
        points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        Ok(VarianceEstimator { points, xbar, s, b: bandwidth.b, kernel })
    }

    pub fn xbar(&self) -> f64 {
        self.xbar
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// `φ_n(x) = s⁻¹ φ((x − X̄)/s)`.
    pub fn phi_n(&self, x: f64) -> f64 {
        normal_pdf((x - self.xbar) / self.s) / self.s
    }

    /// `n⁻¹ Σ K_b(x − X_t) ẽ_t²`, summing only the points inside the
    /// kernel window.
    pub fn kernel_sum(&self, x: f64) -> f64 {
        let r = self.kernel.radius() * self.b;
        let lo = self.points.partition_point(|p| p.0 < x - r);
        let hi = self.points.partition_point(|p| p.0 <= x + r);
        let total: f64 = self.points[lo..hi]
            .iter()
            .map(|&(xt, e2)| self.kernel.scaled(x - xt, self.b) * e2)
            .sum();
        total / self.points.len() as f64
    }

    pub fn estimate(&self, x: f64) -> Result<VarianceEstimate> {
        if !x.is_finite() || (x - self.xbar).abs() > SUPPORT_SDS * self.s {
            return Err(Error::OutOfSupport { x });
        }
        let phi = self.phi_n(x);
        if phi < 1e-300 {
            return Err(Error::OutOfSupport { x });
        }
        Ok(VarianceEstimate { x, value: self.kernel_sum(x) / phi, b: self.b, phi_n_x: phi })
    }

    pub fn estimate_grid(&self, grid: &[f64], exec: Execution) -> Result<Vec<VarianceEstimate>> {
        par::map_slice(exec, grid, |&x| self.estimate(x)).into_iter().collect()
    }
}

pub fn sigma2_hat(x: f64, design: &[f64], residuals: &[f64], bandwidth: Bandwidth, kernel: Kernel) -> Result<VarianceEstimate> {
    VarianceEstimator::new(design, residuals, bandwidth, kernel)?.estimate(x)
}

/// The 301-point grid `−1.50, −1.49, …, 1.50`.
pub fn default_grid() -> Vec<f64> {
    (0..=300).map(|k| (k as f64 - 150.0) / 100.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BandwidthCase {
    #[serde(rename = "a")]
    A,
    #[serde(rename = "b")]
    B,
}

/// Feasible exponents `δ ∈ (lo, hi)` for `b ∝ n^{−δ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthRange {
    pub case: BandwidthCase,
    pub lo: f64,
    pub hi: f64,
}

pub fn bandwidth_range(big_h: f64, h: f64) -> Result<BandwidthRange> {
    check_open_unit_half("H", big_h)?;
    check_open_unit_half("h", h)?;
    let boundary = (1.0 + h) / 2.0;
    if (big_h - boundary).abs() < 1e-12 {
        return Err(Error::Domain { what: "H", value: big_h, domain: "H ≠ (1 + h)/2" });
    }
    Ok(if big_h < boundary {
        let hi = if h > 0.75 { 2.0 * (1.0 - h) } else { 2.0 * h - 1.0 };
        BandwidthRange { case: BandwidthCase::A, lo: (1.0 - h) / 2.0, hi }
    } else {
        let hi = if h < 0.75 { 2.0 * h - 1.0 } else { 2.0 - 2.0 * h };
        BandwidthRange { case: BandwidthCase::B, lo: 1.0 - big_h, hi }
    })
}

/// `Σ(σ̂²(x_k)/σ²(x_k) − 1)² / K`.
pub fn ase(estimates: &[f64], truth: &[f64]) -> Result<f64> {
    check_same_len(estimates.len(), truth.len())?;
    if estimates.is_empty() {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    let mut acc = 0.0;
    for (e, t) in estimates.iter().zip(truth) {
        if *t == 0.0 {
            return Err(Error::InvalidArgument("true variance is zero on the grid".into()));
        }
        acc += (e / t - 1.0).powi(2);
    }
    Ok(acc / estimates.len() as f64)
}
