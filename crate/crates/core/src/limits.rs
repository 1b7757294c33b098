//! Limit constants, samplers for the nonstandard limit laws and the block
//! bootstrap for the long-run variance.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta;

use crate::error::{check_open_unit_half, Error, Result};
use crate::par::{self, Execution};
use crate::rng::{derive_seed, stream_rng, Stream};
use crate::sim::constants::{acvf_fgn, farima_raw_variance, farima_tail_constant, fgn_tail_constant};
use crate::sim::{GaussianSampler, InnovationScale};

/// `a(z) = ∫₀¹ u^{z−3/2}(1−u)^{1−2z} du = B(z − 1/2, 2 − 2z)`.
pub fn a_beta(z: f64) -> Result<f64> {
    check_open_unit_half("z", z)?;
    Ok(beta(z - 0.5, 2.0 - 2.0 * z))
}

/// `√(2(2H+2h−3)(2H+2h−2))/(2H+2h−1) · √(Hh/((2H−1)(2h−1)))`.
pub fn correl_lemma22(big_h: f64, h: f64) -> Result<f64> {
    check_open_unit_half("H", big_h)?;
    check_open_unit_half("h", h)?;
    let s = 2.0 * big_h + 2.0 * h;
    if s <= 3.0 {
        return Err(Error::Domain { what: "H + h", value: big_h + h, domain: "(3/2, 2)" });
    }
    Ok((2.0 * (s - 3.0) * (s - 2.0)).sqrt() / (s - 1.0) * (big_h * h / ((2.0 * big_h - 1.0) * (2.0 * h - 1.0))).sqrt())
}

/// `(2H/(4H−1)) √((4H−3)/(2H−1))`, defined for `3/4 ≤ H < 1`.
pub fn correl_thm31b(big_h: f64) -> Result<f64> {
    if !(0.75..1.0).contains(&big_h) {
        return Err(Error::Domain { what: "H", value: big_h, domain: "[3/4, 1)" });
    }
    Ok(2.0 * big_h / (4.0 * big_h - 1.0) * ((4.0 * big_h - 3.0) / (2.0 * big_h - 1.0)).sqrt())
}

/// `1 + (a+b+1) B(a+1, b+1)` with `a = 2H−1`, `b = 2h−1`: the ratio of the
/// full triple-integral covariance to its first term.
fn cross_term_factor(big_h: f64, h: f64) -> f64 {
    let (a, b) = (2.0 * big_h - 1.0, 2.0 * h - 1.0);
    1.0 + (a + b + 1.0) * beta(a + 1.0, b + 1.0)
}

/// Limit of `Correl(n^{1−H−h}ΣX_t u_t, n^{−H}Σu_t · n^{−h}ΣX_t)` from the
/// power-law covariances, keeping both terms of
/// `∫₀¹ (t^a + (1−t)^a)(t^b + (1−t)^b) dt = 2/(a+b+1) + 2B(a+1, b+1)`.
pub fn limit_product_correlation(big_h: f64, h: f64) -> Result<f64> {
    Ok(correl_lemma22(big_h, h)? * cross_term_factor(big_h, h))
}

/// Limit of `Correl(n^{1−2H}Σ(u_t² − 1), (n^{−H}Σu_t)²)` for Gaussian `u`,
/// with both terms kept as in [`limit_product_correlation`].
pub fn limit_square_correlation(big_h: f64) -> Result<f64> {
    Ok(correl_thm31b(big_h)? * cross_term_factor(big_h, big_h))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitKind {
    /// `𝒵₂` with independent random measures.
    Z2Independent,
    /// `𝒵₂*`, a single random measure with exponent `H`.
    Z2Star,
    /// `γ⁻¹[c₁𝒵₂ − σ₀Z₁Z₂]`.
    CompositeThm21,
}

/// Plug-in constants `(c₁, σ₀, γ)` for the composite law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plugins {
    pub c1: f64,
    pub sigma0: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Z2Request {
    pub big_h: f64,
    pub h: f64,
    pub kind: LimitKind,
    pub grid_size: usize,
    pub n_draws: usize,
    pub seed: u64,
    /// Variance convention of the errors; fixes the tail constant `c_u`.
    pub error_scale: InnovationScale,
    pub plugins: Option<Plugins>,
}

impl Z2Request {
    pub fn new(big_h: f64, h: f64, kind: LimitKind, grid_size: usize, n_draws: usize, seed: u64) -> Self {
        Z2Request {
            big_h,
            h,
            kind,
            grid_size,
            n_draws,
            seed,
            error_scale: InnovationScale::UnitVariance,
            plugins: None,
        }
    }

    pub fn with_error_scale(mut self, scale: InnovationScale) -> Self {
        self.error_scale = scale;
        self
    }

    pub fn with_plugins(mut self, plugins: Plugins) -> Self {
        self.plugins = Some(plugins);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitLawSample {
    pub draws: Vec<f64>,
    pub grid_size: usize,
    pub kind: LimitKind,
    /// Variance share left out by the discretization window (none: the
    /// driving integrals are simulated exactly on `(−∞, 1]`).
    pub neglected_mass: f64,
}

/// ACVF tail constant `c_u` in `γ_u(k) ~ c_u k^{2H−2}`.
pub fn error_tail_constant(big_h: f64, scale: InnovationScale) -> f64 {
    let d = big_h - 0.5;
    let c = farima_tail_constant(d);
    match scale {
        InnovationScale::UnitVariance => c,
        InnovationScale::UnitInnovation => c * farima_raw_variance(d),
    }
}

/// Cell averages of `W(s) = ∫(s−x)_+^{H−3/2} dℬ(x)` over the cells of
/// `[0, 1]`, scaled so the long-run covariance is `c k^{2H−2}`. The cell
/// means of `W` are exactly `√(a(H)/(H(2H−1))) Δ^{H−1}` times fGn.
struct CellProcess {
    sampler: GaussianSampler,
    /// `√(c/(H(2H−1))) Δ^{H−1}`: the `a(H)` of the kernel cancels against
    /// the `a(H)` in `C̃`.
    scale: f64,
}

impl CellProcess {
    fn new(grid: usize, big_h: f64, tail: f64) -> Result<Self> {
        let sampler = GaussianSampler::from_acvf(grid, |k| acvf_fgn(k, big_h))?;
        let delta = 1.0 / grid as f64;
        let scale = (tail / fgn_tail_constant(big_h)).sqrt() * delta.powf(big_h - 1.0);
        Ok(CellProcess { sampler, scale })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut w = self.sampler.sample(rng);
        w.iter_mut().for_each(|v| *v *= self.scale);
        w
    }
}

/// One draw of `(𝒵₂, Z₁, Z₂)` from independent measures: `𝒵₂ = ΔΣW₁W₂`,
/// `Z_j = ΔΣW_j`.
fn draw_independent<R: Rng + ?Sized>(p1: &CellProcess, p2: &CellProcess, r1: &mut R, r2: &mut R) -> (f64, f64, f64) {
    let w1 = p1.sample(r1);
    let w2 = p2.sample(r2);
    let delta = 1.0 / w1.len() as f64;
    let z2cal = delta * w1.iter().zip(&w2).map(|(a, b)| a * b).sum::<f64>();
    let z1 = delta * w1.iter().sum::<f64>();
    let z2 = delta * w2.iter().sum::<f64>();
    (z2cal, z1, z2)
}

/// Draws from the limit laws. Each draw has its own seed derived from
/// `(seed, draw)`, so results do not depend on scheduling.
pub fn sample_z2(req: &Z2Request, exec: Execution) -> Result<LimitLawSample> {
    let (big_h, h) = (req.big_h, req.h);
    check_open_unit_half("H", big_h)?;
    check_open_unit_half("h", h)?;
    if req.grid_size < 64 {
        return Err(Error::InvalidArgument(format!("grid_size must be at least 64, got {}", req.grid_size)));
    }
    let c_u = error_tail_constant(big_h, req.error_scale);
    let c_x = fgn_tail_constant(h);
    let draw_rngs = |i: usize| {
        let base = derive_seed(req.seed, &[i as u64]);
        (stream_rng(derive_seed(base, &[1]), Stream::Limit), stream_rng(derive_seed(base, &[2]), Stream::Limit))
    };
    let draws = match req.kind {
        LimitKind::Z2Independent | LimitKind::CompositeThm21 => {
            if req.kind == LimitKind::CompositeThm21 && big_h.min(h) <= 0.75 {
                return Err(Error::Domain { what: "min(H, h)", value: big_h.min(h), domain: "(3/4, 1)" });
            }
            if big_h + h <= 1.5 {
                return Err(Error::Domain { what: "H + h", value: big_h + h, domain: "(3/2, 2)" });
            }
            let p1 = CellProcess::new(req.grid_size, big_h, c_u)?;
            let p2 = CellProcess::new(req.grid_size, h, c_x)?;
            let plugins = req.plugins;
            if req.kind == LimitKind::CompositeThm21 && plugins.is_none() {
                return Err(Error::InvalidArgument("composite law needs plug-in constants".into()));
            }
            if let Some(p) = plugins {
                if !(p.gamma > 0.0) {
                    return Err(Error::InvalidArgument("γ must be positive".into()));
                }
            }
            par::map_indexed(exec, req.n_draws, |i| {
                let (mut r1, mut r2) = draw_rngs(i);
                let (z2cal, z1, z2) = draw_independent(&p1, &p2, &mut r1, &mut r2);
                match (req.kind, plugins) {
                    (LimitKind::CompositeThm21, Some(p)) => (p.c1 * z2cal - p.sigma0 * z1 * z2) / p.gamma,
                    _ => z2cal,
                }
            })
        }
        LimitKind::Z2Star => {
            if big_h <= 0.75 {
                return Err(Error::Domain { what: "H", value: big_h, domain: "(3/4, 1)" });
            }
            let p = CellProcess::new(req.grid_size, big_h, c_u)?;
            let var_w = p.scale * p.scale;
            par::map_indexed(exec, req.n_draws, |i| {
                let (mut r1, _) = draw_rngs(i);
                let w = p.sample(&mut r1);
                let delta = 1.0 / w.len() as f64;
                delta * w.iter().map(|v| v * v - var_w).sum::<f64>()
            })
        }
    };
    Ok(LimitLawSample { draws, grid_size: req.grid_size, kind: req.kind, neglected_mass: 0.0 })
}

/// `⌈n^{1/3}⌉`.
pub fn default_block_len(n: usize) -> usize {
    ((n as f64).cbrt().ceil() as usize).max(1)
}

/// Moving-block bootstrap estimate of `Var(n^{−1/2} Σ x_t)`: `B` series of
/// length `n` are assembled from uniformly chosen overlapping blocks, and
/// the variance of their normalized sums is returned.
pub fn kappa2_block_bootstrap(summands: &[f64], block_len: usize, resamples: usize, seed: u64, exec: Execution) -> Result<f64> {
    let n = summands.len();
    if n < 2 {
        return Err(Error::TooShort { needed: 2, got: n });
    }
    if block_len < 1 || block_len > n {
        return Err(Error::InvalidArgument(format!("block length {block_len} outside [1, {n}]")));
    }
    if resamples < 2 {
        return Err(Error::InvalidArgument("need at least two resamples".into()));
    }
    // block sums by prefix differences
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in summands {
        prefix.push(prefix.last().unwrap() + v);
    }
    let starts = n - block_len + 1;
    let full_blocks = n / block_len;
    let tail = n - full_blocks * block_len;
    let root_n = (n as f64).sqrt();
    let stats = par::map_indexed(exec, resamples, |b| {
        let mut rng = stream_rng(derive_seed(seed, &[b as u64]), Stream::Bootstrap);
        let mut total = 0.0;
        for _ in 0..full_blocks {
            let s = rng.random_range(0..starts);
            total += prefix[s + block_len] - prefix[s];
        }
        if tail > 0 {
            let s = rng.random_range(0..starts);
            total += prefix[s + tail] - prefix[s];
        }
        total / root_n
    });
    let mean = stats.iter().sum::<f64>() / resamples as f64;
    Ok(stats.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / resamples as f64)
}
