//! Distributional and rate experiments around the slope estimator.

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Model};
use super::stats;
use crate::error::Result;
use crate::limits::{sample_z2, LimitKind, Plugins, Z2Request};
use crate::par;
use crate::quad::normal_expectation;
use crate::regress::{fit_lse, Basis};
use crate::rng::{derive_seed, replication_seed, stream_rng, Stream};
use crate::sim::{FarimaGenerator, InnovationScale};

const RATE_TABLE: u64 = 10;
const PRODUCT_TABLE: u64 = 11;
const SQUARE_TABLE: u64 = 12;
const KS_TABLE: u64 = 13;

/// `β̂₁ − β₁` over `reps` replications at sample size `n`.
pub fn slope_errors(cfg: &ExperimentConfig, table: u64, n: usize, big_h: f64, h: f64, reps: usize) -> Result<Vec<f64>> {
    let model = Model::new(cfg, n, big_h, h)?;
    par::try_map_indexed(cfg.execution, reps, |rep| {
        let seed = replication_seed(cfg.master_seed, table, big_h, h, derive_seed(n as u64, &[rep as u64]));
        let d = model.draw(seed);
        Ok(fit_lse(&d.x, &d.y, &Basis::SimpleLinear)?.beta_hat[1] - cfg.beta[1])
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateCheck {
    pub n: usize,
    pub rmse_n: f64,
    pub rmse_4n: f64,
    /// `rmse_n / rmse_4n`.
    pub ratio: f64,
}

/// RMSE of `β̂₁` at `n` and `4n`.
pub fn rate_check(cfg: &ExperimentConfig, n: usize, big_h: f64, h: f64, reps: usize) -> Result<RateCheck> {
    let a = stats::rmse(&slope_errors(cfg, RATE_TABLE, n, big_h, h, reps)?, 0.0)?;
    let b = stats::rmse(&slope_errors(cfg, RATE_TABLE, 4 * n, big_h, h, reps)?, 0.0)?;
    Ok(RateCheck { n, rmse_n: a, rmse_4n: b, ratio: a / b })
}

/// `4^{2−H−h}`, the shrink factor under the nonstandard rate.
pub fn nonstandard_rate_factor(big_h: f64, h: f64) -> f64 {
    4f64.powf(2.0 - big_h - h)
}

/// Empirical `Correl(n^{1−H−h}ΣX_t u_t, n^{−H}Σu_t · n^{−h}ΣX_t)`.
pub fn product_correlation(cfg: &ExperimentConfig, n: usize, big_h: f64, h: f64, reps: usize) -> Result<f64> {
    let model = Model::new(cfg, n, big_h, h)?;
    let nf = n as f64;
    let pairs = par::map_indexed(cfg.execution, reps, |rep| {
        let d = model.draw(replication_seed(cfg.master_seed, PRODUCT_TABLE, big_h, h, rep as u64));
        let sxu: f64 = d.x.iter().zip(&d.u).map(|(x, u)| x * u).sum();
        let su: f64 = d.u.iter().sum();
        let sx: f64 = d.x.iter().sum();
        (nf.powf(1.0 - big_h - h) * sxu, nf.powf(-big_h) * su * nf.powf(-h) * sx)
    });
    let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    stats::correlation(&a, &b)
}

/// Empirical `Correl(n^{1−2H}Σ(u_t² − 1), (n^{−H}Σu_t)²)` for unit-variance
/// errors.
pub fn square_correlation(cfg: &ExperimentConfig, n: usize, big_h: f64, reps: usize) -> Result<f64> {
    let gen = FarimaGenerator::new(n, big_h, cfg.farima_method, InnovationScale::UnitVariance)?;
    let nf = n as f64;
    let pairs = par::map_indexed(cfg.execution, reps, |rep| {
        let seed = replication_seed(cfg.master_seed, SQUARE_TABLE, big_h, big_h, rep as u64);
        let u = gen.sample(&mut stream_rng(seed, Stream::Error));
        let sq: f64 = u.iter().map(|v| v * v - 1.0).sum();
        let s: f64 = u.iter().sum();
        (nf.powf(1.0 - 2.0 * big_h) * sq, (nf.powf(-big_h) * s).powi(2))
    });
    let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    stats::correlation(&a, &b)
}

/// `(c₁, σ₀, γ) = (E X²σ(X), E σ(X), 1)` for the standard normal design.
pub fn true_plugins(cfg: &ExperimentConfig) -> Plugins {
    let sigma = cfg.sigma;
    Plugins {
        c1: normal_expectation(|x| x * x * sigma.sigma(x)),
        sigma0: normal_expectation(|x| sigma.sigma(x)),
        gamma: 1.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitKsCheck {
    pub ks: f64,
    pub plugins: Plugins,
    pub mc_draws: usize,
    pub limit_draws: usize,
    pub grid_size: usize,
}

/// KS distance between `n^{2−H−h}(β̂₁ − β₁)` and draws of the composite
/// limit law with the true plug-in constants.
pub fn limit_ks(cfg: &ExperimentConfig, n: usize, big_h: f64, h: f64, reps: usize, grid_size: usize, draws: usize) -> Result<LimitKsCheck> {
    let scale = (n as f64).powf(2.0 - big_h - h);
    let mc: Vec<f64> = slope_errors(cfg, KS_TABLE, n, big_h, h, reps)?.into_iter().map(|e| e * scale).collect();
    let plugins = true_plugins(cfg);
    let req = Z2Request::new(big_h, h, LimitKind::CompositeThm21, grid_size, draws, derive_seed(cfg.master_seed, &[KS_TABLE]))
        .with_error_scale(cfg.innovation_scale)
        .with_plugins(plugins);
    let lim = sample_z2(&req, cfg.execution)?;
    Ok(LimitKsCheck { ks: stats::ks_two_sample(&mc, &lim.draws)?, plugins, mc_draws: reps, limit_draws: draws, grid_size })
}
