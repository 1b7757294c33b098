//! Experiment configuration and the simulated regression model.

use serde::{Deserialize, Serialize};

use crate::error::{check_open_unit_half, Error, Result};
use crate::kernel::{Bandwidth, Kernel};
use crate::par::Execution;
use crate::rng::{stream_rng, Stream};
use crate::sim::{FarimaGenerator, FarimaMethod, FgnGenerator, InnovationScale};
use crate::whittle::MRule;

/// Conditional standard deviation `σ(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceFn {
    /// `σ²(x) = 1 + x²`.
    #[default]
    OnePlusXSq,
    /// `σ ≡ 1`.
    Constant,
}

impl VarianceFn {
    pub fn sigma(self, x: f64) -> f64 {
        self.sigma2(x).sqrt()
    }

    pub fn sigma2(self, x: f64) -> f64 {
        match self {
            VarianceFn::OnePlusXSq => 1.0 + x * x,
            VarianceFn::Constant => 1.0,
        }
    }
}

/// Bandwidth for the variance estimates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum BandwidthRule {
    /// Per-cell constants of the ASE tables.
    #[default]
    Table,
    /// `C n^{−δ}` for every cell.
    Fixed { c: f64, delta: f64 },
}

impl BandwidthRule {
    pub fn resolve(self, big_h: f64, h: f64, n: usize) -> Result<Bandwidth> {
        match self {
            BandwidthRule::Table => Bandwidth::table_default(big_h, h, n),
            BandwidthRule::Fixed { c, delta } => Bandwidth::new(c, delta, n),
        }
    }
}

/// Residuals fed to the variance and memory estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualKind {
    /// `Y_t − β̂'r(X_t)`.
    #[default]
    Full,
    /// `Y_t − β̂₁X_t`.
    SlopeOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub reps: usize,
    #[serde(rename = "H_grid")]
    pub big_h_grid: Vec<f64>,
    pub h_grid: Vec<f64>,
    /// `(β₀, β₁)`.
    pub beta: [f64; 2],
    pub sigma: VarianceFn,
    pub bandwidth: BandwidthRule,
    pub kernel: Kernel,
    pub m_rule: MRule,
    pub master_seed: u64,
    pub innovation_scale: InnovationScale,
    pub farima_method: FarimaMethod,
    pub residuals: ResidualKind,
    #[serde(skip)]
    pub execution: Execution,
}

pub const STANDARD_GRID: [f64; 8] = [0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95];
pub const DEFAULT_MASTER_SEED: u64 = 20_070_601;

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: 500,
            reps: 400,
            big_h_grid: STANDARD_GRID.to_vec(),
            h_grid: STANDARD_GRID.to_vec(),
            beta: [0.0, 2.0],
            sigma: VarianceFn::OnePlusXSq,
            bandwidth: BandwidthRule::Table,
            kernel: Kernel::Cosine,
            m_rule: MRule::MaxFourier,
            master_seed: DEFAULT_MASTER_SEED,
            innovation_scale: InnovationScale::UnitInnovation,
            farima_method: FarimaMethod::Exact,
            residuals: ResidualKind::Full,
            execution: Execution::Parallel,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reps < 1 {
            return Err(Error::InvalidArgument("reps must be at least 1".into()));
        }
        if self.n < 8 {
            return Err(Error::TooShort { needed: 8, got: self.n });
        }
        for &v in &self.big_h_grid {
            check_open_unit_half("H", v)?;
        }
        for &v in &self.h_grid {
            check_open_unit_half("h", v)?;
        }
        Ok(())
    }

    pub fn cells(&self) -> Vec<(f64, f64)> {
        self.big_h_grid
            .iter()
            .flat_map(|&bh| self.h_grid.iter().map(move |&h| (bh, h)))
            .collect()
    }
}

/// One simulated data set.
#[derive(Debug, Clone)]
pub struct ModelDraw {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub y: Vec<f64>,
}

/// Generators for `Y_t = β₀ + β₁X_t + σ(X_t)u_t` at one `(H, h)` cell,
/// built once and shared by all replications.
#[derive(Debug)]
pub struct Model {
    pub big_h: f64,
    pub h: f64,
    pub beta: [f64; 2],
    pub sigma: VarianceFn,
    design: FgnGenerator,
    errors: FarimaGenerator,
}

impl Model {
    pub fn new(cfg: &ExperimentConfig, n: usize, big_h: f64, h: f64) -> Result<Self> {
        Ok(Model {
            big_h,
            h,
            beta: cfg.beta,
            sigma: cfg.sigma,
            design: FgnGenerator::new(n, h, 0.0, 1.0)?,
            errors: FarimaGenerator::new(n, big_h, cfg.farima_method, cfg.innovation_scale)?,
        })
    }

    /// Design from the design stream of `seed`, errors from its error stream.
    pub fn draw(&self, seed: u64) -> ModelDraw {
        let x = self.design.sample(&mut stream_rng(seed, Stream::Design));
        let u = self.errors.sample(&mut stream_rng(seed, Stream::Error));
        let y = x
            .iter()
            .zip(&u)
            .map(|(&xi, &ui)| self.beta[0] + self.beta[1] * xi + self.sigma.sigma(xi) * ui)
            .collect();
        ModelDraw { x, u, y }
    }
}
