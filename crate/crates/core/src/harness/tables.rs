//! Monte Carlo tables: RMSE of the slope, RMSE of the memory estimate and
//! the ASE summaries of the variance estimator.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Model, ResidualKind};
use super::stats::{self, Summary};
use crate::error::{Error, Result};
use crate::kernel::{ase, default_grid, VarianceEstimator};
use crate::par::{self, Execution};
use crate::regress::{fit_lse, slope_only_residuals, Basis};
use crate::rng::replication_seed;
use crate::whittle::{local_whittle, DEFAULT_BRACKET};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableId {
    SlopeRmse,
    HurstRmse,
    Ase,
}

impl TableId {
    /// Seed-path component.
    pub fn code(self) -> u64 {
        match self {
            TableId::SlopeRmse => 1,
            TableId::HurstRmse => 2,
            TableId::Ase => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    #[serde(rename = "H")]
    pub big_h: f64,
    pub h: f64,
    /// RMSE for the RMSE tables, median ASE for the ASE table.
    pub value: f64,
    /// Mean squared error alongside the RMSE tables.
    pub mse: Option<f64>,
    pub summary: Option<Summary>,
    /// Bandwidth `C` and `δ` for the ASE table.
    pub bandwidth: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableResult {
    pub table: TableId,
    pub statistic: String,
    pub n: usize,
    pub reps: usize,
    pub master_seed: u64,
    pub cells: Vec<Cell>,
}

/// Run metadata written next to a table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub config: ExperimentConfig,
    pub runtime_secs: f64,
    pub threads: usize,
}

impl TableResult {
    pub fn cell(&self, big_h: f64, h: f64) -> Option<&Cell> {
        self.cells.iter().find(|c| c.big_h == big_h && c.h == h)
    }

    /// CSV with a row per `H`, a column per `h` for the
    /// RMSE tables; a row per `h` with the bandwidth and quartiles for the
    /// ASE table.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        if self.table == TableId::Ase {
            s.push_str("H,h,C,delta,Q1,median,mean,Q3\n");
            for c in &self.cells {
                let (bc, bd) = c.bandwidth.unwrap_or((f64::NAN, f64::NAN));
                let q = c.summary.unwrap_or(Summary { q1: f64::NAN, median: c.value, mean: f64::NAN, q3: f64::NAN });
                let _ = writeln!(s, "{},{},{},{},{},{},{},{}", c.big_h, c.h, bc, bd, q.q1, q.median, q.mean, q.q3);
            }
            return s;
        }
        let mut hs: Vec<f64> = self.cells.iter().map(|c| c.h).collect();
        hs.sort_by(f64::total_cmp);
        hs.dedup();
        let mut bhs: Vec<f64> = self.cells.iter().map(|c| c.big_h).collect();
        bhs.sort_by(f64::total_cmp);
        bhs.dedup();
        s.push_str("H\\h");
        for h in &hs {
            let _ = write!(s, ",{h}");
        }
        s.push('\n');
        for bh in &bhs {
            let _ = write!(s, "{bh}");
            for h in &hs {
                match self.cell(*bh, *h) {
                    Some(c) => {
                        let _ = write!(s, ",{}", c.value);
                    }
                    None => s.push(','),
                }
            }
            s.push('\n');
        }
        s
    }
}

fn per_cell<T, F>(cfg: &ExperimentConfig, table: TableId, big_h: f64, h: f64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&Model, u64) -> Result<T> + Sync + Send,
{
    let model = Model::new(cfg, cfg.n, big_h, h)?;
    par::try_map_indexed(cfg.execution, cfg.reps, |rep| {
        f(&model, replication_seed(cfg.master_seed, table.code(), big_h, h, rep as u64))
    })
}

fn cells_in_order<F>(cfg: &ExperimentConfig, f: F) -> Result<Vec<Cell>>
where
    F: Fn(f64, f64) -> Result<Cell> + Sync + Send,
{
    // Cells run one after another; the replications inside each cell are
    // the parallel unit.
    cfg.cells().into_iter().map(|(bh, h)| f(bh, h)).collect()
}

/// RMSE (and MSE) of `β̂₁` per `(H, h)` cell.
pub fn run_table1(cfg: &ExperimentConfig) -> Result<TableResult> {
    cfg.validate()?;
    let truth = cfg.beta[1];
    let cells = cells_in_order(cfg, |bh, h| {
        let est = per_cell(cfg, TableId::SlopeRmse, bh, h, |m, seed| {
            let d = m.draw(seed);
            Ok(fit_lse(&d.x, &d.y, &Basis::SimpleLinear)?.beta_hat[1])
        })?;
        Ok(Cell {
            big_h: bh,
            h,
            value: stats::rmse(&est, truth)?,
            mse: Some(stats::mse(&est, truth)?),
            summary: None,
            bandwidth: None,
        })
    })?;
    Ok(TableResult {
        table: TableId::SlopeRmse,
        statistic: "rmse_beta1".into(),
        n: cfg.n,
        reps: cfg.reps,
        master_seed: cfg.master_seed,
        cells,
    })
}

/// RMSE of `Ĥ` from local Whittle on `Y_t − β̂₁X_t`.
pub fn run_table2(cfg: &ExperimentConfig) -> Result<TableResult> {
    cfg.validate()?;
    let m = cfg.m_rule.resolve(cfg.n);
    let cells = cells_in_order(cfg, |bh, h| {
        let est = per_cell(cfg, TableId::HurstRmse, bh, h, |model, seed| {
            let d = model.draw(seed);
            let fit = fit_lse(&d.x, &d.y, &Basis::SimpleLinear)?;
            let resid = slope_only_residuals(&d.x, &d.y, fit.beta_hat[1])?;
            Ok(local_whittle(&resid, m, DEFAULT_BRACKET)?.h_hat)
        })?;
        Ok(Cell {
            big_h: bh,
            h,
            value: stats::rmse(&est, bh)?,
            mse: Some(stats::mse(&est, bh)?),
            summary: None,
            bandwidth: None,
        })
    })?;
    Ok(TableResult {
        table: TableId::HurstRmse,
        statistic: "rmse_H_hat".into(),
        n: cfg.n,
        reps: cfg.reps,
        master_seed: cfg.master_seed,
        cells,
    })
}

/// ASE values of one cell, one per replication.
pub fn ase_replications(cfg: &ExperimentConfig, big_h: f64, h: f64) -> Result<Vec<f64>> {
    let grid = default_grid();
    let truth: Vec<f64> = grid.iter().map(|&x| cfg.sigma.sigma2(x)).collect();
    let bw = cfg.bandwidth.resolve(big_h, h, cfg.n)?;
    per_cell(cfg, TableId::Ase, big_h, h, |model, seed| {
        let d = model.draw(seed);
        let fit = fit_lse(&d.x, &d.y, &Basis::SimpleLinear)?;
        let resid = match cfg.residuals {
            ResidualKind::Full => fit.residuals,
            ResidualKind::SlopeOnly => slope_only_residuals(&d.x, &d.y, fit.beta_hat[1])?,
        };
        let est = VarianceEstimator::new(&d.x, &resid, bw, cfg.kernel)?;
        let values: Vec<f64> = est
            .estimate_grid(&grid, Execution::Sequential)?
            .into_iter()
            .map(|e| e.value)
            .collect();
        ase(&values, &truth)
    })
}

/// ASE quartile summaries for `H = big_h` and every `h` of the config.
pub fn run_ase_table(cfg: &ExperimentConfig, big_h: f64) -> Result<TableResult> {
    cfg.validate()?;
    if !cfg.big_h_grid.is_empty() && !cfg.big_h_grid.contains(&big_h) {
        return Err(Error::InvalidArgument(format!("H = {big_h} is not in the configured grid")));
    }
    let mut cells = Vec::with_capacity(cfg.h_grid.len());
    for &h in &cfg.h_grid {
        let values = ase_replications(cfg, big_h, h)?;
        let s = stats::summary(&values)?;
        let bw = cfg.bandwidth.resolve(big_h, h, cfg.n)?;
        cells.push(Cell {
            big_h,
            h,
            value: s.median,
            mse: None,
            summary: Some(s),
            bandwidth: Some((bw.c, bw.delta)),
        });
    }
    Ok(TableResult {
        table: TableId::Ase,
        statistic: "ase_sigma2_hat".into(),
        n: cfg.n,
        reps: cfg.reps,
        master_seed: cfg.master_seed,
        cells,
    })
}

/// Runs `f`, returning its value with provenance.
pub fn with_provenance<T>(cfg: &ExperimentConfig, f: impl FnOnce() -> Result<T>) -> Result<(T, Provenance)> {
    let start = Instant::now();
    let out = f()?;
    Ok((
        out,
        Provenance {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: cfg.clone(),
            runtime_secs: start.elapsed().as_secs_f64(),
            threads: current_threads(cfg.execution),
        },
    ))
}

fn current_threads(exec: Execution) -> usize {
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return rayon::current_num_threads();
    }
    let _ = exec;
    1
}
