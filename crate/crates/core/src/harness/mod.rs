//! Monte Carlo harness. Every replication draws from seeds derived from
//! `(master seed, table, H, h, replication)`, so results are identical for
//! any number of worker threads and any cell can be rerun alone.

pub mod config;
pub mod experiments;
pub mod stats;
pub mod tables;

pub use config::{BandwidthRule, ExperimentConfig, Model, ModelDraw, ResidualKind, VarianceFn};
pub use stats::{rmse, Summary};
pub use tables::{run_ase_table, run_table1, run_table2, Cell, Provenance, TableId, TableResult};
