use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use lmreg::gof::{dn_test, loo_variance, Standardization};
use lmreg::harness::{self, ExperimentConfig, TableId};
use lmreg::kernel::{default_grid, Bandwidth, Kernel, VarianceEstimator};
use lmreg::regress::{fit_lse, Basis};
use lmreg::sim::{gen_farima, gen_fgn, FarimaMethod, InnovationScale, LmSeries};
use lmreg::whittle::{local_whittle, MRule, DEFAULT_BRACKET};
use lmreg::Execution;
use lmreg_cli::{check_residuals, qq_data, read_fx_file, read_series, run_pipeline, write_atomic, AppError, IngestOptions, PipelineOptions};

const VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    " (rev ",
    env!("LMREG_GIT_REV"),
    ", ",
    env!("LMREG_BUILD_PROFILE"),
    ", ",
    env!("LMREG_FEATURES"),
    ")"
);

#[derive(Parser)]
#[command(name = "lmreg", version = VERSION, about = "Regression with long-memory errors and heteroscedastic variance")]
struct Cli {
    /// Master seed for every random draw.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate fractional Gaussian noise or FARIMA(0,d,0) errors.
    Simulate(SimulateArgs),
    /// Least-squares fit of y on x.
    Fit(FitArgs),
    /// Kernel estimate of the conditional variance on a grid.
    Variance(VarianceArgs),
    /// Local Whittle estimate of the memory parameter.
    Whittle(WhittleArgs),
    /// Goodness-of-fit test of the regression function.
    Goftest(GofArgs),
    /// Monte Carlo tables.
    Table(TableArgs),
    /// Convert a date,value rate file to log returns.
    Ingest(IngestArgs),
    /// QQ data of a series against simulated fGn.
    Qq(QqArgs),
    /// Ingest two rate files and run the full fit, memory and test chain.
    Pipeline(PipelineArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SimKind {
    Fgn,
    Farima,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = SimKind::Fgn)]
    kind: SimKind,
    #[arg(short = 'n', long, default_value_t = 500)]
    n: usize,
    /// Hurst index (`h` for fGn, `H` for FARIMA).
    #[arg(long, default_value_t = 0.75)]
    hurst: f64,
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Use the truncated moving average with this burn-in instead of the
    /// exact FARIMA sampler.
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    unit_innovation: bool,
}

#[derive(Args)]
struct XyArgs {
    /// CSV with the design in column `value`.
    #[arg(long)]
    x: PathBuf,
    /// CSV with the response in column `value`.
    #[arg(long)]
    y: PathBuf,
    #[arg(long, default_value = "value")]
    column: String,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: XyArgs,
    /// `linear`, `poly:<p>` or `origin:<p>`.
    #[arg(long, default_value = "linear")]
    basis: String,
}

#[derive(Args)]
struct BandwidthArgs {
    /// Bandwidth constant `C` in `b = C n^{-δ}`.
    #[arg(long, default_value_t = 3.0)]
    c: f64,
    #[arg(long, default_value_t = 0.2)]
    delta: f64,
    /// Fixed bandwidth, overriding `C` and `δ`.
    #[arg(long)]
    bandwidth: Option<f64>,
    #[arg(long, default_value = "cosine")]
    kernel: Kernel,
}

impl BandwidthArgs {
    fn resolve(&self, n: usize) -> Result<Bandwidth> {
        Ok(match self.bandwidth {
            Some(b) => Bandwidth::fixed(b)?,
            None => Bandwidth::new(self.c, self.delta, n)?,
        })
    }
}

#[derive(Args)]
struct VarianceArgs {
    #[command(flatten)]
    data: XyArgs,
    #[command(flatten)]
    bw: BandwidthArgs,
}

#[derive(Args)]
struct MArgs {
    /// Number of frequencies: an integer, `n/<k>`, `pow:<c>:<a>` or `max`.
    #[arg(long, default_value = "n/8")]
    m: String,
}

fn parse_m(s: &str) -> Result<MRule> {
    if s == "max" {
        return Ok(MRule::MaxFourier);
    }
    if let Some(k) = s.strip_prefix("n/") {
        return Ok(MRule::Fraction { k: k.parse().context("bad m fraction")? });
    }
    if let Some(rest) = s.strip_prefix("pow:") {
        let (c, a) = rest.split_once(':').context("expected pow:<c>:<a>")?;
        return Ok(MRule::Power { c: c.parse()?, a: a.parse()? });
    }
    Ok(MRule::Fixed { m: s.parse().with_context(|| format!("bad m `{s}`"))? })
}

#[derive(Args)]
struct WhittleArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "value")]
    column: String,
    #[command(flatten)]
    m: MArgs,
}

#[derive(Args)]
struct GofArgs {
    #[command(flatten)]
    data: XyArgs,
    #[command(flatten)]
    bw: BandwidthArgs,
    #[command(flatten)]
    m: MArgs,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

#[derive(Args)]
struct TableArgs {
    /// 1 (slope RMSE), 2 (memory RMSE) or 4 (median ASE).
    #[arg(long, default_value_t = 1)]
    table: u8,
    #[arg(short = 'n', long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 400)]
    reps: usize,
    /// Error memory grid (comma separated).
    #[arg(long = "H", value_delimiter = ',')]
    big_h: Option<Vec<f64>>,
    /// Design memory grid (comma separated).
    #[arg(long = "h", value_delimiter = ',')]
    h: Option<Vec<f64>>,
    /// Run replications on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "value")]
    column: String,
    #[arg(long)]
    month_end: bool,
}

#[derive(Args)]
struct QqArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "value")]
    column: String,
    /// Memory of the reference fGn (estimated when omitted).
    #[arg(long)]
    hurst: Option<f64>,
}

#[derive(Args)]
struct PipelineArgs {
    /// Rate file for the regressor.
    #[arg(long)]
    x: PathBuf,
    /// Rate file for the response.
    #[arg(long)]
    y: PathBuf,
    #[arg(long, default_value = "value")]
    column: String,
    #[arg(long)]
    month_end: bool,
    /// Estimate the memory from `Y − β̂₁X` instead of the full residuals.
    #[arg(long)]
    slope_only: bool,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

struct Output<'a> {
    dir: &'a Path,
    format: Format,
}

impl Output<'_> {
    fn write(&self, name: &str, contents: &str) -> Result<()> {
        let path = write_atomic(self.dir, name, contents.as_bytes())
            .with_context(|| format!("writing {}", self.dir.join(name).display()))?;
        println!("{}", path.display());
        Ok(())
    }

    /// Writes a record either as JSON or as `key,value` rows.
    fn record<T: Serialize>(&self, stem: &str, value: &T) -> Result<()> {
        match self.format {
            Format::Json => self.write(&format!("{stem}.json"), &(serde_json::to_string_pretty(value)? + "\n")),
            Format::Csv => {
                let mut s = String::from("key,value\n");
                flatten("", &serde_json::to_value(value)?, &mut s);
                self.write(&format!("{stem}.csv"), &s)
            }
        }
    }
}

fn flatten(prefix: &str, v: &serde_json::Value, out: &mut String) {
    use serde_json::Value;
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => map.iter().for_each(|(k, v)| flatten(&key(k), v, out)),
        Value::Array(items) => items.iter().enumerate().for_each(|(i, v)| flatten(&key(&i.to_string()), v, out)),
        Value::Null => out.push_str(&format!("{prefix},\n")),
        Value::String(s) => out.push_str(&format!("{prefix},{s}\n")),
        other => out.push_str(&format!("{prefix},{other}\n")),
    }
}

fn parse_basis(s: &str) -> Result<Basis> {
    if s == "linear" {
        return Ok(Basis::SimpleLinear);
    }
    if let Some(p) = s.strip_prefix("poly:") {
        return Ok(Basis::Polynomial(p.parse()?));
    }
    if let Some(p) = s.strip_prefix("origin:") {
        return Ok(Basis::ThroughOrigin(p.parse()?));
    }
    bail!("unknown basis `{s}` (expected linear, poly:<p> or origin:<p>)")
}

fn read_xy(a: &XyArgs) -> Result<(Vec<f64>, Vec<f64>)> {
    Ok((read_series(&a.x, &a.column)?, read_series(&a.y, &a.column)?))
}

fn write_series(out: &Output, s: &LmSeries) -> Result<()> {
    match out.format {
        Format::Csv => {
            out.write("series.csv", &s.to_csv())?;
            out.write("series.meta", &s.sidecar())
        }
        Format::Json => out.write("series.json", &(serde_json::to_string_pretty(s)? + "\n")),
    }
}

fn run(cli: Cli) -> Result<()> {
    let out = Output { dir: &cli.out, format: cli.format };
    let seed = cli.seed;
    match cli.command {
        Command::Simulate(a) => {
            let s = match a.kind {
                SimKind::Fgn => gen_fgn(a.n, a.hurst, a.mu, a.gamma, seed)?,
                SimKind::Farima => {
                    let method = match a.burn_in {
                        Some(b) => FarimaMethod::TruncatedMa { burn_in: b },
                        None => FarimaMethod::Exact,
                    };
                    let scale = if a.unit_innovation { InnovationScale::UnitInnovation } else { InnovationScale::UnitVariance };
                    gen_farima(a.n, a.hurst, seed, method, scale)?
                }
            };
            write_series(&out, &s)
        }
        Command::Fit(a) => {
            let (x, y) = read_xy(&a.data)?;
            let fit = fit_lse(&x, &y, &parse_basis(&a.basis)?)?;
            out.record("fit", &fit.summary())
        }
        Command::Variance(a) => {
            let (x, y) = read_xy(&a.data)?;
            let fit = fit_lse(&x, &y, &Basis::SimpleLinear)?;
            let bw = a.bw.resolve(x.len())?;
            let est = VarianceEstimator::new(&x, &fit.residuals, bw, a.bw.kernel)?;
            let lo = est.xbar() - 6.0 * est.s();
            let hi = est.xbar() + 6.0 * est.s();
            let grid: Vec<f64> = default_grid().into_iter().filter(|g| *g >= lo && *g <= hi).collect();
            let values = est.estimate_grid(&grid, Execution::Parallel)?;
            match out.format {
                Format::Json => out.write("variance.json", &(serde_json::to_string_pretty(&values)? + "\n")),
                Format::Csv => {
                    let mut s = String::from("x,sigma2_hat,b,phi_n\n");
                    for v in &values {
                        s.push_str(&format!("{},{},{},{}\n", v.x, v.value, v.b, v.phi_n_x));
                    }
                    out.write("variance.csv", &s)
                }
            }
        }
        Command::Whittle(a) => {
            let s = read_series(&a.input, &a.column)?;
            let m = parse_m(&a.m.m)?.resolve(s.len());
            out.record("whittle", &local_whittle(&s, m, DEFAULT_BRACKET)?)
        }
        Command::Goftest(a) => {
            let (x, y) = read_xy(&a.data)?;
            let basis = Basis::SimpleLinear;
            let fit = fit_lse(&x, &y, &basis)?;
            check_residuals(&y, &fit.residuals)?;
            let m = parse_m(&a.m.m)?.resolve(x.len());
            let wh = local_whittle(&fit.residuals, m, DEFAULT_BRACKET)?;
            let bw = a.bw.resolve(x.len())?;
            let loo = loo_variance(&x, &fit.residuals, bw, a.bw.kernel, Standardization::Studentized, Execution::Parallel)?;
            let g = dn_test(&x, &fit, &wh, &loo, &basis)?;
            #[derive(Serialize)]
            struct Report {
                #[serde(flatten)]
                gof: lmreg::gof::GofResult,
                alpha: f64,
                reject: bool,
            }
            out.record("gof", &Report { gof: g, alpha: a.alpha, reject: g.reject(a.alpha) })
        }
        Command::Table(a) => {
            let mut cfg = ExperimentConfig { n: a.n, reps: a.reps, master_seed: seed, ..Default::default() };
            if a.sequential {
                cfg.execution = Execution::Sequential;
            }
            if let Some(g) = a.big_h {
                cfg.big_h_grid = g;
            }
            if let Some(g) = a.h {
                cfg.h_grid = g;
            }
            let (id, runner): (TableId, fn(&ExperimentConfig) -> lmreg::Result<harness::TableResult>) = match a.table {
                1 => (TableId::SlopeRmse, harness::run_table1),
                2 => (TableId::HurstRmse, harness::run_table2),
                4 => (TableId::Ase, |cfg| {
                    let mut all = None::<harness::TableResult>;
                    for &bh in &cfg.big_h_grid {
                        let t = harness::run_ase_table(cfg, bh)?;
                        match &mut all {
                            Some(acc) => acc.cells.extend(t.cells),
                            None => all = Some(t),
                        }
                    }
                    all.ok_or_else(|| lmreg::Error::InvalidArgument("empty H grid".into()))
                }),
                other => bail!("unknown table {other} (expected 1, 2 or 4)"),
            };
            let (t, prov) = harness::tables::with_provenance(&cfg, || runner(&cfg))?;
            let stem = format!("table{}", id.code());
            match out.format {
                Format::Csv => out.write(&format!("{stem}.csv"), &t.to_csv())?,
                Format::Json => out.write(&format!("{stem}.json"), &(serde_json::to_string_pretty(&t)? + "\n"))?,
            }
            out.write(&format!("{stem}.provenance.json"), &(serde_json::to_string_pretty(&prov)? + "\n"))
        }
        Command::Ingest(a) => {
            let opts = IngestOptions { column: a.column, month_end: a.month_end, ..Default::default() };
            let fx = read_fx_file(&a.input, &opts)?;
            match out.format {
                Format::Csv => {
                    let s = LmSeries::ingested(fx.values.clone())?;
                    out.write("series.csv", &s.to_csv())?;
                    let mut meta = s.sidecar();
                    meta.push_str(&format!("source={}\n", a.input.display()));
                    if let (Some(f), Some(l)) = (fx.dates.first(), fx.dates.last()) {
                        meta.push_str(&format!("first_date={f}\nlast_date={l}\n"));
                    }
                    out.write("series.meta", &meta)
                }
                Format::Json => out.write("series.json", &(serde_json::to_string_pretty(&fx)? + "\n")),
            }
        }
        Command::Qq(a) => {
            let s = read_series(&a.input, &a.column)?;
            let h = match a.hurst {
                Some(h) => h,
                None => local_whittle(&s, MRule::default().resolve(s.len()), DEFAULT_BRACKET)?.h_hat,
            };
            let q = qq_data(&s, h, seed)?;
            if q.degenerate {
                eprintln!("warning: the series is constant; sample quantiles are all 0");
            }
            match out.format {
                Format::Csv => out.write("qq.csv", &q.to_csv()),
                Format::Json => out.write("qq.json", &(serde_json::to_string_pretty(&q)? + "\n")),
            }
        }
        Command::Pipeline(a) => {
            let ing = IngestOptions { column: a.column, month_end: a.month_end, ..Default::default() };
            let x = read_fx_file(&a.x, &ing)?;
            let y = read_fx_file(&a.y, &ing)?;
            let opts = PipelineOptions { whittle_with_intercept: !a.slope_only, alpha: a.alpha, seed, ..Default::default() };
            let mut report = run_pipeline(&x, &y, &opts)?;
            report.version = VERSION.to_string();
            out.record("pipeline", &report)
        }
    }
}

fn is_degenerate(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<AppError>().is_some_and(AppError::is_degenerate)
            || matches!(c.downcast_ref::<lmreg::Error>(), Some(lmreg::Error::Degenerate(_)))
    })
}

fn main() -> ExitCode {
    // Usage errors exit 1; code 2 is reserved for degenerate inputs.
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    let threads = cli.threads;
    match lmreg::par::with_threads(threads, || run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if is_degenerate(&e) {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
