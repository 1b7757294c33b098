//! Data ingestion, QQ-plot data and the end-to-end exchange-rate pipeline
//! behind the `lmreg` command.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use lmreg::gof::{dn_test, loo_variance, GofResult, Standardization};
use lmreg::kernel::{Bandwidth, Kernel, VarianceEstimator};
use lmreg::regress::{fit_lse, slope_only_residuals, Basis, FitSummary};
use lmreg::sim::FgnGenerator;
use lmreg::whittle::{local_whittle, MRule, WhittleResult, DEFAULT_BRACKET};
use lmreg::{Error, Execution};

/// Pipeline stage, used to label failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Ingest,
    Join,
    Fit,
    Variance,
    Whittle,
    Gof,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Ingest => "ingest",
            Stage::Join => "join",
            Stage::Fit => "fit",
            Stage::Variance => "variance",
            Stage::Whittle => "whittle",
            Stage::Gof => "goftest",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Error,
    },
    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },
}

impl AppError {
    pub fn is_degenerate(&self) -> bool {
        matches!(self, AppError::Stage { source: Error::Degenerate(_), .. })
    }
}

fn at(stage: Stage) -> impl Fn(Error) -> AppError {
    move |source| AppError::Stage { stage, source }
}

pub type AppResult<T> = std::result::Result<T, AppError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestOptions {
    /// Column holding the rates.
    pub column: String,
    /// Cell contents treated as missing, in addition to empty cells.
    pub missing_markers: Vec<String>,
    /// Keep only the last available observation of each calendar month.
    pub month_end: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions { column: "value".into(), missing_markers: vec!["ND".into()], month_end: false }
    }
}

/// Differenced log rates; `dates[i]` is the date closing difference `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FxSeries {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
    pub source: Option<PathBuf>,
}

fn parse_err(msg: impl Into<String>) -> AppError {
    AppError::Stage { stage: Stage::Ingest, source: Error::Parse(msg.into()) }
}

/// Parses `date,value` CSV text, drops missing rows, optionally keeps the
/// last observation per month, then returns first differences of the logs.
pub fn ingest_fx(text: &str, opts: &IngestOptions) -> AppResult<FxSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| parse_err(e.to_string()))?.clone();
    let date_col = headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case("date"))
        .ok_or_else(|| parse_err("missing `date` column"))?;
    let val_col = headers
        .iter()
        .position(|h| h == opts.column)
        .ok_or_else(|| parse_err(format!("missing `{}` column", opts.column)))?;

    let mut rows: Vec<(NaiveDate, f64)> = Vec::new();
    let mut prev: Option<NaiveDate> = None;
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| parse_err(format!("line {line}: {e}")))?;
        let ds = rec.get(date_col).unwrap_or("");
        let date = NaiveDate::parse_from_str(ds, "%Y-%m-%d")
            .map_err(|_| parse_err(format!("line {line}: `{ds}` is not an ISO-8601 date")))?;
        if prev.is_some_and(|p| date <= p) {
            return Err(parse_err(format!("line {line}: dates must be strictly increasing")));
        }
        prev = Some(date);
        let cell = rec.get(val_col).unwrap_or("");
        if cell.is_empty() || opts.missing_markers.iter().any(|m| m == cell) {
            continue;
        }
        let v: f64 = cell
            .parse()
            .map_err(|_| parse_err(format!("line {line}: `{cell}` is not a number")))?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(parse_err(format!("line {line}: rate {v} must be positive")));
        }
        rows.push((date, v));
    }
    if opts.month_end {
        let mut kept: Vec<(NaiveDate, f64)> = Vec::new();
        for r in rows {
            match kept.last_mut() {
                Some(last) if (last.0.year(), last.0.month()) == (r.0.year(), r.0.month()) => *last = r,
                _ => kept.push(r),
            }
        }
        rows = kept;
    }
    if rows.len() < 3 {
        return Err(AppError::Stage { stage: Stage::Ingest, source: Error::TooShort { needed: 3, got: rows.len() } });
    }
    let dates = rows[1..].iter().map(|r| r.0).collect();
    let values = rows.windows(2).map(|w| w[1].1.ln() - w[0].1.ln()).collect();
    Ok(FxSeries { dates, values, source: None })
}

pub fn read_fx_file(path: &Path, opts: &IngestOptions) -> AppResult<FxSeries> {
    let text = fs::read_to_string(path).map_err(|e| AppError::File { path: path.into(), message: e.to_string() })?;
    let mut s = ingest_fx(&text, opts).map_err(|e| match e {
        AppError::Stage { stage, source } => AppError::File { path: path.into(), message: format!("{stage} stage failed: {source}") },
        other => other,
    })?;
    s.source = Some(path.into());
    Ok(s)
}

/// Reads a numeric column (`value` by default) from a CSV file; accepts the
/// single-column series format as well as `date,value` files.
pub fn read_series(path: &Path, column: &str) -> AppResult<Vec<f64>> {
    let file_err = |message: String| AppError::File { path: path.into(), message };
    let text = fs::read_to_string(path).map_err(|e| file_err(e.to_string()))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| file_err(e.to_string()))?.clone();
    let col = headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| file_err(format!("missing `{column}` column")))?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| file_err(e.to_string()))?;
        let cell = rec.get(col).unwrap_or("");
        out.push(cell.parse().map_err(|_| file_err(format!("line {}: `{cell}` is not a number", i + 2)))?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QqData {
    /// `(sample quantile, simulated fGn quantile)`, both standardized.
    pub pairs: Vec<(f64, f64)>,
    /// The input had zero spread; its quantiles are all 0.
    pub degenerate: bool,
}

impl QqData {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("sample,fgn\n");
        for (a, b) in &self.pairs {
            s.push_str(&format!("{a},{b}\n"));
        }
        s
    }
}

fn standardize(x: &[f64]) -> (Vec<f64>, bool) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
    if sd > 0.0 {
        (x.iter().map(|v| (v - m) / sd).collect(), false)
    } else {
        (vec![0.0; x.len()], true)
    }
}

/// Sorted standardized series against a sorted standardized fGn path of
/// the same length with memory `h_hat`.
pub fn qq_data(series: &[f64], h_hat: f64, seed: u64) -> lmreg::Result<QqData> {
    let gen = FgnGenerator::new(series.len(), h_hat, 0.0, 1.0)?;
    let (mut a, degenerate) = standardize(series);
    let (mut b, _) = standardize(&gen.generate(seed).values);
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    Ok(QqData { pairs: a.into_iter().zip(b).collect(), degenerate })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    /// Bandwidth `C n^{−δ}` on the standardized design scale.
    pub bandwidth_c: f64,
    pub bandwidth_delta: f64,
    pub kernel: Kernel,
    pub m_rule: MRule,
    /// Use `Y − β̂₀ − β̂₁X` (true) or `Y − β̂₁X` for the memory estimate.
    pub whittle_with_intercept: bool,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            bandwidth_c: 3.0,
            bandwidth_delta: 0.2,
            kernel: Kernel::Cosine,
            m_rule: MRule::Fraction { k: 8 },
            whittle_with_intercept: true,
            alpha: 0.05,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesStats {
    pub n: usize,
    pub mean: f64,
    /// Standard deviation with the `n − 1` divisor.
    pub sd: f64,
}

impl SeriesStats {
    pub fn of(x: &[f64]) -> Self {
        let n = x.len();
        let mean = x.iter().sum::<f64>() / n as f64;
        let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
        SeriesStats { n, mean, sd }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub n: usize,
    pub x_stats: SeriesStats,
    pub y_stats: SeriesStats,
    pub whittle_x: WhittleResult,
    pub whittle_y: WhittleResult,
    pub fit: FitSummary,
    /// Memory estimate from the regression residuals.
    pub whittle_residuals: WhittleResult,
    /// Memory estimate from residuals divided by `σ̂(X_t)`.
    pub whittle_standardized: WhittleResult,
    pub bandwidth: f64,
    pub gof: GofResult,
    pub alpha: f64,
    pub reject: bool,
    pub x_source: Option<PathBuf>,
    pub y_source: Option<PathBuf>,
    pub seed: u64,
    pub version: String,
}

/// Rejects fits whose residuals vanish relative to the response scale; the
/// memory estimate and the test are meaningless there.
pub fn check_residuals(y: &[f64], residuals: &[f64]) -> lmreg::Result<()> {
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if residuals.iter().all(|e| e.abs() <= 1e-10 * scale) {
        return Err(Error::Degenerate("the fit is exact; residuals vanish".into()));
    }
    Ok(())
}

/// Pairs the two series on common dates.
pub fn inner_join(x: &FxSeries, y: &FxSeries) -> AppResult<(Vec<f64>, Vec<f64>)> {
    let (mut i, mut j) = (0, 0);
    let (mut a, mut b) = (Vec::new(), Vec::new());
    while i < x.dates.len() && j < y.dates.len() {
        match x.dates[i].cmp(&y.dates[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                a.push(x.values[i]);
                b.push(y.values[j]);
                i += 1;
                j += 1;
            }
        }
    }
    if a.len() < 8 {
        return Err(AppError::Stage { stage: Stage::Join, source: Error::TooShort { needed: 8, got: a.len() } });
    }
    Ok((a, b))
}

/// Ingested series → simple linear fit → kernel `σ̂` → local Whittle on the
/// residuals and on `ẽ/σ̂(X)` → leave-one-out variances → `D_n`.
pub fn run_pipeline(x: &FxSeries, y: &FxSeries, opts: &PipelineOptions) -> AppResult<PipelineReport> {
    let (xs, ys) = inner_join(x, y)?;
    let n = xs.len();
    let rule_m = opts.m_rule.resolve(n);
    let whittle = |s: &[f64]| local_whittle(s, rule_m, DEFAULT_BRACKET);
    let whittle_x = whittle(&xs).map_err(at(Stage::Whittle))?;
    let whittle_y = whittle(&ys).map_err(at(Stage::Whittle))?;

    let basis = Basis::SimpleLinear;
    let fit = fit_lse(&xs, &ys, &basis).map_err(at(Stage::Fit))?;
    check_residuals(&ys, &fit.residuals).map_err(at(Stage::Gof))?;

    let std_bw = Bandwidth::new(opts.bandwidth_c, opts.bandwidth_delta, n).map_err(at(Stage::Variance))?;
    let raw_bw = Bandwidth::fixed(std_bw.b * fit.s()).map_err(at(Stage::Variance))?;
    let est = VarianceEstimator::new(&xs, &fit.residuals, raw_bw, opts.kernel).map_err(at(Stage::Variance))?;
    let mut standardized = Vec::with_capacity(n);
    for (xi, ei) in xs.iter().zip(&fit.residuals) {
        let v = est.estimate(*xi).map_err(at(Stage::Variance))?.value;
        if !(v > 0.0) {
            return Err(AppError::Stage {
                stage: Stage::Variance,
                source: Error::Degenerate(format!("σ̂²({xi}) is zero")),
            });
        }
        standardized.push(ei / v.sqrt());
    }

    let whittle_input = if opts.whittle_with_intercept {
        fit.residuals.clone()
    } else {
        slope_only_residuals(&xs, &ys, fit.beta_hat[1]).map_err(at(Stage::Whittle))?
    };
    let whittle_residuals = whittle(&whittle_input).map_err(at(Stage::Whittle))?;
    let whittle_standardized = whittle(&standardized).map_err(at(Stage::Whittle))?;

    let loo = loo_variance(&xs, &fit.residuals, std_bw, opts.kernel, Standardization::Studentized, Execution::Sequential)
        .map_err(at(Stage::Gof))?;
    let gof = dn_test(&xs, &fit, &whittle_residuals, &loo, &basis).map_err(at(Stage::Gof))?;

    Ok(PipelineReport {
        n,
        x_stats: SeriesStats::of(&xs),
        y_stats: SeriesStats::of(&ys),
        whittle_x,
        whittle_y,
        fit: fit.summary(),
        whittle_residuals,
        whittle_standardized,
        bandwidth: std_bw.b,
        reject: gof.reject(opts.alpha),
        gof,
        alpha: opts.alpha,
        x_source: x.source.clone(),
        y_source: y.source.clone(),
        seed: opts.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
    })
}

/// Writes `contents` to `dir/name` through a temporary file in the same
/// directory and a rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> std::io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, &target).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(target)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_differences() {
        let e = std::f64::consts::E;
        let text = format!("date,value\n2000-01-31,1\n2000-02-29,{e}\n2000-03-31,{}\n", e * e);
        let s = ingest_fx(&text, &IngestOptions::default()).unwrap();
        assert_eq!(s.values.len(), 2);
        assert!((s.values[0] - 1.0).abs() < 1e-15 && (s.values[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn interior_missing_row_is_dropped() {
        let text = "date,value\n2000-01-03,1.0\n2000-01-04,ND\n2000-01-05,2.0\n2000-01-06,4.0\n";
        let s = ingest_fx(text, &IngestOptions::default()).unwrap();
        let ln2 = 2f64.ln();
        assert_eq!(s.values.len(), 2);
        assert!((s.values[0] - ln2).abs() < 1e-15);
        assert!((s.values[1] - ln2).abs() < 1e-15);
        assert_eq!(s.dates[0], NaiveDate::from_ymd_opt(2000, 1, 5).unwrap());
    }

    #[test]
    fn month_end_keeps_last_observation() {
        let text = "date,value\n2000-01-03,1.0\n2000-01-31,2.0\n2000-02-01,3.0\n2000-02-28,4.0\n2000-03-15,8.0\n2000-03-31,ND\n";
        let opts = IngestOptions { month_end: true, ..Default::default() };
        let s = ingest_fx(text, &opts).unwrap();
        assert_eq!(s.values.len(), 2);
        assert!((s.values[0] - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn ingest_errors() {
        let o = IngestOptions::default();
        assert!(ingest_fx("date,value\n2000-01-01,1\n2000-01-02,2\n", &o).is_err());
        assert!(ingest_fx("date,value\n2000-01-02,1\n2000-01-01,2\n2000-01-03,2\n", &o).is_err());
        assert!(ingest_fx("date,value\n2000-01-01,1\n2000-01-02,-2\n2000-01-03,2\n", &o).is_err());
        assert!(ingest_fx("date,value\n2000-01-01,1\n2000-01-02,abc\n2000-01-03,2\n", &o).is_err());
        assert!(ingest_fx("day,value\n", &o).is_err());
    }

    #[test]
    fn constant_series_is_flagged() {
        let q = qq_data(&[1.0; 50], 0.7, 3).unwrap();
        assert!(q.degenerate);
        assert_eq!(q.pairs.len(), 50);
    }
}
