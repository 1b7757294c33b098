//! Series container and its CSV/sidecar serialization.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_open_unit_half, Error, Result};

/// Memory parameters of the design (`h`) and error (`H`) processes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryParams {
    pub h: f64,
    #[serde(rename = "H")]
    pub big_h: f64,
}

impl MemoryParams {
    pub fn new(big_h: f64, h: f64) -> Result<Self> {
        check_open_unit_half("H", big_h)?;
        check_open_unit_half("h", h)?;
        Ok(MemoryParams { h, big_h })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    Fgn,
    FarimaMa,
    Ingested,
}

impl SeriesKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SeriesKind::Fgn => "fgn",
            SeriesKind::FarimaMa => "farima_ma",
            SeriesKind::Ingested => "ingested",
        }
    }
}

impl FromStr for SeriesKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fgn" => Ok(SeriesKind::Fgn),
            "farima_ma" => Ok(SeriesKind::FarimaMa),
            "ingested" => Ok(SeriesKind::Ingested),
            other => Err(Error::Parse(format!("unknown series kind `{other}`"))),
        }
    }
}

/// A real-valued series with its provenance. For `Fgn` the memory
/// parameter is the design `h`, for `FarimaMa` it is the error `H`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmSeries {
    pub values: Vec<f64>,
    pub kind: SeriesKind,
    pub memory: Option<f64>,
    pub seed: Option<u64>,
}

impl LmSeries {
    pub fn new(values: Vec<f64>, kind: SeriesKind, memory: Option<f64>, seed: Option<u64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::TooShort { needed: 2, got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite value at index {i}")));
        }
        Ok(LmSeries { values, kind, memory, seed })
    }

    pub fn ingested(values: Vec<f64>) -> Result<Self> {
        Self::new(values, SeriesKind::Ingested, None, None)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Single-column CSV with header `value`. `f64` display is shortest
    /// round-trip, so reading back is bit-exact.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.values.len() * 20 + 6);
        s.push_str("value\n");
        for v in &self.values {
            let _ = writeln!(s, "{v}");
        }
        s
    }

    pub fn sidecar(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "kind={}", self.kind.as_str());
        if let Some(m) = self.memory {
            let key = if self.kind == SeriesKind::FarimaMa { "H" } else { "h" };
            let _ = writeln!(s, "{key}={m}");
        }
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "seed={seed}");
        }
        let _ = writeln!(s, "n={}", self.values.len());
        s
    }

    /// Parses `to_csv` output, optionally with the matching sidecar.
    pub fn from_csv(csv: &str, sidecar: Option<&str>) -> Result<Self> {
        let values = parse_value_csv(csv)?;
        let mut kind = SeriesKind::Ingested;
        let mut memory = None;
        let mut seed = None;
        if let Some(meta) = sidecar {
            for line in meta.lines().map(str::trim).filter(|l| !l.is_empty()) {
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| Error::Parse(format!("sidecar line `{line}` is not key=value")))?;
                match k.trim() {
                    "kind" => kind = v.trim().parse()?,
                    "h" | "H" => memory = Some(parse_f64(v)?),
                    "seed" => {
                        seed = Some(v.trim().parse().map_err(|_| Error::Parse(format!("bad seed `{v}`")))?)
                    }
                    "n" => {
                        let n: usize = v.trim().parse().map_err(|_| Error::Parse(format!("bad n `{v}`")))?;
                        if n != values.len() {
                            return Err(Error::LengthMismatch { left: n, right: values.len() });
                        }
                    }
                    _ => {}
                }
            }
        }
        Self::new(values, kind, memory, seed)
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("`{}` is not a number", s.trim())))
}

/// Reads a one-column CSV whose header is `value`.
pub fn parse_value_csv(csv: &str) -> Result<Vec<f64>> {
    let mut lines = csv.lines().map(str::trim).filter(|l| !l.is_empty());
    match lines.next() {
        Some("value") => {}
        Some(h) => return Err(Error::Parse(format!("expected header `value`, found `{h}`"))),
        None => return Err(Error::Parse("empty series file".into())),
    }
    lines.map(parse_f64).collect()
}
