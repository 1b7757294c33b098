//! Exact sampling of stationary Gaussian sequences from their
//! autocovariance: circulant embedding, with Durbin–Levinson as fallback.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Eigenvalues above `-NEG_EIG_TOL` are clipped to zero; anything lower
/// means the embedding is not nonnegative definite.
pub const NEG_EIG_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerMethod {
    CirculantEmbedding,
    DurbinLevinson,
}

/// Davies–Harte sampler for a fixed length and covariance.
pub struct CirculantSampler {
    n: usize,
    scale: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CirculantSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CirculantSampler")
            .field("n", &self.n)
            .field("m", &self.scale.len())
            .finish()
    }
}

impl CirculantSampler {
    /// Embeds `acvf(0..=m/2)` into a circulant of size `m`, the smallest
    /// power of two with `m ≥ 2(n−1)`. Returns the most negative eigenvalue
    /// as the error payload when the embedding fails.
    pub fn new(n: usize, acvf: impl Fn(usize) -> f64) -> std::result::Result<Self, f64> {
        let m = (2 * (n.max(2) - 1)).next_power_of_two();
        let mut c: Vec<Complex64> = (0..m)
            .map(|j| Complex64::new(acvf(j.min(m - j)), 0.0))
            .collect();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(m);
        fft.process(&mut c);
        let min = c.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        if min < -NEG_EIG_TOL {
            return Err(min);
        }
        let mf = m as f64;
        let scale = c.iter().map(|z| (z.re.max(0.0) / mf).sqrt()).collect();
        Ok(CirculantSampler { n, scale, fft })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut buf: Vec<Complex64> = self
            .scale
            .iter()
            .map(|&s| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(s * re, s * im)
            })
            .collect();
        self.fft.process(&mut buf);
        buf.truncate(self.n);
        buf.into_iter().map(|z| z.re).collect()
    }
}

/// Sequential innovations sampler, `O(n²)` per draw.
#[derive(Debug, Clone)]
pub struct DurbinLevinsonSampler {
    acvf: Vec<f64>,
}

impl DurbinLevinsonSampler {
    pub fn new(n: usize, acvf: impl Fn(usize) -> f64) -> Result<Self> {
        let acvf: Vec<f64> = (0..n).map(acvf).collect();
        // Validate once so sampling cannot fail.
        let s = DurbinLevinsonSampler { acvf };
        s.run(|_, _| 0.0)?;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.acvf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.acvf.is_empty()
    }

    /// Runs the recursion; `draw(t, sd)` supplies the innovation at `t`.
    fn run(&self, mut draw: impl FnMut(usize, f64) -> f64) -> Result<Vec<f64>> {
        let n = self.acvf.len();
        let g = &self.acvf;
        let mut out = Vec::with_capacity(n);
        if n == 0 {
            return Ok(out);
        }
        let mut v = g[0];
        if v <= 0.0 {
            return Err(Error::NotPositiveDefinite { lag: 0 });
        }
        let mut phi: Vec<f64> = Vec::with_capacity(n);
        let mut prev: Vec<f64> = Vec::with_capacity(n);
        out.push(draw(0, v.sqrt()));
        for t in 1..n {
            // phi_{t,t}
            let mut num = g[t];
            for j in 0..t - 1 {
                num -= phi[j] * g[t - 1 - j];
            }
            let k = num / v;
            prev.clear();
            prev.extend_from_slice(&phi);
            phi.clear();
            for j in 0..t - 1 {
                phi.push(prev[j] - k * prev[t - 2 - j]);
            }
            phi.push(k);
            v *= 1.0 - k * k;
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::NotPositiveDefinite { lag: t });
            }
            let mean: f64 = phi.iter().zip(out.iter().rev()).map(|(p, x)| p * x).sum();
            out.push(mean + draw(t, v.sqrt()));
        }
        Ok(out)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.run(|_, sd| {
            let z: f64 = rng.sample(StandardNormal);
            sd * z
        })
        .expect("validated at construction")
    }
}

/// Stationary Gaussian sampler with automatic fallback.
#[derive(Debug)]
pub enum GaussianSampler {
    Circulant(CirculantSampler),
    DurbinLevinson(DurbinLevinsonSampler),
}

impl GaussianSampler {
    /// Circulant embedding when it is nonnegative definite, Durbin–Levinson
    /// otherwise. Fails only if both fail.
    pub fn from_acvf(n: usize, acvf: impl Fn(usize) -> f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooShort { needed: 2, got: n });
        }
        match CirculantSampler::new(n, &acvf) {
            Ok(c) => Ok(GaussianSampler::Circulant(c)),
            Err(_) => DurbinLevinsonSampler::new(n, &acvf).map(GaussianSampler::DurbinLevinson),
        }
    }

    pub fn method(&self) -> SamplerMethod {
        match self {
            GaussianSampler::Circulant(_) => SamplerMethod::CirculantEmbedding,
            GaussianSampler::DurbinLevinson(_) => SamplerMethod::DurbinLevinson,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            GaussianSampler::Circulant(c) => c.len(),
            GaussianSampler::DurbinLevinson(d) => d.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            GaussianSampler::Circulant(c) => c.sample(rng),
            GaussianSampler::DurbinLevinson(d) => d.sample(rng),
        }
    }
}
