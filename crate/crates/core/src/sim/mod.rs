//! Long-memory design and error processes.

pub mod constants;
pub mod farima;
pub mod gaussian;
pub mod series;

use rand::Rng;

pub use constants::{acvf_fgn, d_const, theta};
pub use farima::{ma_coeffs, FarimaGenerator, FarimaMethod, Innovation, InnovationScale, MaCoefficients, StandardGaussian};
pub use gaussian::{GaussianSampler, SamplerMethod};
pub use series::{LmSeries, MemoryParams, SeriesKind};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// Reusable fGn sampler: mean `mu`, standard deviation `gamma`.
#[derive(Debug)]
pub struct FgnGenerator {
    h: f64,
    mu: f64,
    gamma: f64,
    sampler: GaussianSampler,
}

impl FgnGenerator {
    pub fn new(n: usize, h: f64, mu: f64, gamma: f64) -> Result<Self> {
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::Domain { what: "h", value: h, domain: "(0, 1)" });
        }
        if !(gamma > 0.0 && gamma.is_finite()) || !mu.is_finite() {
            return Err(Error::InvalidArgument(format!("need finite mu and gamma > 0, got ({mu}, {gamma})")));
        }
        let sampler = GaussianSampler::from_acvf(n, |k| acvf_fgn(k, h))?;
        Ok(FgnGenerator { h, mu, gamma, sampler })
    }

    pub fn len(&self) -> usize {
        self.sampler.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sampler.is_empty()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn method(&self) -> SamplerMethod {
        self.sampler.method()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut x = self.sampler.sample(rng);
        for v in &mut x {
            *v = self.mu + self.gamma * *v;
        }
        x
    }

    /// Draws from the design stream of `seed`.
    pub fn generate(&self, seed: u64) -> LmSeries {
        let values = self.sample(&mut stream_rng(seed, Stream::Design));
        LmSeries { values, kind: SeriesKind::Fgn, memory: Some(self.h), seed: Some(seed) }
    }
}

/// Fractional Gaussian noise with mean `mu` and variance `gamma²`.
pub fn gen_fgn(n: usize, h: f64, mu: f64, gamma: f64, seed: u64) -> Result<LmSeries> {
    Ok(FgnGenerator::new(n, h, mu, gamma)?.generate(seed))
}

/// FARIMA(0, H−1/2, 0) errors by the truncated moving average with
/// `J = burn_in + n` and unit-variance normalization.
pub fn gen_farima_ma(n: usize, big_h: f64, seed: u64, burn_in: usize) -> Result<LmSeries> {
    gen_farima(n, big_h, seed, FarimaMethod::TruncatedMa { burn_in }, InnovationScale::UnitVariance)
}

/// FARIMA(0, H−1/2, 0) errors from the error stream of `seed`.
pub fn gen_farima(n: usize, big_h: f64, seed: u64, method: FarimaMethod, scale: InnovationScale) -> Result<LmSeries> {
    let g = FarimaGenerator::new(n, big_h, method, scale)?;
    let values = g.sample(&mut stream_rng(seed, Stream::Error));
    Ok(LmSeries { values, kind: SeriesKind::FarimaMa, memory: Some(big_h), seed: Some(seed) })
}
