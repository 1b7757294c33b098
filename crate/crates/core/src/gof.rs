//! Marked empirical residual process and the lack-of-fit test.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use crate::error::{check_same_len, Error, Result};
use crate::kernel::{Bandwidth, Kernel};
use crate::par::{self, Execution};
use crate::regress::{condition_number, mean_var, Basis, FitResult, MAX_CONDITION};
use crate::whittle::WhittleResult;

/// Right-continuous step function that is 0 left of the first knot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    /// Distinct, increasing.
    pub knots: Vec<f64>,
    /// Value on `[knots[i], knots[i+1])`.
    pub values: Vec<f64>,
}

impl StepFunction {
    /// Cumulative sums of `marks` over `x`, with tied `x` merged into one jump.
    pub fn cumulative(x: &[f64], marks: &[f64]) -> Result<Self> {
        check_same_len(x.len(), marks.len())?;
        let mut pts: Vec<(f64, f64)> = x.iter().copied().zip(marks.iter().copied()).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut knots = Vec::with_capacity(pts.len());
        let mut values = Vec::with_capacity(pts.len());
        let mut acc = 0.0;
        for (i, &(xi, mi)) in pts.iter().enumerate() {
            acc += mi;
            if i + 1 == pts.len() || pts[i + 1].0 != xi {
                knots.push(xi);
                values.push(acc);
            }
        }
        Ok(StepFunction { knots, values })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = self.knots.partition_point(|&t| t <= x);
        if k == 0 {
            0.0
        } else {
            self.values[k - 1]
        }
    }

    /// `sup_x |f(x)|`, attained at a knot (or 0 left of them).
    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn at_infinity(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

/// `Ṽ_n(x) = Σ ẽ_t I(X_t ≤ x)`.
pub fn vtilde(x: &[f64], fit: &FitResult) -> Result<StepFunction> {
    StepFunction::cumulative(x, &fit.residuals)
}

/// Location and scale used to standardize the design before the
/// leave-one-out estimates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Standardization {
    /// Known `(μ, γ)`.
    Known { mu: f64, gamma: f64 },
    /// Sample mean and `1/n` standard deviation.
    #[default]
    Studentized,
}

impl Standardization {
    pub fn resolve(self, x: &[f64]) -> Result<(f64, f64)> {
        let (mu, gamma) = match self {
            Standardization::Known { mu, gamma } => (mu, gamma),
            Standardization::Studentized => {
                let (m, v) = mean_var(x);
                (m, v.sqrt())
            }
        };
        if !(gamma > 0.0 && gamma.is_finite() && mu.is_finite()) {
            return Err(Error::Degenerate(format!("cannot standardize the design with (μ, γ) = ({mu}, {gamma})")));
        }
        Ok((mu, gamma))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LooVariance {
    /// `V_i(X_i)` in input order.
    pub v: Vec<f64>,
    /// `Λ̂₋ᵢ(X_i)` in input order.
    pub lambda: Vec<f64>,
    pub b: f64,
    pub kernel: Kernel,
    pub mu: f64,
    pub gamma: f64,
}

/// `Λ̂₋ᵢ(z_i) = ((n−1)⁻¹ Σ_{t≠i} K_b(z_i − z_t) ẽ_t²)^{1/2}` and
/// `V_i = Λ̂₋ᵢ(z_i) φ(z_i)^{−1/2}` on the standardized design `z`.
pub fn loo_variance(
    x: &[f64],
    residuals: &[f64],
    bandwidth: Bandwidth,
    kernel: Kernel,
    standardization: Standardization,
    exec: Execution,
) -> Result<LooVariance> {
    check_same_len(x.len(), residuals.len())?;
    let n = x.len();
    if n < 2 {
        return Err(Error::TooShort { needed: 2, got: n });
    }
    let b = bandwidth.b;
    if !(b > 0.0) {
        return Err(Error::InvalidArgument("bandwidth must be positive".into()));
    }
    let (mu, gamma) = standardization.resolve(x)?;
    // (z, ẽ², original index), sorted
    let mut pts: Vec<(f64, f64, usize)> = x
        .iter()
        .zip(residuals)
        .enumerate()
        .map(|(i, (&xi, &e))| ((xi - mu) / gamma, e * e, i))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let r = kernel.radius() * b;
    let denom = (n - 1) as f64;
    let per_sorted: Vec<(f64, f64)> = par::map_indexed(exec, n, |p| {
        let z = pts[p].0;
        let lo = pts.partition_point(|q| q.0 < z - r);
        let hi = pts.partition_point(|q| q.0 <= z + r);
        let s: f64 = (lo..hi)
            .filter(|&q| q != p)
            .map(|q| kernel.scaled(z - pts[q].0, b) * pts[q].1)
            .sum();
        let lambda = (s / denom).sqrt();
        let phi = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        (lambda, lambda / phi.sqrt())
    });
    let mut v = vec![0.0; n];
    let mut lambda = vec![0.0; n];
    for (p, &(l, vi)) in per_sorted.iter().enumerate() {
        let i = pts[p].2;
        lambda[i] = l;
        v[i] = vi;
    }
    Ok(LooVariance { v, lambda, b, kernel, mu, gamma })
}

/// `Ĵ_n(x) = n⁻¹ Σ V_t I(X_t ≤ x) − (n⁻¹ Σ r(X_t)V_t)' A_n⁻¹ ᾱ_n(x)` with
/// `ᾱ_n(x) = n⁻¹ Σ r(X_t) I(X_t ≤ x)`.
pub fn jhat(x: &[f64], v: &[f64], basis: &Basis) -> Result<StepFunction> {
    check_same_len(x.len(), v.len())?;
    let n = x.len();
    if n == 0 {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    let q = basis.q();
    let mut pts: Vec<(f64, f64)> = x.iter().copied().zip(v.iter().copied()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let nf = n as f64;

    let mut an = DMatrix::<f64>::zeros(q, q);
    let mut rv = DVector::<f64>::zeros(q);
    let mut row = vec![0.0; q];
    for &(xi, vi) in &pts {
        basis.eval_into(xi, &mut row);
        for a in 0..q {
            rv[a] += row[a] * vi;
            for c in 0..q {
                an[(a, c)] += row[a] * row[c];
            }
        }
    }
    an /= nf;
    rv /= nf;
    let condition = condition_number(&an);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularDesign { condition });
    }
    let w = an.lu().solve(&rv).ok_or(Error::SingularDesign { condition })?;

    let mut knots = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    let mut cum_v = 0.0;
    let mut cum_r = vec![0.0; q];
    for (i, &(xi, vi)) in pts.iter().enumerate() {
        basis.eval_into(xi, &mut row);
        cum_v += vi;
        for a in 0..q {
            cum_r[a] += row[a];
        }
        if i + 1 == n || pts[i + 1].0 != xi {
            let cross: f64 = (0..q).map(|a| w[a] * cum_r[a]).sum();
            knots.push(xi);
            values.push((cum_v - cross) / nf);
        }
    }
    Ok(StepFunction { knots, values })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    #[serde(rename = "Dn")]
    pub dn: f64,
    pub p_value: f64,
    #[serde(rename = "sup_V")]
    pub sup_v: f64,
    #[serde(rename = "sup_J")]
    pub sup_j: f64,
    #[serde(rename = "H_hat")]
    pub h_hat: f64,
    pub psi1_hat: f64,
    pub n: usize,
}

impl GofResult {
    /// Reject at level `alpha` iff `D_n ≥ z_{α/2}`.
    pub fn reject(&self, alpha: f64) -> bool {
        self.dn >= normal_upper_quantile(alpha / 2.0)
    }
}

/// `z_a` with `P(N(0,1) > z_a) = a`.
pub fn normal_upper_quantile(a: f64) -> f64 {
    Normal::standard().inverse_cdf(1.0 - a)
}

/// Two-sided normal p-value `2(1 − Φ(d))`.
pub fn p_value(dn: f64) -> f64 {
    erfc(dn / std::f64::consts::SQRT_2)
}

/// `D_n = sup|Ṽ_n| / (n^Ĥ ψ̂₁ sup|Ĵ_n|)`.
pub fn dn_test(x: &[f64], fit: &FitResult, whittle: &WhittleResult, loo: &LooVariance, basis: &Basis) -> Result<GofResult> {
    check_same_len(x.len(), fit.residuals.len())?;
    let n = x.len();
    let sup_v = vtilde(x, fit)?.sup_abs();
    let sup_j = jhat(x, &loo.v, basis)?.sup_abs();
    if !(sup_j > 0.0) {
        return Err(Error::Degenerate("sup |Ĵ_n| is zero; the test is not applicable".into()));
    }
    if !(whittle.psi1_hat > 0.0) {
        return Err(Error::Degenerate("ψ̂₁ is zero".into()));
    }
    let dn = sup_v / ((n as f64).powf(whittle.h_hat) * whittle.psi1_hat * sup_j);
    Ok(GofResult {
        dn,
        p_value: p_value(dn),
        sup_v,
        sup_j,
        h_hat: whittle.h_hat,
        psi1_hat: whittle.psi1_hat,
        n,
    })
}

/// Rows `(knot, Ṽ_n, Ĵ_n)` on the union of both knot sets.
pub fn curves(vt: &StepFunction, jh: &StepFunction) -> Vec<(f64, f64, f64)> {
    let mut knots: Vec<f64> = vt.knots.iter().chain(&jh.knots).copied().collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    knots.into_iter().map(|k| (k, vt.eval(k), jh.eval(k))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hand_prefix_sums() {
        let s = StepFunction::cumulative(&[1.0, 2.0, 3.0], &[1.0, -2.0, 1.0]).unwrap();
        assert_eq!(s.values, vec![1.0, -1.0, 0.0]);
        assert_eq!(s.sup_abs(), 1.0);
        assert_eq!(s.eval(0.999), 0.0);
        assert_eq!(s.eval(1.0), 1.0);
        assert_eq!(s.eval(1.999), 1.0);
        assert_eq!(s.eval(2.0), -1.0);
        assert_eq!(s.eval(1e9), 0.0);
    }

    #[test]
    fn ties_merge() {
        let s = StepFunction::cumulative(&[2.0, 1.0, 2.0], &[1.0, 1.0, 5.0]).unwrap();
        assert_eq!(s.knots, vec![1.0, 2.0]);
        assert_eq!(s.values, vec![1.0, 7.0]);
    }

    #[test]
    fn p_values() {
        assert_abs_diff_eq!(p_value(1.959964), 0.05, epsilon = 1e-4);
        assert_eq!(p_value(0.0), 1.0);
        assert_abs_diff_eq!(normal_upper_quantile(0.025), 1.959964, epsilon = 1e-6);
    }

    #[test]
    fn loo_two_points() {
        let x = [0.3, -0.2];
        let e = [2.0, 3.0];
        let b = Bandwidth::fixed(1.5).unwrap();
        let std = Standardization::Known { mu: 0.0, gamma: 1.0 };
        let l = loo_variance(&x, &e, b, Kernel::Cosine, std, Execution::Sequential).unwrap();
        let want = (Kernel::Cosine.scaled(0.5, 1.5) * 9.0).sqrt();
        assert_abs_diff_eq!(l.lambda[0], want, epsilon = 1e-15);
        let phi = (-0.5f64 * 0.09).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert_abs_diff_eq!(l.v[0], want / phi.sqrt(), epsilon = 1e-14);
        let z = loo_variance(&x, &[0.0, 0.0], b, Kernel::Cosine, std, Execution::Sequential).unwrap();
        assert!(z.v.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn jhat_zero_marks() {
        let x = [0.1, -0.4, 1.2, 0.7];
        let j = jhat(&x, &[0.0; 4], &Basis::SimpleLinear).unwrap();
        assert!(j.values.iter().all(|&v| v == 0.0));
        // constant V with an intercept: Ĵ(+∞) = 0
        let j = jhat(&x, &[2.0; 4], &Basis::SimpleLinear).unwrap();
        assert_abs_diff_eq!(j.at_infinity(), 0.0, epsilon = 1e-14);
    }
}
