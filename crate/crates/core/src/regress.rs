//! Least-squares fitting of `Y_t = β'r(X_t) + σ(X_t)u_t`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{check_same_len, Error, Result};

/// Largest accepted condition number of `A_n`.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    SimpleLinear,
    Polynomial,
    ThroughOrigin,
    Custom,
}

type BasisFn = Arc<dyn Fn(f64, &mut [f64]) + Send + Sync>;

/// Regression functions `r(x) = (r_1(x), …, r_q(x))`.
#[derive(Clone)]
pub enum Basis {
    /// `(1, x)`.
    SimpleLinear,
    /// `(1, x, …, x^p)`.
    Polynomial(usize),
    /// `(x, …, x^p)`, no intercept.
    ThroughOrigin(usize),
    /// User-supplied map writing `q` values into the buffer.
    Custom { q: usize, eval: BasisFn },
}

impl fmt::Debug for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Basis::SimpleLinear => write!(f, "SimpleLinear"),
            Basis::Polynomial(p) => write!(f, "Polynomial({p})"),
            Basis::ThroughOrigin(p) => write!(f, "ThroughOrigin({p})"),
            Basis::Custom { q, .. } => write!(f, "Custom(q = {q})"),
        }
    }
}

impl Basis {
    pub fn custom(q: usize, eval: impl Fn(f64, &mut [f64]) + Send + Sync + 'static) -> Self {
        Basis::Custom { q, eval: Arc::new(eval) }
    }

    pub fn q(&self) -> usize {
        match self {
            Basis::SimpleLinear => 2,
            Basis::Polynomial(p) => p + 1,
            Basis::ThroughOrigin(p) => (*p).max(1),
            Basis::Custom { q, .. } => *q,
        }
    }

    pub fn kind(&self) -> BasisKind {
        match self {
            Basis::SimpleLinear => BasisKind::SimpleLinear,
            Basis::Polynomial(_) => BasisKind::Polynomial,
            Basis::ThroughOrigin(_) => BasisKind::ThroughOrigin,
            Basis::Custom { .. } => BasisKind::Custom,
        }
    }

    /// Whether the constant function lies in the span (known for the
    /// built-in bases only).
    pub fn has_intercept(&self) -> bool {
        matches!(self, Basis::SimpleLinear | Basis::Polynomial(_))
    }

    pub fn eval_into(&self, x: f64, out: &mut [f64]) {
        match self {
            Basis::SimpleLinear => {
                out[0] = 1.0;
                out[1] = x;
            }
            Basis::Polynomial(_) => {
                let mut p = 1.0;
                for o in out.iter_mut() {
                    *o = p;
                    p *= x;
                }
            }
            Basis::ThroughOrigin(_) => {
                let mut p = x;
                for o in out.iter_mut() {
                    *o = p;
                    p *= x;
                }
            }
            Basis::Custom { eval, .. } => eval(x, out),
        }
    }

    pub fn eval(&self, x: f64) -> Vec<f64> {
        let mut v = vec![0.0; self.q()];
        self.eval_into(x, &mut v);
        v
    }

    /// `n × q` design matrix with rows `r(X_t)'`.
    pub fn design(&self, x: &[f64]) -> DMatrix<f64> {
        let q = self.q();
        let mut m = DMatrix::zeros(x.len(), q);
        let mut row = vec![0.0; q];
        for (i, &xi) in x.iter().enumerate() {
            self.eval_into(xi, &mut row);
            for j in 0..q {
                m[(i, j)] = row[j];
            }
        }
        m
    }
}

/// LSE output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub beta_hat: Vec<f64>,
    /// `ẽ_t = Y_t − β̂'r(X_t)` in the input order.
    pub residuals: Vec<f64>,
    pub xbar: f64,
    /// `Σ(X_t − X̄)²/n`.
    pub s2: f64,
    /// `A_n = Σ r(X_t) r(X_t)'/n`, row-major `q × q`.
    pub an: Vec<Vec<f64>>,
    /// `√(Σ ẽ_t² / (n − q))`.
    pub residual_se: f64,
    pub n: usize,
    pub basis: BasisKind,
    pub condition: f64,
}

/// The JSON view of a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub beta_hat: Vec<f64>,
    pub residual_se: f64,
    pub n: usize,
    pub basis: BasisKind,
}

impl FitResult {
    pub fn s(&self) -> f64 {
        self.s2.sqrt()
    }

    pub fn summary(&self) -> FitSummary {
        FitSummary {
            beta_hat: self.beta_hat.clone(),
            residual_se: self.residual_se,
            n: self.n,
            basis: self.basis,
        }
    }

    pub fn an_matrix(&self) -> DMatrix<f64> {
        let q = self.an.len();
        DMatrix::from_fn(q, q, |i, j| self.an[i][j])
    }
}

/// Sample mean and `1/n` variance, summed in sorted order so the result
/// does not depend on how the observations are arranged.
pub fn mean_var(x: &[f64]) -> (f64, f64) {
    let mut s: Vec<f64> = x.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mean = s.iter().sum::<f64>() / n;
    let var = s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

/// `β̂ = A_n^{-1} n^{-1}Σ r(X_t)Y_t`, solved by QR of the design.
///
/// Rows are processed in `(X, Y)` order, which makes the fit exactly
/// invariant to permutations of the observations.
pub fn fit_lse(x: &[f64], y: &[f64], basis: &Basis) -> Result<FitResult> {
    check_same_len(x.len(), y.len())?;
    let n = x.len();
    let q = basis.q();
    if q == 0 {
        return Err(Error::InvalidArgument("basis must have at least one function".into()));
    }
    if n <= q {
        return Err(Error::TooShort { needed: q + 1, got: n });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite observation".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));
    let xs: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let ys = DVector::from_iterator(n, order.iter().map(|&i| y[i]));
    let design = basis.design(&xs);

    let nf = n as f64;
    let an = design.tr_mul(&design) / nf;
    let condition = condition_number(&an);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularDesign { condition });
    }
    let qr = design.qr();
    let qty = qr.q().tr_mul(&ys);
    let beta = qr
        .r()
        .solve_upper_triangular(&qty)
        .ok_or(Error::SingularDesign { condition })?;
    let beta_hat: Vec<f64> = beta.iter().copied().collect();

    let mut row = vec![0.0; q];
    let residuals: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            basis.eval_into(xi, &mut row);
            yi - row.iter().zip(&beta_hat).map(|(r, b)| r * b).sum::<f64>()
        })
        .collect();
    let mut sq: Vec<f64> = residuals.iter().map(|e| e * e).collect();
    sq.sort_by(f64::total_cmp);
    let residual_se = (sq.iter().sum::<f64>() / (n - q) as f64).sqrt();
    let (xbar, s2) = mean_var(x);
    Ok(FitResult {
        beta_hat,
        residuals,
        xbar,
        s2,
        an: (0..q).map(|i| (0..q).map(|j| an[(i, j)]).collect()).collect(),
        residual_se,
        n,
        basis: basis.kind(),
        condition,
    })
}

/// Ratio of extreme eigenvalues of a symmetric PSD matrix (∞ if singular).
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(a.clone()).eigenvalues;
    let max = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = eig.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// `Y_t − β̂₁ X_t`, the residuals that ignore the intercept.
pub fn slope_only_residuals(x: &[f64], y: &[f64], beta1: f64) -> Result<Vec<f64>> {
    check_same_len(x.len(), y.len())?;
    Ok(x.iter().zip(y).map(|(xi, yi)| yi - beta1 * xi).collect())
}

/// Plug-in estimates `(Σ X_i² V_i/n, Σ V_i/n, s)` of `(c₁, σ₀, γ)`.
pub fn plugin_constants(x: &[f64], v: &[f64], s: f64) -> Result<(f64, f64, f64)> {
    check_same_len(x.len(), v.len())?;
    if x.is_empty() {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    if v.iter().any(|&vi| !(vi >= 0.0)) {
        return Err(Error::InvalidArgument("variance estimates must be nonnegative".into()));
    }
    let n = x.len() as f64;
    let c1 = x.iter().zip(v).map(|(xi, vi)| xi * xi * vi).sum::<f64>() / n;
    let sigma0 = v.iter().sum::<f64>() / n;
    Ok((c1, sigma0, s))
}
