//! Spectral and covariance constants of the long-memory models.

use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{check_open_unit_half, Result};

/// `θ(a) = 2Γ(2−2a)cos(π(1−a))`, the constant linking the spectral and
/// covariance tail constants of a long-memory process.
pub fn theta(a: f64) -> Result<f64> {
    check_open_unit_half("a", a)?;
    Ok(2.0 * gamma(2.0 - 2.0 * a) * (std::f64::consts::PI * (1.0 - a)).cos())
}

/// `D(a) = θ(a) / (a(2a−1))`.
///
/// `D(H)` scales the variance of `n^{-H} Σ u_t`. Both `θ(a)` and `2a−1`
/// vanish at `a = 1/2`, and `D(a) → 2π` there.
pub fn d_const(a: f64) -> Result<f64> {
    Ok(theta(a)? / (a * (2.0 * a - 1.0)))
}

/// Exact autocovariance of unit-variance fractional Gaussian noise,
/// `½(|k+1|^{2h} − 2|k|^{2h} + |k−1|^{2h})`.
///
/// Defined for every `h ∈ (0, 1)`; `h = 1/2` is white noise. For `k ≥ 2`
/// the second difference is evaluated through `expm1`/`ln1p` so the
/// cancellation of the `k^{2h}` terms does not eat the result at large lags.
pub fn acvf_fgn(k: usize, h: f64) -> f64 {
    let two_h = 2.0 * h;
    match k {
        0 => 1.0,
        _ if h == 0.5 => 0.0,
        1 => 0.5 * (2f64.powf(two_h) - 2.0),
        _ => {
            let kf = k as f64;
            let x = 1.0 / kf;
            let up = (two_h * x.ln_1p()).exp_m1();
            let down = (two_h * (-x).ln_1p()).exp_m1();
            0.5 * kf.powf(two_h) * (up + down)
        }
    }
}

/// Tail constant `c` in `acvf_fgn(k, h) ~ c k^{2h−2}`, i.e. `h(2h−1)`.
pub fn fgn_tail_constant(h: f64) -> f64 {
    h * (2.0 * h - 1.0)
}

/// `G_X` for unit-variance fGn: `γ_X(k) ~ G_X θ(h) k^{2h−2}` forces
/// `G_X = h(2h−1)/θ(h) = 1/D(h)`.
pub fn fgn_g_const(h: f64) -> Result<f64> {
    Ok(1.0 / d_const(h)?)
}

/// Variance `Σ b_j² = Γ(1−2d)/Γ(1−d)²` of FARIMA(0,d,0) driven by
/// unit-variance innovations with `b_0 = 1`.
pub fn farima_raw_variance(d: f64) -> f64 {
    (ln_gamma(1.0 - 2.0 * d) - 2.0 * ln_gamma(1.0 - d)).exp()
}

/// Autocorrelations `ρ(0..=max_lag)` of FARIMA(0,d,0),
/// `ρ(k) = ρ(k−1)(k−1+d)/(k−d)`.
pub fn farima_acf(d: f64, max_lag: usize) -> Vec<f64> {
    let mut r = Vec::with_capacity(max_lag + 1);
    r.push(1.0);
    for k in 1..=max_lag {
        let kf = k as f64;
        let prev = r[k - 1];
        r.push(prev * (kf - 1.0 + d) / (kf - d));
    }
    r
}

/// Tail constant `c` in `ρ(k) ~ c k^{2d−1}` for FARIMA(0,d,0),
/// `c = Γ(1−d)/Γ(d)`.
pub fn farima_tail_constant(d: f64) -> f64 {
    (ln_gamma(1.0 - d) - ln_gamma(d)).exp()
}

/// `G_u` for the unit-variance FARIMA(0, H−1/2, 0) errors:
/// `γ_u(k) ~ G_u θ(H) k^{2H−2}`.
pub fn farima_g_const(big_h: f64) -> Result<f64> {
    Ok(farima_tail_constant(big_h - 0.5) / theta(big_h)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn theta_at_three_quarters_is_sqrt_two_pi() {
        // Γ(1/2) = √π, cos(π/4) = 1/√2.
        assert_relative_eq!(theta(0.75).unwrap(), (2.0 * std::f64::consts::PI).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn theta_positive_near_the_edges() {
        for a in [0.51, 0.6, 0.9, 0.99] {
            let t = theta(a).unwrap();
            assert!(t.is_finite() && t > 0.0, "θ({a}) = {t}");
        }
        assert!(theta(0.5).is_err());
        assert!(theta(1.0).is_err());
        assert!(theta(f64::NAN).is_err());
    }

    #[test]
    fn d_const_values_and_left_limit() {
        assert_relative_eq!(d_const(0.75).unwrap(), (2.0 * std::f64::consts::PI).sqrt() / 0.375, max_relative = 1e-12);
        // θ(a) ≈ 2π(a − 1/2) near 1/2, so D(a) ≈ π/a.
        assert_relative_eq!(d_const(0.5001).unwrap(), 2.0 * std::f64::consts::PI, max_relative = 1e-3);
        let t9 = 2.0 * statrs::function::gamma::gamma(0.2) * (0.1 * std::f64::consts::PI).cos();
        assert_relative_eq!(d_const(0.9).unwrap(), t9 / 0.72, max_relative = 1e-12);
        assert!(d_const(0.4).is_err());
    }

    #[test]
    fn fgn_acvf_basics() {
        assert_eq!(acvf_fgn(0, 0.7), 1.0);
        for k in 1..50 {
            assert_eq!(acvf_fgn(k, 0.5), 0.0);
        }
        assert_relative_eq!(acvf_fgn(1, 0.75), 2f64.sqrt() - 1.0, max_relative = 1e-14);
    }

    #[test]
    fn fgn_acvf_matches_direct_formula_and_tail() {
        let h = 0.8;
        for k in 2..40usize {
            let kf = k as f64;
            let direct = 0.5 * ((kf + 1.0).powf(2.0 * h) - 2.0 * kf.powf(2.0 * h) + (kf - 1.0).powf(2.0 * h));
            assert_relative_eq!(acvf_fgn(k, h), direct, max_relative = 1e-10);
        }
        let k = 1_000_000usize;
        let ratio = acvf_fgn(k, h) / (fgn_tail_constant(h) * (k as f64).powf(2.0 * h - 2.0));
        assert_relative_eq!(ratio, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn fgn_acvf_strictly_decreasing() {
        for h in [0.55, 0.7, 0.95] {
            let mut prev = acvf_fgn(1, h);
            for k in 2..20_000 {
                let cur = acvf_fgn(k, h);
                assert!(cur < prev, "h={h} k={k}");
                prev = cur;
            }
        }
    }

    #[test]
    fn farima_acf_tail() {
        let d = 0.3;
        let r = farima_acf(d, 100_000);
        let k = 100_000f64;
        assert_relative_eq!(r[100_000] / (farima_tail_constant(d) * k.powf(2.0 * d - 1.0)), 1.0, epsilon = 1e-4);
        // ρ(1) = d/(1−d)
        assert_relative_eq!(r[1], d / (1.0 - d), max_relative = 1e-15);
    }
}
