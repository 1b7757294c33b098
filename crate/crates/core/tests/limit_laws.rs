use lmreg::limits::{a_beta, default_block_len, kappa2_block_bootstrap, sample_z2, LimitKind, Z2Request};
use lmreg::par::Execution;
use lmreg::quad::normal_expectation;
use lmreg::rng::{stream_rng, Stream};
use lmreg::sim::constants::farima_acf;
use lmreg::sim::{acvf_fgn, FarimaGenerator, FarimaMethod, FgnGenerator, InnovationScale};

fn var(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)
}

#[test]
fn a_beta_blows_up_near_one() {
    // ∫₀¹ u^{z−3/2}(1−u)^{1−2z} du ≥ ∫_{1/2}^1 2^{−1/2}·(1−u)^{1−2z} du = 2^{−1/2}·(1/2)^{2−2z}/(2−2z)
    let z = 0.999;
    let lower = 0.5f64.sqrt() * 0.5f64.powf(2.0 - 2.0 * z) / (2.0 - 2.0 * z);
    let a = a_beta(z).unwrap();
    assert!(a > 100.0 && a >= lower, "{a} vs {lower}");
}

#[test]
fn independent_z2_is_centred() {
    let req = Z2Request::new(0.85, 0.85, LimitKind::Z2Independent, 256, 4000, 3);
    let s = sample_z2(&req, Execution::Parallel).unwrap();
    let n = s.draws.len() as f64;
    let m = s.draws.iter().sum::<f64>() / n;
    let se = (var(&s.draws) / n).sqrt();
    assert!(m.abs() < 4.0 * se, "{m} (se {se})");
    assert_eq!(s.neglected_mass, 0.0);
}

#[test]
fn grid_doubling_is_stable() {
    for kind in [LimitKind::Z2Independent, LimitKind::Z2Star] {
        let coarse = sample_z2(&Z2Request::new(0.9, 0.9, kind, 256, 6000, 5), Execution::Parallel).unwrap();
        let fine = sample_z2(&Z2Request::new(0.9, 0.9, kind, 512, 6000, 6), Execution::Parallel).unwrap();
        let (a, b) = (var(&coarse.draws), var(&fine.draws));
        // Independent seeds: the sampling error of each variance is near 2-4%.
        assert!((a / b - 1.0).abs() < 0.1, "{kind:?}: {a} vs {b}");
    }
}

#[test]
fn sampler_is_deterministic_across_execution() {
    let req = Z2Request::new(0.8, 0.9, LimitKind::Z2Independent, 128, 200, 17);
    let a = sample_z2(&req, Execution::Parallel).unwrap();
    let b = sample_z2(&req, Execution::Sequential).unwrap();
    assert_eq!(a.draws, b.draws);
}

/// Hermite coefficients `c_j = E[g(Z)He_j(Z)]/j!`.
fn hermite_coeffs(g: impl Fn(f64) -> f64 + Copy, order: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(order + 1);
    let mut fact = 1.0;
    for j in 0..=order {
        if j > 0 {
            fact *= j as f64;
        }
        let c = normal_expectation(|z| {
            let (mut h0, mut h1) = (1.0, z);
            let hj = if j == 0 {
                1.0
            } else {
                for k in 1..j {
                    let h2 = z * h1 - k as f64 * h0;
                    h0 = h1;
                    h1 = h2;
                }
                h1
            };
            g(z) * hj
        }) / fact;
        out.push(c);
    }
    out
}

#[test]
fn block_bootstrap_matches_series_truth() {
    let (big_h, h, n) = (0.6, 0.6, 2000);
    let g = |x: f64| x * (1.0 + x * x).sqrt();
    let coeffs = hermite_coeffs(g, 21);
    let cross = |rho: f64| {
        let mut fact = 1.0;
        let mut total = 0.0;
        for (j, c) in coeffs.iter().enumerate() {
            if j > 0 {
                fact *= j as f64;
            }
            total += c * c * fact * rho.powi(j as i32);
        }
        total
    };
    let rho_u = farima_acf(big_h - 0.5, 500);
    let truth: f64 = cross(1.0) + 2.0 * (1..=500).map(|k| cross(acvf_fgn(k, h)) * rho_u[k]).sum::<f64>();

    let xg = FgnGenerator::new(n, h, 0.0, 1.0).unwrap();
    let ug = FarimaGenerator::new(n, big_h, FarimaMethod::Exact, InnovationScale::UnitVariance).unwrap();
    let reps = 20;
    let mut mean = 0.0;
    for r in 0..reps {
        let x = xg.sample(&mut stream_rng(r, Stream::Design));
        let u = ug.sample(&mut stream_rng(r, Stream::Error));
        let s: Vec<f64> = x.iter().zip(&u).map(|(a, b)| g(*a) * b).collect();
        mean += kappa2_block_bootstrap(&s, default_block_len(n), 400, r, Execution::Parallel).unwrap() / reps as f64;
    }
    assert!((mean / truth - 1.0).abs() < 0.25, "{mean} vs {truth}");
}
