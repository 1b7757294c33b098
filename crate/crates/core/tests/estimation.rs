use lmreg::gof::{dn_test, jhat, loo_variance, Standardization};
use lmreg::harness::{ExperimentConfig, Model, VarianceFn};
use lmreg::kernel::{Bandwidth, Kernel, VarianceEstimator};
use lmreg::par::{map_indexed, Execution};
use lmreg::quad::{integrate, normal_expectation};
use lmreg::regress::{fit_lse, plugin_constants, Basis};
use lmreg::rng::{derive_seed, stream_rng, Stream};
use lmreg::sim::{gen_farima, gen_fgn, FarimaMethod, InnovationScale};
use lmreg::whittle::{local_whittle, psi1_hat, MRule, DEFAULT_BRACKET};
use rand::Rng;
use rand_distr::StandardNormal;

fn iid_normal(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, Stream::Aux);
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn model(n: usize, big_h: f64, h: f64, sigma: VarianceFn) -> Model {
    let cfg = ExperimentConfig { sigma, innovation_scale: InnovationScale::UnitVariance, ..Default::default() };
    Model::new(&cfg, n, big_h, h).unwrap()
}

#[test]
fn whittle_mean_estimate_near_truth() {
    let n = 4096;
    let m = MRule::Power { c: 1.0, a: 0.8 }.resolve(n);
    let est = map_indexed(Execution::Parallel, 100, |s| {
        let u = gen_farima(n, 0.8, s as u64, FarimaMethod::Exact, InnovationScale::UnitVariance).unwrap().values;
        local_whittle(&u, m, DEFAULT_BRACKET).unwrap().h_hat
    });
    let mean = est.iter().sum::<f64>() / est.len() as f64;
    assert!((mean - 0.8).abs() < 0.05, "{mean}");
}

#[test]
fn whittle_psi1_consistent_with_g() {
    let x = gen_fgn(2048, 0.7, 0.0, 1.0, 8).unwrap().values;
    let r = local_whittle(&x, 256, DEFAULT_BRACKET).unwrap();
    assert!((r.psi1_hat - psi1_hat(r.g_hat, r.h_hat).unwrap()).abs() < 1e-12);
    assert!(r.h_hat > 0.55 && r.h_hat < 0.85, "{}", r.h_hat);
}

#[test]
fn variance_at_zero_is_consistent() {
    let n = 5000;
    let m = model(n, 0.6, 0.6, VarianceFn::OnePlusXSq);
    let bw = Bandwidth::new(3.0, 0.2, n).unwrap();
    let est = map_indexed(Execution::Parallel, 200, |r| {
        let d = m.draw(derive_seed(41, &[r as u64]));
        let fit = fit_lse(&d.x, &d.y, &Basis::SimpleLinear).unwrap();
        VarianceEstimator::new(&d.x, &fit.residuals, bw, Kernel::Cosine).unwrap().estimate(0.0).unwrap().value
    });
    let mean = est.iter().sum::<f64>() / est.len() as f64;
    assert!((mean - 1.0).abs() < 0.1, "{mean}");
}

#[test]
fn kernel_estimate_is_local() {
    let n = 400;
    let x = iid_normal(n, 1);
    let e = iid_normal(n, 2);
    let bw = Bandwidth::fixed(0.3).unwrap();
    let base = VarianceEstimator::new(&x, &e, bw, Kernel::Cosine).unwrap();
    // Inflate residuals of every point farther than b from 0.
    let far: Vec<f64> = x.iter().zip(&e).map(|(xi, ei)| if xi.abs() > 0.3 { 100.0 * ei } else { *ei }).collect();
    let moved = VarianceEstimator::new(&x, &far, bw, Kernel::Cosine).unwrap();
    let a = base.estimate(0.0).unwrap().value;
    let b = moved.estimate(0.0).unwrap().value;
    assert!((a - b).abs() <= 1e-12 * a.abs(), "{a} vs {b}");
}

#[test]
fn kernel_estimate_scales_with_residuals() {
    let x = iid_normal(300, 3);
    let e = iid_normal(300, 4);
    let bw = Bandwidth::fixed(0.5).unwrap();
    let e3: Vec<f64> = e.iter().map(|v| 3.0 * v).collect();
    let a = VarianceEstimator::new(&x, &e, bw, Kernel::Gaussian).unwrap().estimate(0.2).unwrap().value;
    let b = VarianceEstimator::new(&x, &e3, bw, Kernel::Gaussian).unwrap().estimate(0.2).unwrap().value;
    assert!((b / a - 9.0).abs() < 1e-10);
}

#[test]
fn plugin_sigma0_matches_quadrature() {
    let n = 5000;
    let m = model(n, 0.6, 0.6, VarianceFn::OnePlusXSq);
    let d = m.draw(12);
    let sigma: Vec<f64> = d.x.iter().map(|x| (1.0 + x * x).sqrt()).collect();
    let (c1, s0, _) = plugin_constants(&d.x, &sigma, 1.0).unwrap();
    let s0_truth = normal_expectation(|z| (1.0 + z * z).sqrt());
    let c1_truth = normal_expectation(|z| z * z * (1.0 + z * z).sqrt());
    // long-memory design: sample means converge slowly
    assert!((s0 / s0_truth - 1.0).abs() < 0.1, "{s0} vs {s0_truth}");
    assert!((c1 / c1_truth - 1.0).abs() < 0.25, "{c1} vs {c1_truth}");
}

#[test]
fn loo_variance_tracks_sigma() {
    let n = 2000;
    let m = model(n, 0.6, 0.6, VarianceFn::OnePlusXSq);
    let bw = Bandwidth::new(3.0, 0.2, n).unwrap();
    let bias = map_indexed(Execution::Parallel, 20, |r| {
        let d = m.draw(derive_seed(5, &[r as u64]));
        let fit = fit_lse(&d.x, &d.y, &Basis::SimpleLinear).unwrap();
        let loo = loo_variance(&d.x, &fit.residuals, bw, Kernel::Cosine, Standardization::Studentized, Execution::Sequential).unwrap();
        loo.v.iter().zip(&d.x).map(|(v, x)| v - (1.0 + x * x).sqrt()).sum::<f64>() / n as f64
    });
    let mean = bias.iter().sum::<f64>() / bias.len() as f64;
    assert!(mean.abs() < 0.1, "{mean}");
}

#[test]
fn jhat_vanishes_for_constant_sigma() {
    let n = 2000;
    let m = model(n, 0.7, 0.7, VarianceFn::Constant);
    let d = m.draw(77);
    let fit = fit_lse(&d.x, &d.y, &Basis::SimpleLinear).unwrap();
    let bw = Bandwidth::new(3.0, 0.2, n).unwrap();
    let loo = loo_variance(&d.x, &fit.residuals, bw, Kernel::Cosine, Standardization::Studentized, Execution::Parallel).unwrap();
    let sup = jhat(&d.x, &loo.v, &Basis::SimpleLinear).unwrap().sup_abs();
    assert!(sup < 0.1, "{sup}");
}

/// `J_σ(x) = E[(σ(X) − Eσ(X)) I(X ≤ x)]` for `σ = √(1+x²)`, `X ~ N(0,1)`.
fn j_sigma(x: f64, s0: f64) -> f64 {
    let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    integrate(|z| ((1.0 + z * z).sqrt() - s0) * phi(z), -12.0, x, 64, 16)
}

#[test]
fn jhat_tracks_population_curve() {
    let n = 4000;
    let m = model(n, 0.6, 0.6, VarianceFn::OnePlusXSq);
    let s0 = normal_expectation(|z| (1.0 + z * z).sqrt());
    let bw = Bandwidth::new(3.0, 0.2, n).unwrap();
    let grid = [-1.5, -0.75, 0.0, 0.75, 1.5];
    let reps = 10;
    let mut acc = [0.0; 5];
    for r in 0..reps {
        let d = m.draw(derive_seed(9, &[r]));
        let fit = fit_lse(&d.x, &d.y, &Basis::SimpleLinear).unwrap();
        let loo = loo_variance(&d.x, &fit.residuals, bw, Kernel::Cosine, Standardization::Studentized, Execution::Parallel).unwrap();
        let j = jhat(&d.x, &loo.v, &Basis::SimpleLinear).unwrap();
        for (a, g) in acc.iter_mut().zip(grid) {
            *a += j.eval(g) / reps as f64;
        }
    }
    for (a, g) in acc.iter().zip(grid) {
        let truth = j_sigma(g, s0);
        assert!((a - truth).abs() < 0.05, "x={g}: {a} vs {truth}");
    }
}

#[test]
fn exact_fit_with_heteroscedastic_marks_gives_zero_statistic() {
    let n = 300;
    let x = iid_normal(n, 31);
    let y: Vec<f64> = x.iter().map(|v| 1.0 + 2.0 * v).collect();
    let fit = fit_lse(&x, &y, &Basis::SimpleLinear).unwrap();
    // Marks from an unrelated heteroscedastic residual vector keep Ĵ nonzero.
    let e: Vec<f64> = x.iter().zip(iid_normal(n, 32)).map(|(xi, z)| z * (1.0 + xi * xi).sqrt()).collect();
    let bw = Bandwidth::new(3.0, 0.2, n).unwrap();
    let loo = loo_variance(&x, &e, bw, Kernel::Cosine, Standardization::Studentized, Execution::Sequential).unwrap();
    let wh = local_whittle(&iid_normal(n, 33), 30, DEFAULT_BRACKET).unwrap();
    let g = dn_test(&x, &fit, &wh, &loo, &Basis::SimpleLinear).unwrap();
    assert!(g.dn < 1e-10, "{}", g.dn);
    assert!((g.p_value - 1.0).abs() < 1e-9);
}

fn null_statistic(n: usize, big_h: f64, h: f64, r: u64) -> (lmreg::gof::GofResult, f64) {
    let m = model(n, big_h, h, VarianceFn::OnePlusXSq);
    let bw = Bandwidth::new(3.0, 0.2, n).unwrap();
    let d = m.draw(derive_seed(2024, &[n as u64, r]));
    let fit = fit_lse(&d.x, &d.y, &Basis::SimpleLinear).unwrap();
    let wh = local_whittle(&fit.residuals, n / 8, DEFAULT_BRACKET).unwrap();
    let loo = loo_variance(&d.x, &fit.residuals, bw, Kernel::Cosine, Standardization::Studentized, Execution::Sequential).unwrap();
    let g = dn_test(&d.x, &fit, &wh, &loo, &Basis::SimpleLinear).unwrap();
    let scaled = g.sup_v / (n as f64).powf(big_h);
    (g, scaled)
}

#[test]
fn size_is_moderate_when_error_memory_dominates() {
    // With H = 0.9 and h = 0.55 the n^H term dominates the √n remainder.
    let reps = 200;
    let rej = map_indexed(Execution::Parallel, reps, |r| null_statistic(2000, 0.9, 0.55, r as u64).0.reject(0.05));
    let rate = rej.iter().filter(|r| **r).count() as f64 / reps as f64;
    assert!(rate < 0.25, "{rate}");
}

#[test]
fn null_remainder_decays_at_equal_memory() {
    // At H = h = 0.7 the remainder Σ(σ(X)I − E)u is O(√n); sup|Ṽ|/n^H shrinks like n^{1/2−H}.
    let reps = 100;
    let mean = |n: usize| map_indexed(Execution::Parallel, reps, |r| null_statistic(n, 0.7, 0.7, r as u64).1).iter().sum::<f64>() / reps as f64;
    let ratio = mean(1000) / mean(4000);
    assert!(ratio > 1.1 && ratio < 1.6, "{ratio} (leading order {})", 4f64.powf(0.2));
}
