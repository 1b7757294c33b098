//! Bracketed scalar minimization.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub x: f64,
    pub fx: f64,
    /// Objective evaluations spent.
    pub iterations: usize,
    /// The minimizer sits within the tolerance of a bracket end.
    pub at_boundary: bool,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search on `[a, b]` until the bracket is narrower than
/// `tol`, then one parabolic step through the final three points, kept
/// only if it lowers the objective.
pub fn golden_section(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Minimum {
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut evals = 2;
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
        evals += 1;
    }
    let (mut x, mut fx) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };

    let (fl, fh) = (f(lo), f(hi));
    evals += 2;
    for (xe, fe) in [(lo, fl), (hi, fh)] {
        if fe < fx {
            x = xe;
            fx = fe;
        }
    }
    if let Some(v) = parabola_vertex((lo, fl), (x, fx), (hi, fh)) {
        if v > lo && v < hi {
            let fv = f(v);
            evals += 1;
            if fv < fx {
                x = v;
                fx = fv;
            }
        }
    }
    Minimum { x, fx, iterations: evals, at_boundary: false }
}

fn parabola_vertex((a, fa): (f64, f64), (b, fb): (f64, f64), (c, fc): (f64, f64)) -> Option<f64> {
    let p = (b - a) * (fb - fc);
    let q = (b - c) * (fb - fa);
    let den = 2.0 * (p - q);
    if den == 0.0 || !den.is_finite() {
        return None;
    }
    let v = b - ((b - a) * p - (b - c) * q) / den;
    v.is_finite().then_some(v)
}

/// Multistart golden section: the bracket is split into `starts` equal
/// pieces, each searched, and the lowest value kept (leftmost on ties).
/// Does not assume convexity.
pub fn minimize_scalar(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, starts: usize) -> Minimum {
    let starts = starts.max(1);
    let width = (b - a) / starts as f64;
    let mut best: Option<Minimum> = None;
    let mut evals = 0;
    for k in 0..starts {
        let lo = a + k as f64 * width;
        let hi = if k + 1 == starts { b } else { lo + width };
        let m = golden_section(&f, lo, hi, tol);
        evals += m.iterations;
        if best.is_none_or(|bm| m.fx < bm.fx) {
            best = Some(m);
        }
    }
    let mut m = best.expect("at least one start");
    m.iterations = evals;
    m.at_boundary = (m.x - a).abs() <= tol || (b - m.x).abs() <= tol;
    m
}
