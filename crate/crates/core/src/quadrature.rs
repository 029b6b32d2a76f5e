//! Adaptive Simpson quadrature.

use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    /// Absolute error target for the whole interval.
    pub abs: f64,
    /// Hard cap on integrand evaluations.
    pub max_evals: usize,
    pub max_depth: u32,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-8, max_evals: 2_000_000, max_depth: 48 }
    }
}

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
}

/// Integrate `f` over `[a, b]` with adaptive Simpson and Richardson
/// correction.
///
/// Panels are processed depth-first from the left so the summation order,
/// and therefore the result, is fully deterministic.
pub fn adaptive_simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let mut evals = 3usize;
    let mut stack = Vec::with_capacity(64);
    stack.push(Panel { a, b, fa, fm, fb, whole: (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol: tol.abs, depth: 0 });
    let mut total = 0.0;
    while let Some(p) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let lm = 0.5 * (p.a + m);
        let rm = 0.5 * (m + p.b);
        let flm = f(lm);
        let frm = f(rm);
        evals += 2;
        if evals > tol.max_evals {
            return Err(Error::NonConvergence { evaluations: evals });
        }
        let left = (m - p.a) / 6.0 * (p.fa + 4.0 * flm + p.fm);
        let right = (p.b - m) / 6.0 * (p.fm + 4.0 * frm + p.fb);
        let delta = left + right - p.whole;
        if p.depth >= tol.max_depth || delta.abs() <= 15.0 * p.tol {
            total += left + right + delta / 15.0;
            continue;
        }
        let half = 0.5 * p.tol;
        // Right first so the left half is popped next.
        stack.push(Panel { a: m, b: p.b, fa: p.fm, fm: frm, fb: p.fb, whole: right, tol: half, depth: p.depth + 1 });
        stack.push(Panel { a: p.a, b: m, fa: p.fa, fm: flm, fb: p.fm, whole: left, tol: half, depth: p.depth + 1 });
    }
    if !total.is_finite() {
        return Err(Error::NonConvergence { evaluations: evals });
    }
    Ok(total)
}
