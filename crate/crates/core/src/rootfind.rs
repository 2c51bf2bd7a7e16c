//! Scalar root finding for β-breakpoints and candidate crossings.

use crate::error::{Error, Result};
use crate::lasso_path::{ActiveSystem, SignPattern, Variant};
use crate::transform::BetaTransform;

/// Default relative tolerance for β roots.
pub const BETA_TOLERANCE: f64 = 1e-9;

const MAX_ITERATIONS: usize = 200;

/// A function with a sign change on `[lo, hi]`.
pub struct BracketedProblem<F> {
    pub f: F,
    pub lo: f64,
    pub hi: f64,
    pub tol_rel: f64,
}

fn eval<F: FnMut(f64) -> Result<f64>>(f: &mut F, x: f64, lo: f64, hi: f64) -> Result<f64> {
    let v = f(x)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::RootFinding {
            lo,
            hi,
            reason: format!("non-finite value at {x:e}"),
        })
    }
}

fn converged(width: f64, x: f64, tol: f64) -> bool {
    width <= tol * x.abs().max(1.0)
}

/// Plain bisection; the returned bracket width satisfies the tolerance.
pub fn bisect<F: FnMut(f64) -> Result<f64>>(p: BracketedProblem<F>) -> Result<f64> {
    let BracketedProblem {
        mut f,
        mut lo,
        mut hi,
        tol_rel,
    } = p;
    let (lo0, hi0) = (lo, hi);
    if !(lo < hi) {
        return Err(Error::Precondition(format!(
            "empty bracket [{lo:e}, {hi:e}]"
        )));
    }
    let mut flo = eval(&mut f, lo, lo0, hi0)?;
    let fhi = eval(&mut f, hi, lo0, hi0)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Precondition(format!(
            "no sign change on [{lo:e}, {hi:e}]"
        )));
    }
    for _ in 0..MAX_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if converged(hi - lo, mid, tol_rel) {
            return Ok(mid);
        }
        let fm = eval(&mut f, mid, lo0, hi0)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Err(Error::RootFinding {
        lo: lo0,
        hi: hi0,
        reason: format!("bisection did not converge in {MAX_ITERATIONS} iterations"),
    })
}

/// Result of [`guarded_secant_traced`]: the root and every iterate evaluated.
#[derive(Debug, Clone)]
pub struct SecantTrace {
    pub root: f64,
    pub iterates: Vec<f64>,
}

/// Secant iteration kept inside a shrinking sign bracket.
pub fn guarded_secant<F: FnMut(f64) -> Result<f64>>(
    f: F,
    lo: f64,
    hi: f64,
    tol_rel: f64,
) -> Result<f64> {
    guarded_secant_traced(f, lo, hi, tol_rel).map(|t| t.root)
}

/// As [`guarded_secant`], also returning the iterates.
///
/// An iterate falling outside the current bracket is replaced by the bracket
/// midpoint; so is every third consecutive update of the same bracket end,
/// which keeps one-sided convergence from stalling.
pub fn guarded_secant_traced<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol_rel: f64,
) -> Result<SecantTrace> {
    if !(lo < hi) {
        return Err(Error::Precondition(format!(
            "empty bracket [{lo:e}, {hi:e}]"
        )));
    }
    let mut iterates = Vec::new();
    let (mut a, mut b) = (lo, hi);
    let mut fa = eval(&mut f, a, lo, hi)?;
    let fb = eval(&mut f, b, lo, hi)?;
    if fa == 0.0 {
        return Ok(SecantTrace { root: a, iterates });
    }
    if fb == 0.0 {
        return Ok(SecantTrace { root: b, iterates });
    }
    if fa.signum() == fb.signum() {
        return Err(Error::RootFinding {
            lo,
            hi,
            reason: "no sign change between endpoints".into(),
        });
    }
    let (mut x0, mut f0, mut x1, mut f1) = (a, fa, b, fb);
    let mut same_side = 0i32;
    for _ in 0..MAX_ITERATIONS {
        let mut x = x1 - f1 * (x1 - x0) / (f1 - f0);
        if !(x > a && x < b) || same_side.abs() >= 3 {
            x = 0.5 * (a + b);
            same_side = 0;
        }
        let fx = eval(&mut f, x, lo, hi)?;
        iterates.push(x);
        if fx == 0.0 {
            return Ok(SecantTrace { root: x, iterates });
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
            same_side = if same_side > 0 { same_side + 1 } else { 1 };
        } else {
            b = x;
            same_side = if same_side < 0 { same_side - 1 } else { -1 };
        }
        let step = (x - x1).abs();
        x0 = x1;
        f0 = f1;
        x1 = x;
        f1 = fx;
        if converged(b - a, x, tol_rel) || converged(step, x, 0.5 * tol_rel) {
            return Ok(SecantTrace { root: x, iterates });
        }
    }
    Err(Error::RootFinding {
        lo,
        hi,
        reason: format!("secant did not converge in {MAX_ITERATIONS} iterations"),
    })
}

/// Candidate value `α̃_j(pattern, β)`, or `-∞` where `j` never moves.
pub(crate) fn candidate_value(
    bt: &BetaTransform,
    pattern: &SignPattern,
    j: usize,
    beta: f64,
) -> Result<f64> {
    let design = bt.slice(beta)?;
    let sys = ActiveSystem::for_pattern(&design, pattern)?;
    Ok(sys.candidate(j, Variant::Lasso).value)
}

/// First β in `(lo, hi)` where `α̃_i = α̃_j` for the tile with support pattern `pattern`.
///
/// Returns `None` unless the difference changes sign between the endpoints.
/// The search runs in `ln β`, so the tolerance is relative in β.
pub fn crossing(
    bt: &BetaTransform,
    pattern: &SignPattern,
    i: usize,
    j: usize,
    interval: (f64, f64),
) -> Result<Option<f64>> {
    let (lo, hi) = interval;
    if !(lo > 0.0 && lo < hi) {
        return Err(Error::Precondition(format!(
            "bad interval ({lo:e}, {hi:e})"
        )));
    }
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    let diff = |beta: f64| -> Result<f64> {
        Ok(candidate_value(bt, pattern, a, beta)? - candidate_value(bt, pattern, b, beta)?)
    };
    let dl = diff(lo)?;
    let dh = diff(hi)?;
    if !dl.is_finite() || !dh.is_finite() || dl.signum() == dh.signum() {
        return Ok(None);
    }
    let root = guarded_secant(|t: f64| diff(t.exp()), lo.ln(), hi.ln(), BETA_TOLERANCE)?;
    Ok(Some(root.exp()))
}
