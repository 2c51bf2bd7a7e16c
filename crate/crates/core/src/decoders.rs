//! Baseline sparse decoders: OMP, warm-started IHT, Lasso and preconditioned Lasso paths.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lasso_path::{path, path_on, ActiveSystem, LassoPath, Variant};
use crate::linalg::{least_squares, ThresholdedSvd};
use crate::transform::{decompose, Design, Problem};

/// β standing in for ∞ when the multi-penalty path reduces to the plain Lasso.
pub const LASSO_BETA: f64 = 1e12;

pub const IHT_MAX_ITERATIONS: usize = 500;
/// IHT stops once the support has not changed for this many iterations.
pub const IHT_STABLE_ITERATIONS: usize = 10;

#[derive(Debug, Clone, Serialize)]
pub struct DecoderResult {
    pub method: String,
    pub supports: Vec<Vec<usize>>,
    /// Aligned with `supports`; empty where the least-squares refit is rank deficient.
    pub coefficients: Vec<Vec<f64>>,
    /// Seconds.
    #[serde(skip)]
    pub wall_time: f64,
}

fn columns(a: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    a.select_columns(idx)
}

fn refit(problem: &Problem, support: &[usize]) -> Vec<f64> {
    least_squares(&columns(problem.a(), support), problem.y(), support)
        .map(|x| x.iter().copied().collect())
        .unwrap_or_default()
}

fn check_size(problem: &Problem, s: usize) -> Result<()> {
    if s > problem.m() || s > problem.n() {
        return Err(Error::Precondition(format!(
            "support size {s} exceeds min(m, n) = {}",
            problem.m().min(problem.n())
        )));
    }
    Ok(())
}

/// Orthogonal matching pursuit with a full least-squares refit after each pick.
pub fn omp(problem: &Problem, s: usize) -> Result<DecoderResult> {
    check_size(problem, s)?;
    let start = Instant::now();
    let a = problem.a();
    let y = problem.y();
    let mut selected: Vec<usize> = Vec::with_capacity(s);
    let mut residual = y.clone();
    let mut coef = DVector::zeros(0);
    for _ in 0..s {
        let corr = a.tr_mul(&residual);
        let mut best: Option<(usize, f64)> = None;
        for (j, c) in corr.iter().enumerate() {
            if selected.contains(&j) {
                continue;
            }
            if best.is_none_or(|(_, v)| c.abs() > v) {
                best = Some((j, c.abs()));
            }
        }
        let (j, _) = best.expect("s <= n leaves a free column");
        selected.push(j);
        let cols = columns(a, &selected);
        coef = least_squares(&cols, y, &selected)?;
        residual = y - cols * &coef;
    }
    let mut pairs: Vec<(usize, f64)> = selected.iter().copied().zip(coef.iter().copied()).collect();
    pairs.sort_by_key(|p| p.0);
    Ok(DecoderResult {
        method: "OMP".into(),
        supports: vec![pairs.iter().map(|p| p.0).collect()],
        coefficients: vec![pairs.iter().map(|p| p.1).collect()],
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Indices of the `s` largest magnitudes, ties to the smaller index, ascending.
fn top_s(u: &DVector<f64>, s: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..u.len()).collect();
    idx.sort_by(|&i, &j| u[j].abs().total_cmp(&u[i].abs()).then(i.cmp(&j)));
    idx.truncate(s);
    idx.sort_unstable();
    idx
}

/// Lasso solution at the first knot on the standard path whose support has at least `s` entries.
fn lasso_warm_start(problem: &Problem, s: usize) -> Result<DVector<f64>> {
    let design = Design::plain(problem.a(), problem.y().clone());
    let lp = path_on(&design, s, Variant::Lasso)?;
    let n = problem.n();
    let Some(k) = lp
        .knots
        .iter()
        .position(|k| k.pattern.len() >= s)
        .or_else(|| lp.knots.len().checked_sub(1))
    else {
        return Ok(DVector::zeros(n));
    };
    // Evaluate strictly inside the knot's interval so the entering index is non-zero.
    let upper = lp.knots[k].alpha;
    let lower = lp.knots.get(k + 1).map_or(0.0, |next| next.alpha);
    let alpha = 0.5 * (upper + lower);
    let pattern = &lp.knots[k].pattern;
    let sys = ActiveSystem::for_pattern(&design, pattern)?;
    let vals = DVector::from_vec(sys.solution(alpha));
    Ok(crate::lasso_path::expand(pattern, &vals, n))
}

/// Iterative hard thresholding with step `1/‖A‖₂²`, warm-started from the Lasso path.
pub fn iht_warm(problem: &Problem, s: usize) -> Result<DecoderResult> {
    check_size(problem, s)?;
    let start = Instant::now();
    let n = problem.n();
    if s == 0 {
        return Ok(DecoderResult {
            method: "L1IHT".into(),
            supports: vec![Vec::new()],
            coefficients: vec![Vec::new()],
            wall_time: start.elapsed().as_secs_f64(),
        });
    }
    let a = problem.a();
    let y = problem.y();
    let norm = a.clone().svd(false, false).singular_values.max();
    let mu = if norm > 0.0 { 1.0 / (norm * norm) } else { 0.0 };
    let warm = lasso_warm_start(problem, s)?;
    let threshold = |v: &DVector<f64>| {
        let keep = top_s(v, s);
        let mut out = DVector::zeros(n);
        for &i in &keep {
            out[i] = v[i];
        }
        (out, keep)
    };
    let (mut u, mut support) = threshold(&warm);
    let mut stable = 0;
    for _ in 0..IHT_MAX_ITERATIONS {
        let step = &u + a.tr_mul(&(y - a * &u)) * mu;
        let (next, next_support) = threshold(&step);
        stable = if next_support == support {
            stable + 1
        } else {
            0
        };
        u = next;
        support = next_support;
        if stable >= IHT_STABLE_ITERATIONS {
            break;
        }
    }
    Ok(DecoderResult {
        method: "L1IHT".into(),
        coefficients: vec![support.iter().map(|&i| u[i]).collect()],
        supports: vec![support],
        wall_time: start.elapsed().as_secs_f64(),
    })
}

fn from_path(problem: &Problem, method: &str, lp: &LassoPath, start: Instant) -> DecoderResult {
    let supports = lp.supports();
    let coefficients = supports.iter().map(|sup| refit(problem, sup)).collect();
    DecoderResult {
        method: method.into(),
        supports,
        coefficients,
        wall_time: start.elapsed().as_secs_f64(),
    }
}

/// Supports of size ≤ `s_max` along the standard Lasso path, via the multi-penalty path at β = 10¹².
pub fn lasso_supports(problem: &Problem, s_max: usize) -> Result<DecoderResult> {
    check_size(problem, s_max)?;
    let start = Instant::now();
    let bt = decompose(problem)?;
    let lp = path(&bt, LASSO_BETA, s_max, Variant::Lasso)?;
    Ok(from_path(problem, "LASSO", &lp, start))
}

/// Supports of size ≤ `s_max` along the Lasso path of `(FA, Fy)` with `F = UΣ†Uᵀ`.
pub fn plasso_supports(problem: &Problem, s_max: usize) -> Result<DecoderResult> {
    check_size(problem, s_max)?;
    let start = Instant::now();
    let lp = plasso_path(problem, s_max)?;
    Ok(from_path(problem, "pLASSO", &lp, start))
}

/// The preconditioned Lasso path itself.
pub fn plasso_path(problem: &Problem, s_max: usize) -> Result<LassoPath> {
    let f = ThresholdedSvd::new(problem.a()).preconditioner();
    let fa = &f * problem.a();
    let fy = &f * problem.y();
    path_on(&Design::plain(&fa, fy), s_max, Variant::Lasso)
}
