//! Independent reference solvers and fixtures for the integration tests.
//! Nothing here calls into the library's solvers.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn gaussian_instance(m: usize, n: usize, seed: u64) -> (DMatrix<f64>, DVector<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(m, n, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z / (m as f64).sqrt()
    });
    let y = DVector::from_fn(m, |_, _| StandardNormal.sample(&mut rng));
    (a, y)
}

/// `(I + AAᵀ/β)^{-1/2}` from an eigendecomposition of the full matrix `I + AAᵀ/β`.
pub fn reference_operator(a: &DMatrix<f64>, beta: f64) -> DMatrix<f64> {
    let m = a.nrows();
    let mat = DMatrix::identity(m, m) + a * a.transpose() / beta;
    let eig = SymmetricEigen::new(mat);
    let mut scaled = eig.eigenvectors.clone();
    for (c, l) in eig.eigenvalues.iter().enumerate() {
        scaled.column_mut(c).scale_mut(l.powf(-0.5));
    }
    scaled * eig.eigenvectors.transpose()
}

pub struct LassoSolve {
    pub u: DVector<f64>,
    pub gap: f64,
    pub iterations: usize,
}

fn soft(x: f64, t: f64) -> f64 {
    x.signum() * (x.abs() - t).max(0.0)
}

/// `½‖Bu − y‖² + α‖u‖₁` by FISTA with adaptive restart, stopped on a relative duality gap.
pub fn fista(
    b: &DMatrix<f64>,
    y: &DVector<f64>,
    alpha: f64,
    rel_gap: f64,
    max_iter: usize,
) -> LassoSolve {
    let n = b.ncols();
    let lip = b.clone().svd(false, false).singular_values.max().powi(2);
    let step = 1.0 / lip;
    let mut u = DVector::zeros(n);
    let mut z = u.clone();
    let mut t = 1.0_f64;
    let mut gap = f64::INFINITY;
    let mut it = 0;
    while it < max_iter {
        it += 1;
        let grad = b.transpose() * (b * &z - y);
        let next = DVector::from_fn(n, |i, _| soft(z[i] - step * grad[i], step * alpha));
        let restart = (&z - &next).dot(&(&next - &u)) > 0.0;
        let t_next = if restart {
            1.0
        } else {
            0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt())
        };
        z = if restart {
            next.clone()
        } else {
            &next + (&next - &u) * ((t - 1.0) / t_next)
        };
        u = next;
        t = t_next;
        if it % 10 == 0 {
            let r = y - b * &u;
            let primal = 0.5 * r.norm_squared() + alpha * u.lp_norm(1);
            let corr = (b.transpose() * &r).amax();
            let theta = &r * (alpha / corr.max(alpha));
            let dual = 0.5 * y.norm_squared() - 0.5 * (y - &theta).norm_squared();
            gap = primal - dual;
            if gap <= rel_gap * primal.max(1e-300) {
                break;
            }
        }
    }
    LassoSolve {
        u,
        gap,
        iterations: it,
    }
}

/// Support and signs of `u`, ignoring entries below `tol·‖u‖∞`.
pub fn signed_support(u: &DVector<f64>, tol: f64) -> Vec<(usize, i8)> {
    let cut = tol * u.amax();
    u.iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > cut && **v != 0.0)
        .map(|(i, v)| (i, if *v > 0.0 { 1 } else { -1 }))
        .collect()
}

/// Signed supports along the Lasso path of `(b, y)` from α = ∞ down, by the classic LARS-lasso
/// homotopy with dense normal-equation solves. Stops before the support would exceed `s_max`.
pub fn lars_lasso_patterns(
    b: &DMatrix<f64>,
    y: &DVector<f64>,
    s_max: usize,
) -> Vec<Vec<(usize, i8)>> {
    let n = b.ncols();
    let mut active: Vec<usize> = Vec::new();
    let mut signs: Vec<f64> = Vec::new();
    let mut alpha = f64::INFINITY;
    let mut out = vec![Vec::new()];
    let record = |active: &[usize], signs: &[f64]| {
        let mut p: Vec<(usize, i8)> = active
            .iter()
            .zip(signs)
            .map(|(&i, &s)| (i, if s > 0.0 { 1 } else { -1 }))
            .collect();
        p.sort();
        p
    };
    for _ in 0..50 * s_max.max(1) {
        // u_A(α) = a − α·d, correlations c(α) = r + α·q.
        let (a_vec, d_vec, r, q) = if active.is_empty() {
            (
                DVector::zeros(0),
                DVector::zeros(0),
                b.transpose() * y,
                DVector::zeros(n),
            )
        } else {
            let ba = b.select_columns(&active);
            let g = ba.transpose() * &ba;
            let lu = g.lu();
            let a_vec = lu.solve(&(ba.transpose() * y)).expect("invertible Gram");
            let d_vec = lu
                .solve(&DVector::from_column_slice(&signs))
                .expect("invertible Gram");
            let r = b.transpose() * (y - &ba * &a_vec);
            let q = b.transpose() * (&ba * &d_vec);
            (a_vec, d_vec, r, q)
        };
        let below = |t: f64| t > 0.0 && t < alpha * (1.0 - 1e-12);
        let mut best: Option<(f64, usize, f64, bool)> = None;
        let mut consider = |t: f64, j: usize, s: f64, leave: bool| {
            if below(t) && best.is_none_or(|(bt, ..)| t > bt) {
                best = Some((t, j, s, leave));
            }
        };
        for j in 0..n {
            if active.contains(&j) {
                continue;
            }
            consider(r[j] / (1.0 - q[j]), j, 1.0, false);
            consider(-r[j] / (1.0 + q[j]), j, -1.0, false);
        }
        for (k, &i) in active.iter().enumerate() {
            if d_vec[k] != 0.0 {
                consider(a_vec[k] / d_vec[k], i, 0.0, true);
            }
        }
        let Some((t, j, s, leave)) = best else { break };
        if leave {
            let k = active.iter().position(|&i| i == j).unwrap();
            active.remove(k);
            signs.remove(k);
        } else {
            if active.len() == s_max {
                break;
            }
            active.push(j);
            signs.push(s);
        }
        alpha = t;
        out.push(record(&active, &signs));
    }
    out
}
