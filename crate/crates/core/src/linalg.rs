//! Small dense linear-algebra helpers: an updatable Cholesky factor for
//! active-set Gram matrices, least squares, and thresholded pseudo-inverses.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Gram matrices whose condition estimate exceeds this are treated as singular.
pub const MAX_GRAM_CONDITION: f64 = 1e12;

/// Relative singular-value cut used for every pseudo-inverse in the crate.
pub const PINV_RELATIVE_CUTOFF: f64 = 1e-10;

/// Lower-triangular factor `L` with `G = L·Lᵀ`, grown and shrunk one index at a time.
#[derive(Debug, Clone, Default)]
pub struct Cholesky {
    // Row-major, dense `dim × dim`, upper part unused.
    l: Vec<f64>,
    dim: usize,
}

impl Cholesky {
    pub fn new() -> Self {
        Self::default()
    }

    /// Factor a symmetric positive definite matrix from scratch.
    pub fn factor(g: &DMatrix<f64>) -> Option<Self> {
        let n = g.nrows();
        let mut chol = Self {
            l: vec![0.0; n * n],
            dim: n,
        };
        for j in 0..n {
            let mut diag = g[(j, j)];
            for k in 0..j {
                diag -= chol.at(j, k) * chol.at(j, k);
            }
            if !(diag > 0.0) {
                return None;
            }
            let ljj = diag.sqrt();
            chol.set(j, j, ljj);
            for i in j + 1..n {
                let mut v = g[(i, j)];
                for k in 0..j {
                    v -= chol.at(i, k) * chol.at(j, k);
                }
                chol.set(i, j, v / ljj);
            }
        }
        Some(chol)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.l[i * self.dim + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.l[i * self.dim + j] = v;
    }

    /// Ratio of extreme squared diagonal entries; a cheap lower bound on cond(G).
    pub fn condition_estimate(&self) -> f64 {
        if self.dim == 0 {
            return 1.0;
        }
        let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
        for i in 0..self.dim {
            let d = self.at(i, i).abs();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        if lo == 0.0 {
            f64::INFINITY
        } else {
            (hi / lo).powi(2)
        }
    }

    /// Append a row/column: `cross` holds `G[..dim, new]`, `diag` is `G[new, new]`.
    /// Returns `false` (leaving the factor untouched) if the result is not positive definite.
    pub fn push(&mut self, cross: &[f64], diag: f64) -> bool {
        assert_eq!(cross.len(), self.dim);
        let row = self.forward(cross);
        let rem = diag - row.iter().map(|v| v * v).sum::<f64>();
        if !(rem > diag.abs() * 1e-14) {
            return false;
        }
        let n = self.dim + 1;
        let mut l = vec![0.0; n * n];
        for i in 0..self.dim {
            for j in 0..=i {
                l[i * n + j] = self.at(i, j);
            }
        }
        for (j, v) in row.iter().enumerate() {
            l[self.dim * n + j] = *v;
        }
        l[self.dim * n + self.dim] = rem.sqrt();
        self.l = l;
        self.dim = n;
        true
    }

    /// Remove row/column `k`, restoring triangularity with Givens rotations.
    pub fn remove(&mut self, k: usize) {
        assert!(k < self.dim);
        let n = self.dim;
        // (n-1) x n matrix with row k deleted.
        let mut m: Vec<f64> = Vec::with_capacity((n - 1) * n);
        for i in (0..n).filter(|&i| i != k) {
            m.extend_from_slice(&self.l[i * n..(i + 1) * n]);
        }
        let rows = n - 1;
        for i in k..rows {
            let a = m[i * n + i];
            let b = m[i * n + i + 1];
            let r = a.hypot(b);
            if r == 0.0 {
                continue;
            }
            let (c, s) = (a / r, b / r);
            for p in i..rows {
                let x = m[p * n + i];
                let y = m[p * n + i + 1];
                m[p * n + i] = c * x + s * y;
                m[p * n + i + 1] = -s * x + c * y;
            }
        }
        let mut l = vec![0.0; rows * rows];
        for i in 0..rows {
            for j in 0..=i {
                l[i * rows + j] = m[i * n + j];
            }
        }
        self.l = l;
        self.dim = rows;
    }

    fn forward(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        for i in 0..self.dim {
            let mut v = x[i];
            for (k, xk) in x.iter().enumerate().take(i) {
                v -= self.at(i, k) * xk;
            }
            x[i] = v / self.at(i, i);
        }
        x
    }

    fn backward(&self, b: &mut [f64]) {
        for i in (0..self.dim).rev() {
            let mut v = b[i];
            for (k, bk) in b.iter().enumerate().skip(i + 1) {
                v -= self.at(k, i) * bk;
            }
            b[i] = v / self.at(i, i);
        }
    }

    /// Solve `G x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = self.forward(b);
        self.backward(&mut x);
        x
    }

    /// Dense `L` (for tests and diagnostics).
    pub fn lower(&self) -> DMatrix<f64> {
        DMatrix::from_fn(
            self.dim,
            self.dim,
            |i, j| if j <= i { self.at(i, j) } else { 0.0 },
        )
    }
}

/// Least-squares fit `argmin ‖x·cols − y‖₂` via Householder QR.
pub fn least_squares(
    cols: &DMatrix<f64>,
    y: &DVector<f64>,
    labels: &[usize],
) -> Result<DVector<f64>> {
    let k = cols.ncols();
    if k == 0 {
        return Ok(DVector::zeros(0));
    }
    if k > cols.nrows() {
        return Err(Error::RankDeficient(labels.to_vec()));
    }
    let qr = cols.clone().qr();
    let r = qr.r();
    let scale = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..k).any(|i| r[(i, i)].abs() <= 1e-10 * scale) || scale == 0.0 {
        return Err(Error::RankDeficient(labels.to_vec()));
    }
    let qty = qr.q().transpose() * y;
    let mut x = DVector::zeros(k);
    for i in (0..k).rev() {
        let mut v = qty[i];
        for j in i + 1..k {
            v -= r[(i, j)] * x[j];
        }
        x[i] = v / r[(i, i)];
    }
    Ok(x)
}

/// Thin SVD pieces of `A` with singular values below `PINV_RELATIVE_CUTOFF·σ_max` dropped.
#[derive(Debug, Clone)]
pub struct ThresholdedSvd {
    /// Left singular vectors of the kept values, `m × r`.
    pub u: DMatrix<f64>,
    pub sigma: DVector<f64>,
    /// Right singular vectors of the kept values, `n × r`.
    pub v: DMatrix<f64>,
}

impl ThresholdedSvd {
    pub fn new(a: &DMatrix<f64>) -> Self {
        let svd = a.clone().svd(true, true);
        let u = svd.u.expect("requested U");
        let vt = svd.v_t.expect("requested Vᵀ");
        let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| smax > 0.0 && svd.singular_values[i] > PINV_RELATIVE_CUTOFF * smax)
            .collect();
        let m = a.nrows();
        let n = a.ncols();
        let mut uk = DMatrix::zeros(m, keep.len());
        let mut vk = DMatrix::zeros(n, keep.len());
        let mut sk = DVector::zeros(keep.len());
        for (c, &i) in keep.iter().enumerate() {
            uk.set_column(c, &u.column(i));
            vk.set_column(c, &vt.row(i).transpose());
            sk[c] = svd.singular_values[i];
        }
        Self {
            u: uk,
            sigma: sk,
            v: vk,
        }
    }

    /// `F = U Σ† Uᵀ` (m × m).
    pub fn preconditioner(&self) -> DMatrix<f64> {
        let mut scaled = self.u.clone();
        for (c, s) in self.sigma.iter().enumerate() {
            scaled.column_mut(c).scale_mut(1.0 / s);
        }
        &scaled * self.u.transpose()
    }

    /// `A† z = V Σ† Uᵀ z`.
    pub fn pinv_apply(&self, z: &DVector<f64>) -> DVector<f64> {
        let mut coef = self.u.transpose() * z;
        for (c, s) in self.sigma.iter().enumerate() {
            coef[c] /= s;
        }
        &self.v * coef
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(n: usize, seed: u64) -> DMatrix<f64> {
        let mut state = seed;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let x = DMatrix::from_fn(n + 3, n, |_, _| next());
        x.transpose() * x
    }

    #[test]
    fn push_matches_full_factor() {
        let g = spd(5, 7);
        let mut inc = Cholesky::new();
        for j in 0..5 {
            let cross: Vec<f64> = (0..j).map(|i| g[(i, j)]).collect();
            assert!(inc.push(&cross, g[(j, j)]));
        }
        let full = Cholesky::factor(&g).unwrap();
        assert!((inc.lower() - full.lower()).norm() < 1e-12);
    }

    #[test]
    fn remove_matches_refactor() {
        let g = spd(6, 3);
        for k in 0..6 {
            let mut c = Cholesky::factor(&g).unwrap();
            c.remove(k);
            let keep: Vec<usize> = (0..6).filter(|&i| i != k).collect();
            let sub = DMatrix::from_fn(5, 5, |i, j| g[(keep[i], keep[j])]);
            let l = c.lower();
            assert!((&l * l.transpose() - sub).norm() < 1e-10, "k={k}");
        }
    }

    #[test]
    fn push_rejects_dependent_column() {
        let mut c = Cholesky::new();
        assert!(c.push(&[], 2.0));
        assert!(!c.push(&[2.0], 2.0));
        assert_eq!(c.dim(), 1);
    }

    #[test]
    fn solve_inverts() {
        let g = spd(4, 11);
        let c = Cholesky::factor(&g).unwrap();
        let b = [1.0, -2.0, 0.5, 3.0];
        let x = DVector::from_vec(c.solve(&b));
        assert!((&g * x - DVector::from_row_slice(&b)).norm() < 1e-10);
    }

    #[test]
    fn least_squares_flags_rank_deficiency() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        let y = DVector::from_vec(vec![1.0, 1.0, 1.0]);
        assert!(matches!(
            least_squares(&a, &y, &[0, 1]),
            Err(Error::RankDeficient(_))
        ));
    }
}
