//! The unmixing problem and its reduction to a one-parameter Lasso.
//!
//! For `β > 0` the joint minimiser of
//! `‖A(u+v) − y‖² + α‖u‖₁ + β‖v‖²` has `u` solving a Lasso with design
//! `B_β = (I + AAᵀ/β)^{-1/2} A` and datum `y_β = (I + AAᵀ/β)^{-1/2} y`, and
//! `v = (β + AᵀA)^{-1}(Aᵀy − AᵀAu)`.
//!
//! [`BetaTransform`] caches the eigendecomposition `AAᵀ = U diag(d) Uᵀ`
//! together with `Uᵀ A` and `Uᵀ y`. Since `U` is orthogonal, every inner
//! product the path algorithms need can be taken in the rotated frame, where
//! `Uᵀ B_β = diag(w_β) Uᵀ A` with `w_β = (1 + d/β)^{-1/2}`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Eigenvalues of `AAᵀ` below this fraction of the largest are set to zero.
pub const EIGEN_CLAMP: f64 = 1e-12;

/// Known generating components of a synthetic instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub u: DVector<f64>,
    pub v: DVector<f64>,
    pub delta: DVector<f64>,
}

impl GroundTruth {
    pub fn support(&self) -> Vec<usize> {
        support_of(&self.u)
    }
}

/// Indices of non-zero entries, ascending.
pub fn support_of(u: &DVector<f64>) -> Vec<usize> {
    u.iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, _)| i)
        .collect()
}

/// An unmixing instance `A(u + v) + δ = y`.
#[derive(Debug, Clone)]
pub struct Problem {
    a: DMatrix<f64>,
    y: DVector<f64>,
    truth: Option<GroundTruth>,
}

impl Problem {
    pub fn new(a: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(Error::Dimension(format!(
                "empty matrix {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if y.len() != a.nrows() {
            return Err(Error::Dimension(format!(
                "datum has length {}, matrix has {} rows",
                y.len(),
                a.nrows()
            )));
        }
        check_finite("matrix", &a)?;
        check_finite_vec("datum", &y)?;
        Ok(Self { a, y, truth: None })
    }

    /// Attach ground truth, checking `A(u+v) + δ = y` to 1e-12 relative.
    pub fn with_truth(mut self, truth: GroundTruth) -> Result<Self> {
        let n = self.a.ncols();
        if truth.u.len() != n || truth.v.len() != n || truth.delta.len() != self.a.nrows() {
            return Err(Error::Dimension(
                "ground truth lengths do not match A".into(),
            ));
        }
        let recon = &self.a * (&truth.u + &truth.v) + &truth.delta;
        let scale = self.y.norm().max(f64::MIN_POSITIVE);
        if (recon - &self.y).norm() > 1e-12 * scale.max(1.0) {
            return Err(Error::Precondition(
                "ground truth does not reproduce the datum".into(),
            ));
        }
        self.truth = Some(truth);
        Ok(self)
    }

    /// Attach only a known sparse component; `v` and `δ` are unknown.
    pub fn with_true_signal(mut self, u: DVector<f64>) -> Result<Self> {
        if u.len() != self.a.ncols() {
            return Err(Error::Dimension(
                "true signal length does not match A".into(),
            ));
        }
        let n = self.a.ncols();
        let delta = &self.y - &self.a * &u;
        self.truth = Some(GroundTruth {
            u,
            v: DVector::zeros(n),
            delta,
        });
        Ok(self)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn truth(&self) -> Option<&GroundTruth> {
        self.truth.as_ref()
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }
}

fn check_finite(what: &'static str, a: &DMatrix<f64>) -> Result<()> {
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            if !a[(i, j)].is_finite() {
                return Err(Error::NonFinite {
                    what,
                    row: i,
                    col: j,
                });
            }
        }
    }
    Ok(())
}

fn check_finite_vec(what: &'static str, y: &DVector<f64>) -> Result<()> {
    match y.iter().position(|v| !v.is_finite()) {
        Some(row) => Err(Error::NonFinite { what, row, col: 0 }),
        None => Ok(()),
    }
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveBeta(beta))
    }
}

/// A solution pair of the two-parameter functional at `(β, α)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizedSolution {
    pub beta: f64,
    pub alpha: f64,
    pub u: DVector<f64>,
    pub v: DVector<f64>,
}

/// A Lasso design in some orthonormal frame: `B = diag(w)·base`, datum `y`.
///
/// Plain designs (no weights) are used for the standard and preconditioned
/// Lasso; weighted ones come from [`BetaTransform::slice`].
#[derive(Debug, Clone)]
pub struct Design<'a> {
    base: &'a DMatrix<f64>,
    weights: Option<DVector<f64>>,
    datum: DVector<f64>,
}

impl<'a> Design<'a> {
    pub fn plain(b: &'a DMatrix<f64>, y: DVector<f64>) -> Self {
        assert_eq!(b.nrows(), y.len());
        Self {
            base: b,
            weights: None,
            datum: y,
        }
    }

    pub fn nrows(&self) -> usize {
        self.base.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.base.ncols()
    }

    pub fn datum(&self) -> &DVector<f64> {
        &self.datum
    }

    #[inline]
    fn weight(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[i])
    }

    /// Columns `idx` of `B`, in order.
    pub fn columns(&self, idx: &[usize]) -> DMatrix<f64> {
        let m = self.nrows();
        DMatrix::from_fn(m, idx.len(), |i, c| self.weight(i) * self.base[(i, idx[c])])
    }

    pub fn column(&self, j: usize) -> DVector<f64> {
        DVector::from_fn(self.nrows(), |i, _| self.weight(i) * self.base[(i, j)])
    }

    /// `B u`.
    pub fn mul(&self, u: &DVector<f64>) -> DVector<f64> {
        let mut out = self.base * u;
        if let Some(w) = &self.weights {
            out.component_mul_assign(w);
        }
        out
    }

    /// `Bᵀ z`.
    pub fn t_mul(&self, z: &DVector<f64>) -> DVector<f64> {
        match &self.weights {
            Some(w) => self.base.tr_mul(&z.component_mul(w)),
            None => self.base.tr_mul(z),
        }
    }

    /// `Bᵀ [z1 z2]` in one pass.
    pub fn t_mul2(&self, z1: &DVector<f64>, z2: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let m = self.nrows();
        let mut z = DMatrix::zeros(m, 2);
        for i in 0..m {
            let w = self.weight(i);
            z[(i, 0)] = w * z1[i];
            z[(i, 1)] = w * z2[i];
        }
        let out = self.base.tr_mul(&z);
        (out.column(0).into_owned(), out.column(1).into_owned())
    }

    /// `‖Bᵀ y‖∞`, the smallest α with a zero solution.
    pub fn alpha_max(&self) -> f64 {
        self.t_mul(&self.datum).amax()
    }
}

/// Cached spectral data of `AAᵀ` for evaluating `B_β`, `y_β` at any β.
#[derive(Debug, Clone)]
pub struct BetaTransform {
    a: DMatrix<f64>,
    y: DVector<f64>,
    eigvecs: DMatrix<f64>,
    eigvals: DVector<f64>,
    rotated_a: DMatrix<f64>,
    rotated_y: DVector<f64>,
}

/// Eigendecompose `AAᵀ` once; later `B_β` columns cost `O(m)` each in the rotated frame.
pub fn decompose(problem: &Problem) -> Result<BetaTransform> {
    BetaTransform::new(problem.a(), problem.y())
}

impl BetaTransform {
    pub fn new(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<Self> {
        check_finite("matrix", a)?;
        check_finite_vec("datum", y)?;
        if y.len() != a.nrows() {
            return Err(Error::Dimension(
                "datum length differs from row count".into(),
            ));
        }
        let gram = a * a.transpose();
        let eig = SymmetricEigen::new(gram);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let m = a.nrows();
        let mut eigvecs = DMatrix::zeros(m, m);
        let mut eigvals = DVector::zeros(m);
        for (c, &k) in order.iter().enumerate() {
            eigvecs.set_column(c, &eig.eigenvectors.column(k));
            eigvals[c] = eig.eigenvalues[k];
        }
        let dmax = eigvals.iter().cloned().fold(0.0, f64::max);
        for d in eigvals.iter_mut() {
            if *d < EIGEN_CLAMP * dmax {
                *d = 0.0;
            }
        }
        let rotated_a = eigvecs.tr_mul(a);
        let rotated_y = eigvecs.tr_mul(y);
        Ok(Self {
            a: a.clone(),
            y: y.clone(),
            eigvecs,
            eigvals,
            rotated_a,
            rotated_y,
        })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    /// Orthogonal eigenvectors `U` of `AAᵀ` (columns, eigenvalues descending).
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigvecs
    }

    /// Clamped eigenvalues `d` of `AAᵀ`, descending.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigvals
    }

    fn weights(&self, beta: f64) -> DVector<f64> {
        self.eigvals.map(|d| (1.0 + d / beta).powf(-0.5))
    }

    /// The Lasso design `(B_β, y_β)` expressed in the eigenvector frame.
    pub fn slice(&self, beta: f64) -> Result<Design<'_>> {
        check_beta(beta)?;
        let w = self.weights(beta);
        let datum = self.rotated_y.component_mul(&w);
        Ok(Design {
            base: &self.rotated_a,
            weights: Some(w),
            datum,
        })
    }

    /// `(I + AAᵀ/β)^{-1/2}` as a dense matrix.
    pub fn operator(&self, beta: f64) -> Result<DMatrix<f64>> {
        check_beta(beta)?;
        let w = self.weights(beta);
        let mut scaled = self.eigvecs.clone();
        for (c, wc) in w.iter().enumerate() {
            scaled.column_mut(c).scale_mut(*wc);
        }
        Ok(scaled * self.eigvecs.transpose())
    }

    /// Columns `idx` of `B_β` in the original frame.
    pub fn columns_b(&self, beta: f64, idx: &[usize]) -> Result<DMatrix<f64>> {
        if let Some(&bad) = idx.iter().find(|&&j| j >= self.n()) {
            return Err(Error::Dimension(format!("column {bad} out of range")));
        }
        let rotated = self.slice(beta)?.columns(idx);
        Ok(&self.eigvecs * rotated)
    }

    /// `y_β` in the original frame.
    pub fn transformed_y(&self, beta: f64) -> Result<DVector<f64>> {
        let s = self.slice(beta)?;
        Ok(&self.eigvecs * s.datum())
    }

    /// `v = (β + AᵀA)^{-1}(Aᵀy − AᵀAu)`, evaluated as `Aᵀ(β + AAᵀ)^{-1}(y − Au)`.
    pub fn recover_v(&self, beta: f64, u: &DVector<f64>) -> Result<DVector<f64>> {
        check_beta(beta)?;
        if u.len() != self.n() {
            return Err(Error::Dimension("u has wrong length".into()));
        }
        let mut r = &self.rotated_y - &self.rotated_a * u;
        for (ri, d) in r.iter_mut().zip(self.eigvals.iter()) {
            *ri /= beta + d;
        }
        Ok(self.rotated_a.tr_mul(&r))
    }

    /// Full solution pair from a sparse `u` at `(β, α)`.
    pub fn solution(&self, beta: f64, alpha: f64, u: DVector<f64>) -> Result<RegularizedSolution> {
        let v = self.recover_v(beta, &u)?;
        Ok(RegularizedSolution { beta, alpha, u, v })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(m: usize, n: usize, seed: u64) -> (DMatrix<f64>, DVector<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
        let y = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
        (a, y)
    }

    fn bt(a: &[f64], m: usize, n: usize, y: &[f64]) -> BetaTransform {
        BetaTransform::new(
            &DMatrix::from_row_slice(m, n, a),
            &DVector::from_row_slice(y),
        )
        .unwrap()
    }

    #[test]
    fn scalar_spectrum() {
        let t = bt(&[1.0], 1, 1, &[2.0]);
        assert!((t.eigenvectors()[(0, 0)].abs() - 1.0).abs() < 1e-15);
        assert!((t.eigenvalues()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identity_spectrum() {
        let t = bt(&[1.0, 0.0, 0.0, 1.0], 2, 2, &[1.0, 0.5]);
        assert!((t.eigenvalues()[0] - 1.0).abs() < 1e-14);
        assert!((t.eigenvalues()[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn reconstructs_gram() {
        let (a, y) = random(4, 6, 1);
        let t = BetaTransform::new(&a, &y).unwrap();
        let u = t.eigenvectors();
        let recon = u * DMatrix::from_diagonal(t.eigenvalues()) * u.transpose();
        let direct = &a * a.transpose();
        assert!((recon - &direct).norm() <= 1e-10 * direct.norm());
    }

    #[test]
    fn scalar_columns_and_datum() {
        let t = bt(&[1.0], 1, 1, &[2.0]);
        let b = t.columns_b(1.0, &[0]).unwrap();
        assert!((b[(0, 0)] - 0.5f64.sqrt()).abs() < 1e-15);
        let yb = t.transformed_y(1.0).unwrap();
        assert!((yb[0] - 2.0f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn identity_columns_at_beta_three() {
        let t = bt(&[1.0, 0.0, 0.0, 1.0], 2, 2, &[1.0, 0.5]);
        let b = t.columns_b(3.0, &[0, 1]).unwrap();
        let expected = DMatrix::identity(2, 2) * 0.75f64.sqrt();
        assert!((b - expected).norm() < 1e-14);
        let yb = t.transformed_y(1.0).unwrap();
        let h = 0.5f64.sqrt();
        assert!((yb[0] - h).abs() < 1e-14 && (yb[1] - 0.5 * h).abs() < 1e-14);
    }

    #[test]
    fn large_beta_limit_is_identity() {
        let (a, y) = random(3, 5, 2);
        let t = BetaTransform::new(&a, &y).unwrap();
        let b = t.columns_b(1e12, &[0, 1, 2, 3, 4]).unwrap();
        assert!((b - &a).norm() <= 1e-5 * a.norm());
        let yb = t.transformed_y(1e12).unwrap();
        assert!((yb - &y).norm() <= 1e-5 * y.norm());
    }

    #[test]
    fn rejects_bad_beta() {
        let t = bt(&[1.0], 1, 1, &[1.0]);
        assert!(matches!(
            t.columns_b(0.0, &[0]),
            Err(Error::NonPositiveBeta(_))
        ));
        assert!(matches!(
            t.transformed_y(-1.0),
            Err(Error::NonPositiveBeta(_))
        ));
        assert!(matches!(
            t.recover_v(f64::NAN, &DVector::zeros(1)),
            Err(Error::NonPositiveBeta(_))
        ));
    }

    #[test]
    fn non_finite_entry_reports_index() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, f64::NAN, 4.0]);
        let err = Problem::new(a, DVector::from_vec(vec![1.0, 1.0])).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 1, col: 0, .. }));
    }

    #[test]
    fn recover_v_scalar() {
        let t = bt(&[1.0], 1, 1, &[2.0]);
        let v = t.recover_v(1.0, &DVector::from_vec(vec![0.0])).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn recover_v_zero_for_exact_fit() {
        let (a, _) = random(3, 5, 4);
        let u = DVector::from_vec(vec![1.0, 0.0, -2.0, 0.0, 0.5]);
        let y = &a * &u;
        let t = BetaTransform::new(&a, &y).unwrap();
        assert!(t.recover_v(0.3, &u).unwrap().amax() < 1e-12);
    }

    #[test]
    fn recover_v_matches_dense_solve() {
        let (a, y) = random(4, 7, 5);
        let t = BetaTransform::new(&a, &y).unwrap();
        let u = DVector::from_fn(7, |i, _| if i % 3 == 0 { 0.7 } else { 0.0 });
        let beta = 0.37;
        let lhs = DMatrix::identity(7, 7) * beta + a.transpose() * &a;
        let rhs = a.transpose() * &y - a.transpose() * &a * &u;
        let oracle = lhs.lu().solve(&rhs).unwrap();
        let v = t.recover_v(beta, &u).unwrap();
        assert!((v - oracle).amax() < 1e-10);
    }

    #[test]
    fn operator_squares_to_inverse() {
        let (a, y) = random(4, 6, 6);
        let t = BetaTransform::new(&a, &y).unwrap();
        let beta = 0.8;
        let w = t.operator(beta).unwrap();
        let inv = (DMatrix::identity(4, 4) + &a * a.transpose() / beta)
            .try_inverse()
            .unwrap();
        let z = DVector::from_vec(vec![0.3, -1.0, 2.0, 0.1]);
        assert!((&w * (&w * &z) - &inv * &z).norm() <= 1e-10 * z.norm());
    }

    #[test]
    fn small_beta_rescaled_limit_is_preconditioned_matrix() {
        let (a, y) = random(3, 6, 8);
        let t = BetaTransform::new(&a, &y).unwrap();
        let f = crate::linalg::ThresholdedSvd::new(&a).preconditioner();
        let beta = 1e-10;
        let hat = t.columns_b(beta, &[0, 1, 2, 3, 4, 5]).unwrap() / beta.sqrt();
        assert!((hat - &f * &a).norm() <= 1e-6 * (&f * &a).norm());
    }

    #[test]
    fn stationarity_in_v() {
        let (a, y) = random(5, 9, 9);
        let t = BetaTransform::new(&a, &y).unwrap();
        let beta = 2.5;
        let u = DVector::from_fn(9, |i, _| if i < 2 { 1.0 + i as f64 } else { 0.0 });
        let v = t.recover_v(beta, &u).unwrap();
        let grad = a.transpose() * (&a * (&u + &v) - &y) + &v * beta;
        assert!(grad.amax() <= 1e-8 * (a.transpose() * &y).amax());
    }

    #[test]
    fn truth_must_reproduce_datum() {
        let (a, _) = random(3, 4, 10);
        let u = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        let v = DVector::from_element(4, 0.1);
        let delta = DVector::from_element(3, 0.01);
        let y = &a * (&u + &v) + &delta;
        let ok = Problem::new(a.clone(), y.clone())
            .unwrap()
            .with_truth(GroundTruth {
                u: u.clone(),
                v: v.clone(),
                delta: delta.clone(),
            });
        assert!(ok.is_ok());
        let bad = Problem::new(a, y + DVector::from_element(3, 1e-6))
            .unwrap()
            .with_truth(GroundTruth { u, v, delta });
        assert!(bad.is_err());
    }
}
