//! Single-parameter Lasso path at fixed β.
//!
//! On a support `I` with signs `σ` the solution is affine in α,
//! `u_I(α) = a − α·b` with `a = G⁻¹B_Iᵀy` and `b = G⁻¹σ`, `G = B_IᵀB_I`.
//! Knots are where an inactive correlation reaches ±α or an active
//! coefficient reaches zero.

use std::fmt;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, MAX_GRAM_CONDITION};
use crate::transform::{BetaTransform, Design};

/// Relative tolerance under which two candidate values count as tied.
pub const TIE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub fn of(x: f64) -> Sign {
        if x < 0.0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        match s {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

impl TryFrom<i8> for Sign {
    type Error = String;
    fn try_from(v: i8) -> std::result::Result<Sign, String> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err(format!("sign must be +1 or -1, got {other}")),
        }
    }
}

/// A support set together with the sign of each member, ordered by index.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SignPattern {
    entries: Vec<(usize, Sign)>,
}

impl SignPattern {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, Sign)>) -> Self {
        let mut entries: Vec<(usize, Sign)> = pairs.into_iter().collect();
        entries.sort_by_key(|e| e.0);
        entries.dedup_by_key(|e| e.0);
        Self { entries }
    }

    /// Support and signs of the non-zero entries of `u`.
    pub fn of_vector(u: &DVector<f64>) -> Self {
        Self {
            entries: u
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i, Sign::of(*v)))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn support(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.0).collect()
    }

    pub fn signs(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.1.value()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Sign)> + '_ {
        self.entries.iter().copied()
    }

    pub fn position(&self, j: usize) -> Option<usize> {
        self.entries.binary_search_by_key(&j, |e| e.0).ok()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.position(j).is_some()
    }

    pub fn sign(&self, j: usize) -> Option<Sign> {
        self.position(j).map(|p| self.entries[p].1)
    }

    pub fn with(&self, j: usize, s: Sign) -> Self {
        let mut out = self.clone();
        match out.entries.binary_search_by_key(&j, |e| e.0) {
            Ok(p) => out.entries[p].1 = s,
            Err(p) => out.entries.insert(p, (j, s)),
        }
        out
    }

    pub fn without(&self, j: usize) -> Self {
        let mut out = self.clone();
        if let Some(p) = out.position(j) {
            out.entries.remove(p);
        }
        out
    }

    /// Apply a single path move.
    pub fn apply(&self, mv: &Move) -> Self {
        match mv.direction {
            Direction::Entered => self.with(mv.index, mv.gamma),
            Direction::Left => self.without(mv.index),
        }
    }
}

impl fmt::Display for SignPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, (i, s)) in self.entries.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            let c = if *s == Sign::Plus { '+' } else { '-' };
            write!(f, "{c}{i}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Indices may leave the support as α decreases.
    Lasso,
    /// Indices never leave once they entered.
    Lars,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Entered,
    Left,
}

/// One index joining or leaving the support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Move {
    pub index: usize,
    pub direction: Direction,
    /// Sign taken by an entering index; the old sign for a leaving one.
    pub gamma: Sign,
}

/// Value of α at which index `index` would change the support, with the sign it enters with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub index: usize,
    /// `-∞` when the index never becomes active below the current support.
    pub value: f64,
    pub gamma: Sign,
    pub leaving: bool,
}

impl Candidate {
    pub fn as_move(&self, pattern: &SignPattern) -> Move {
        if self.leaving {
            Move {
                index: self.index,
                direction: Direction::Left,
                gamma: pattern.sign(self.index).unwrap_or(Sign::Plus),
            }
        } else {
            Move {
                index: self.index,
                direction: Direction::Entered,
                gamma: self.gamma,
            }
        }
    }
}

/// Solved normal equations on a support, plus the correlations every candidate needs.
#[derive(Debug, Clone)]
pub(crate) struct ActiveSystem {
    /// Support in factorization order.
    pub order: Vec<usize>,
    pub signs: Vec<f64>,
    /// `G⁻¹ B_Iᵀ y`
    pub ols: Vec<f64>,
    /// `G⁻¹ σ`
    pub shrink: Vec<f64>,
    /// `B_jᵀ (y − B_I G⁻¹B_Iᵀy)` for every column j.
    pub residual_corr: DVector<f64>,
    /// `B_jᵀ B_I G⁻¹σ` for every column j.
    pub shrink_corr: DVector<f64>,
}

pub(crate) fn factor_gram(design: &Design<'_>, order: &[usize]) -> Result<Cholesky> {
    let bi = design.columns(order);
    let g = bi.tr_mul(&bi);
    match Cholesky::factor(&g) {
        Some(c) if c.condition_estimate() <= MAX_GRAM_CONDITION => Ok(c),
        Some(c) => Err(Error::SingularGram {
            support: order.to_vec(),
            condition: c.condition_estimate(),
        }),
        None => Err(Error::SingularGram {
            support: order.to_vec(),
            condition: f64::INFINITY,
        }),
    }
}

impl ActiveSystem {
    pub fn new(design: &Design<'_>, order: &[usize], signs: &[f64], chol: &Cholesky) -> Self {
        let bi = design.columns(order);
        let c: Vec<f64> = bi.tr_mul(design.datum()).iter().copied().collect();
        let ols = chol.solve(&c);
        let shrink = chol.solve(signs);
        let fit = &bi * DVector::from_column_slice(&ols);
        let z1 = design.datum() - fit;
        let z2 = &bi * DVector::from_column_slice(&shrink);
        let (residual_corr, shrink_corr) = design.t_mul2(&z1, &z2);
        Self {
            order: order.to_vec(),
            signs: signs.to_vec(),
            ols,
            shrink,
            residual_corr,
            shrink_corr,
        }
    }

    pub fn for_pattern(design: &Design<'_>, pattern: &SignPattern) -> Result<Self> {
        let order = pattern.support();
        let chol = factor_gram(design, &order)?;
        Ok(Self::new(design, &order, &pattern.signs(), &chol))
    }

    /// Candidate value for index `j`.
    ///
    /// Inactive `j`: the correlation `c_j(α) = r + α q` meets `γα` at
    /// `α = r/(γ − q)`. Only the root where `α − |c_j(α)|` is increasing
    /// is a point below which `j` must enter; that fixes `γ = sign(r)`
    /// when `|q| < 1` and `γ = −sign(q)` otherwise.
    ///
    /// Active `j`: the coefficient `a_j − α b_j` reaches zero at `a_j/b_j`,
    /// which lies below the support's α-range only when `σ_j b_j < 0`.
    pub fn candidate(&self, j: usize, variant: Variant) -> Candidate {
        if let Some(k) = self.order.iter().position(|&i| i == j) {
            let value = if variant == Variant::Lars || self.signs[k] * self.shrink[k] >= 0.0 {
                f64::NEG_INFINITY
            } else {
                finite_or_neg_inf(self.ols[k] / self.shrink[k])
            };
            return Candidate {
                index: j,
                value,
                gamma: Sign::of(self.signs[k]),
                leaving: true,
            };
        }
        let r = self.residual_corr[j];
        let q = self.shrink_corr[j];
        let gamma = if q.abs() < 1.0 {
            Sign::of(r)
        } else if q > 0.0 {
            Sign::Minus
        } else {
            Sign::Plus
        };
        let den = gamma.value() - q;
        let value = if den == 0.0 {
            f64::NEG_INFINITY
        } else {
            finite_or_neg_inf(r / den)
        };
        Candidate {
            index: j,
            value,
            gamma,
            leaving: false,
        }
    }

    pub fn candidates(&self, n: usize, variant: Variant) -> Vec<Candidate> {
        (0..n).map(|j| self.candidate(j, variant)).collect()
    }

    /// `u_I(α)` in factorization order.
    pub fn solution(&self, alpha: f64) -> Vec<f64> {
        self.ols
            .iter()
            .zip(&self.shrink)
            .map(|(a, b)| a - alpha * b)
            .collect()
    }
}

fn finite_or_neg_inf(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::NEG_INFINITY
    }
}

/// Largest positive candidate with every index tied to it within [`TIE_TOLERANCE`].
#[derive(Debug, Clone)]
pub struct KnotStep {
    pub alpha: f64,
    /// Tied maximisers, ascending by index.
    pub movers: Vec<Candidate>,
}

pub(crate) fn best_step(cands: &[Candidate], alpha_current: f64) -> Option<KnotStep> {
    let top = cands
        .iter()
        .map(|c| c.value)
        .fold(f64::NEG_INFINITY, f64::max);
    if !(top > 0.0) {
        return None;
    }
    let alpha = top.min(alpha_current);
    let movers: Vec<Candidate> = cands
        .iter()
        .filter(|c| c.value >= top * (1.0 - TIE_TOLERANCE))
        .copied()
        .collect();
    Some(KnotStep { alpha, movers })
}

/// `α̃_j` for support pattern `pattern` at `β`, with the sign `γ` an entering `j` takes.
pub fn candidate_alpha(
    bt: &BetaTransform,
    beta: f64,
    pattern: &SignPattern,
    j: usize,
) -> Result<(f64, Sign)> {
    let design = bt.slice(beta)?;
    if j >= design.ncols() {
        return Err(Error::Dimension(format!("index {j} out of range")));
    }
    let sys = ActiveSystem::for_pattern(&design, pattern)?;
    let c = sys.candidate(j, Variant::Lasso);
    Ok((c.value, c.gamma))
}

/// The next knot below `alpha_current`, or `None` when the support stays fixed down to α = 0.
pub fn next_knot(
    bt: &BetaTransform,
    beta: f64,
    pattern: &SignPattern,
    alpha_current: f64,
    variant: Variant,
) -> Result<Option<KnotStep>> {
    let design = bt.slice(beta)?;
    let sys = ActiveSystem::for_pattern(&design, pattern)?;
    let cands = sys.candidates(design.ncols(), variant);
    Ok(best_step(&cands, alpha_current))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathKnot {
    pub alpha: f64,
    /// Support and signs just below `alpha`.
    pub pattern: SignPattern,
    pub index: usize,
    pub direction: Direction,
}

/// Several indices reached the same knot; only the smallest moved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TieEvent {
    pub alpha: f64,
    pub indices: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LassoPath {
    pub knots: Vec<PathKnot>,
    pub ties: Vec<TieEvent>,
}

impl LassoPath {
    /// The empty support followed by the support after each knot.
    pub fn patterns(&self) -> Vec<SignPattern> {
        std::iter::once(SignPattern::empty())
            .chain(self.knots.iter().map(|k| k.pattern.clone()))
            .collect()
    }

    /// Distinct supports (ignoring signs) in order of first appearance.
    pub fn supports(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = Vec::new();
        for p in self.patterns() {
            let s = p.support();
            if !out.contains(&s) {
                out.push(s);
            }
        }
        out
    }

    /// Support pattern in effect at `alpha` (knots are closed from above).
    pub fn pattern_at(&self, alpha: f64) -> SignPattern {
        let mut current = SignPattern::empty();
        for k in &self.knots {
            if alpha < k.alpha {
                current = k.pattern.clone();
            } else {
                break;
            }
        }
        current
    }
}

/// Knots from α = ∞ down until the support would exceed `s_max`.
pub fn path(bt: &BetaTransform, beta: f64, s_max: usize, variant: Variant) -> Result<LassoPath> {
    let design = bt.slice(beta)?;
    path_on(&design, s_max, variant).map_err(|e| match e {
        Error::PathIterationCap { cap, .. } => Error::PathIterationCap { beta, cap },
        other => other,
    })
}

/// Path on an explicit design; `PathIterationCap` errors report β = ∞.
pub fn path_on(design: &Design<'_>, s_max: usize, variant: Variant) -> Result<LassoPath> {
    if s_max > design.nrows() {
        return Err(Error::Precondition(format!(
            "s_max = {s_max} exceeds m = {}",
            design.nrows()
        )));
    }
    let mut out = LassoPath::default();
    if s_max == 0 {
        return Ok(out);
    }
    let n = design.ncols();
    let cap = 50 * s_max;
    let mut pattern = SignPattern::empty();
    let mut order: Vec<usize> = Vec::new();
    let mut chol = Cholesky::new();
    let mut alpha = f64::INFINITY;
    for _ in 0..cap {
        let signs: Vec<f64> = order
            .iter()
            .map(|&i| pattern.sign(i).expect("ordered index in pattern").value())
            .collect();
        let sys = ActiveSystem::new(design, &order, &signs, &chol);
        let cands = sys.candidates(n, variant);
        let Some(step) = best_step(&cands, alpha) else {
            return Ok(out);
        };
        if step.movers.len() > 1 {
            out.ties.push(TieEvent {
                alpha: step.alpha,
                indices: step.movers.iter().map(|c| c.index).collect(),
            });
        }
        let chosen = step.movers[0];
        let mv = chosen.as_move(&pattern);
        match mv.direction {
            Direction::Entered => {
                if pattern.len() + 1 > s_max {
                    return Ok(out);
                }
                let bj = design.column(mv.index);
                let bi = design.columns(&order);
                let cross: Vec<f64> = bi.tr_mul(&bj).iter().copied().collect();
                if !chol.push(&cross, bj.norm_squared()) {
                    let mut support = order.clone();
                    support.push(mv.index);
                    return Err(Error::SingularGram {
                        support,
                        condition: f64::INFINITY,
                    });
                }
                if chol.condition_estimate() > MAX_GRAM_CONDITION {
                    let mut support = order.clone();
                    support.push(mv.index);
                    return Err(Error::SingularGram {
                        support,
                        condition: chol.condition_estimate(),
                    });
                }
                order.push(mv.index);
            }
            Direction::Left => {
                let k = order
                    .iter()
                    .position(|&i| i == mv.index)
                    .expect("active index");
                chol.remove(k);
                order.remove(k);
            }
        }
        pattern = pattern.apply(&mv);
        out.knots.push(PathKnot {
            alpha: step.alpha,
            pattern: pattern.clone(),
            index: mv.index,
            direction: mv.direction,
        });
        alpha = step.alpha;
    }
    Err(Error::PathIterationCap {
        beta: f64::INFINITY,
        cap,
    })
}

/// `u_I = (B_IᵀB_I)⁻¹(B_Iᵀy_β − ασ)`, ordered like `pattern.support()`.
pub fn solve_on_support(
    bt: &BetaTransform,
    beta: f64,
    pattern: &SignPattern,
    alpha: f64,
) -> Result<DVector<f64>> {
    let design = bt.slice(beta)?;
    let sys = ActiveSystem::for_pattern(&design, pattern)?;
    Ok(DVector::from_vec(sys.solution(alpha)))
}

/// Scatter an on-support solution into a length-`n` vector.
pub fn expand(pattern: &SignPattern, values: &DVector<f64>, n: usize) -> DVector<f64> {
    let mut u = DVector::zeros(n);
    for (k, i) in pattern.support().into_iter().enumerate() {
        u[i] = values[k];
    }
    u
}

/// Largest violation of the Lasso optimality conditions at `(β, α)`.
pub fn kkt_check(bt: &BetaTransform, beta: f64, alpha: f64, u: &DVector<f64>) -> Result<f64> {
    let design = bt.slice(beta)?;
    Ok(kkt_violation(&design, alpha, u))
}

pub fn kkt_violation(design: &Design<'_>, alpha: f64, u: &DVector<f64>) -> f64 {
    let corr = design.t_mul(&(design.datum() - design.mul(u)));
    corr.iter()
        .zip(u.iter())
        .map(|(c, ui)| {
            if *ui != 0.0 {
                (c - alpha * ui.signum()).abs()
            } else {
                (c.abs() - alpha).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn bt(a: &[f64], m: usize, n: usize, y: &[f64]) -> BetaTransform {
        BetaTransform::new(
            &DMatrix::from_row_slice(m, n, a),
            &DVector::from_row_slice(y),
        )
        .unwrap()
    }

    fn identity() -> BetaTransform {
        bt(&[1.0, 0.0, 0.0, 1.0], 2, 2, &[1.0, 0.5])
    }

    #[test]
    fn scalar_candidate_from_empty_support() {
        let t = bt(&[1.0], 1, 1, &[1.0]);
        let (v, g) = candidate_alpha(&t, 1.0, &SignPattern::empty(), 0).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        assert_eq!(g, Sign::Plus);
    }

    #[test]
    fn identity_candidates_from_empty_support() {
        let t = identity();
        let (v0, _) = candidate_alpha(&t, 1.0, &SignPattern::empty(), 0).unwrap();
        let (v1, _) = candidate_alpha(&t, 1.0, &SignPattern::empty(), 1).unwrap();
        assert!((v0 - 0.5).abs() < 1e-15);
        assert!((v1 - 0.25).abs() < 1e-15);
    }

    #[test]
    fn next_knot_sequence_on_identity() {
        let t = identity();
        let s = next_knot(
            &t,
            1.0,
            &SignPattern::empty(),
            f64::INFINITY,
            Variant::Lasso,
        )
        .unwrap()
        .unwrap();
        assert!((s.alpha - 0.5).abs() < 1e-15);
        assert_eq!(s.movers.len(), 1);
        assert_eq!(s.movers[0].index, 0);
        assert_eq!(s.movers[0].gamma, Sign::Plus);
        let p = SignPattern::from_pairs([(0, Sign::Plus)]);
        let s = next_knot(&t, 1.0, &p, 0.5, Variant::Lasso)
            .unwrap()
            .unwrap();
        assert!((s.alpha - 0.25).abs() < 1e-15);
        assert_eq!(s.movers[0].index, 1);
    }

    #[test]
    fn duplicated_columns_tie() {
        let t = bt(&[1.0, 1.0, 0.0, 0.0, 0.0, 1.0], 2, 3, &[1.0, 0.3]);
        let s = next_knot(
            &t,
            1.0,
            &SignPattern::empty(),
            f64::INFINITY,
            Variant::Lasso,
        )
        .unwrap()
        .unwrap();
        assert_eq!(
            s.movers.iter().map(|c| c.index).collect::<Vec<_>>(),
            vec![0, 1]
        );
        let p = path(&t, 1.0, 2, Variant::Lasso).unwrap();
        assert_eq!(p.ties.len(), 1);
        assert_eq!(p.ties[0].indices, vec![0, 1]);
        assert_eq!(p.knots[0].index, 0);
    }

    #[test]
    fn identity_path() {
        let p = path(&identity(), 1.0, 2, Variant::Lasso).unwrap();
        assert_eq!(p.knots.len(), 2);
        assert!((p.knots[0].alpha - 0.5).abs() < 1e-15);
        assert!((p.knots[1].alpha - 0.25).abs() < 1e-15);
        assert_eq!(p.knots[1].pattern.support(), vec![0, 1]);
        assert_eq!(p.supports(), vec![vec![], vec![0], vec![0, 1]]);
    }

    #[test]
    fn zero_sparsity_path_is_empty() {
        let p = path(&identity(), 1.0, 0, Variant::Lasso).unwrap();
        assert!(p.knots.is_empty());
    }

    #[test]
    fn s_max_above_m_is_rejected() {
        assert!(matches!(
            path(&identity(), 1.0, 3, Variant::Lasso),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn solve_on_support_scalar() {
        let t = bt(&[1.0], 1, 1, &[1.0]);
        let p = SignPattern::from_pairs([(0, Sign::Plus)]);
        let u = solve_on_support(&t, 1.0, &p, 0.25).unwrap();
        assert!((u[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_alpha_is_least_squares() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.0, 0.1, 1.0, 0.3, 0.0, 0.4, 1.0]);
        let y = DVector::from_vec(vec![1.0, -0.5, 0.25]);
        let t = BetaTransform::new(&a, &y).unwrap();
        let p = SignPattern::from_pairs([(0, Sign::Plus), (2, Sign::Minus)]);
        let u = solve_on_support(&t, 2.0, &p, 0.0).unwrap();
        let b = t.columns_b(2.0, &[0, 2]).unwrap();
        let yb = t.transformed_y(2.0).unwrap();
        let oracle = (b.transpose() * &b)
            .lu()
            .solve(&(b.transpose() * yb))
            .unwrap();
        assert!((u - oracle).amax() < 1e-12);
    }

    #[test]
    fn kkt_root_and_perturbation() {
        let t = identity();
        let zero = DVector::zeros(2);
        assert_eq!(kkt_check(&t, 1.0, 0.6, &zero).unwrap(), 0.0);
        let p = SignPattern::from_pairs([(0, Sign::Plus)]);
        let u = expand(&p, &solve_on_support(&t, 1.0, &p, 0.4).unwrap(), 2);
        assert!(kkt_check(&t, 1.0, 0.4, &u).unwrap() < 1e-12);
        let mut bumped = u.clone();
        bumped[0] += 0.1;
        assert!(kkt_check(&t, 1.0, 0.4, &bumped).unwrap() > 0.0);
    }

    #[test]
    fn pattern_ops() {
        let p = SignPattern::empty()
            .with(3, Sign::Minus)
            .with(1, Sign::Plus);
        assert_eq!(p.support(), vec![1, 3]);
        assert_eq!(p.signs(), vec![1.0, -1.0]);
        assert_eq!(p.without(3).support(), vec![1]);
        assert_eq!(p.to_string(), "{+1,-3}");
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<SignPattern>(&json).unwrap(), p);
    }
}
