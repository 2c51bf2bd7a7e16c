//! Picking one support from a tiling.

use std::collections::BTreeSet;

use log::warn;
use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lasso_path::SignPattern;
use crate::linalg::{least_squares, ThresholdedSvd};
use crate::tiling::TilingGraph;
use crate::transform::Problem;

/// Noise estimates with `‖v̂‖∞` at or below this fraction of `‖y‖∞` count as zero.
pub const ZERO_NOISE_RELATIVE: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct SupportCandidate {
    pub support: Vec<usize>,
    pub u_hat: Vec<f64>,
    pub v_hat: Vec<f64>,
    pub score: f64,
}

/// `|A Δ B|` for ascending index lists.
pub fn symmetric_difference(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut common) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    a.len() + b.len() - 2 * common
}

/// Distinct `(I, σ)` over all tiles with `|I| = s`.
pub fn enumerate_supports(graph: &TilingGraph, s: usize) -> Result<Vec<SignPattern>> {
    if s > graph.s_max() {
        return Err(Error::Precondition(format!(
            "support size {s} exceeds the tiling depth {}",
            graph.s_max()
        )));
    }
    Ok(graph.patterns_of_size(s))
}

/// Distinct supports (signs dropped) over all tiles with `|I| = s`, ascending.
pub fn supports_of_size(graph: &TilingGraph, s: usize) -> Result<Vec<Vec<usize>>> {
    let set: BTreeSet<Vec<usize>> = enumerate_supports(graph, s)?
        .iter()
        .map(|p| p.support())
        .collect();
    Ok(set.into_iter().collect())
}

/// Size-`s` supports, or those of the largest size present when none reach `s`; returns the size used.
pub fn largest_supports(graph: &TilingGraph, s: usize) -> Result<(usize, Vec<Vec<usize>>)> {
    for size in (0..=s.min(graph.s_max())).rev() {
        let c = supports_of_size(graph, size)?;
        if !c.is_empty() {
            return Ok((size, c));
        }
    }
    Err(Error::Precondition("tiling has no supports".into()))
}

/// Least-squares coefficient and noise estimates, reusing one pseudo-inverse of `A`.
pub struct Regressor<'a> {
    problem: &'a Problem,
    pinv: ThresholdedSvd,
}

impl<'a> Regressor<'a> {
    pub fn new(problem: &'a Problem) -> Self {
        Self {
            problem,
            pinv: ThresholdedSvd::new(problem.a()),
        }
    }

    /// `û = argmin ‖A_I u − y‖`, `v̂ = A†(y − A_I û)`.
    pub fn regress(&self, support: &[usize]) -> Result<(DVector<f64>, DVector<f64>)> {
        if let Some(&bad) = support.iter().find(|&&j| j >= self.problem.n()) {
            return Err(Error::Dimension(format!("index {bad} out of range")));
        }
        let cols = self.problem.a().select_columns(support);
        let u = least_squares(&cols, self.problem.y(), support)?;
        let residual = self.problem.y() - cols * &u;
        Ok((u, self.pinv.pinv_apply(&residual)))
    }
}

pub fn regress(problem: &Problem, support: &[usize]) -> Result<(DVector<f64>, DVector<f64>)> {
    Regressor::new(problem).regress(support)
}

/// A rule scoring a regressed candidate; larger is better.
pub trait Scorer {
    fn score(&self, problem: &Problem, u_hat: &DVector<f64>, v_hat: &DVector<f64>) -> f64;
}

/// `min_i |û_i| / ‖v̂‖∞`, `+∞` when the noise estimate vanishes.
#[derive(Debug, Clone, Copy, Default)]
pub struct SignalToNoise;

impl Scorer for SignalToNoise {
    fn score(&self, problem: &Problem, u_hat: &DVector<f64>, v_hat: &DVector<f64>) -> f64 {
        let noise = v_hat.amax();
        if noise <= ZERO_NOISE_RELATIVE * problem.y().amax() {
            return f64::INFINITY;
        }
        let signal = u_hat.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
        if u_hat.is_empty() {
            0.0
        } else {
            signal / noise
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Ranking {
    pub chosen: Vec<usize>,
    /// Regressed candidates, in input order; failed regressions are absent.
    pub candidates: Vec<SupportCandidate>,
}

/// Pick the candidate with the largest [`SignalToNoise`] score.
pub fn rank_supports(problem: &Problem, candidates: &[Vec<usize>], s: usize) -> Result<Ranking> {
    rank_supports_with(problem, candidates, s, &SignalToNoise)
}

/// As [`rank_supports`] with a custom scorer. Ties go to the lexicographically smallest support.
pub fn rank_supports_with(
    problem: &Problem,
    candidates: &[Vec<usize>],
    s: usize,
    scorer: &dyn Scorer,
) -> Result<Ranking> {
    if candidates.is_empty() {
        return Err(Error::Precondition("no candidate supports".into()));
    }
    if let Some(bad) = candidates.iter().find(|c| c.len() != s) {
        return Err(Error::Precondition(format!(
            "candidate {bad:?} does not have size {s}"
        )));
    }
    let reg = Regressor::new(problem);
    let mut scored = Vec::with_capacity(candidates.len());
    for support in candidates {
        match reg.regress(support) {
            Ok((u, v)) => {
                let score = scorer.score(problem, &u, &v);
                scored.push(SupportCandidate {
                    support: support.clone(),
                    u_hat: u.iter().copied().collect(),
                    v_hat: v.iter().copied().collect(),
                    score,
                });
            }
            Err(e) => warn!("skipping candidate {support:?}: {e}"),
        }
    }
    let best = scored
        .iter()
        .max_by(|a, b| a.score.total_cmp(&b.score).then(b.support.cmp(&a.support)))
        .ok_or_else(|| Error::Precondition("every candidate failed to regress".into()))?;
    Ok(Ranking {
        chosen: best.support.clone(),
        candidates: scored,
    })
}

/// Candidate nearest to `truth` in symmetric difference; ties go lexicographic.
pub fn oracle_closest(candidates: &[Vec<usize>], truth: &[usize]) -> Result<Vec<usize>> {
    candidates
        .iter()
        .min_by(|a, b| {
            symmetric_difference(a, truth)
                .cmp(&symmetric_difference(b, truth))
                .then(a.cmp(b))
        })
        .cloned()
        .ok_or_else(|| Error::Precondition("no candidate supports".into()))
}
