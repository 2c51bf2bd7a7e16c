//! Tiling of the (β, α) plane into regions of constant support and signs.
//!
//! A tile is a maximal β-connected region on which one `(I, σ)` is optimal.
//! For fixed β the α-set of a pattern is an interval, so a tile is fully
//! described by its β-range, the edges to the tiles directly above it and the
//! candidate functions that form its lower boundary.

mod build;
mod export;

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lasso_path::{expand, ActiveSystem, Move, SignPattern, Variant};
use crate::transform::BetaTransform;

pub use build::{
    build, build_with, find_children, merge_preliminary, subdivide, BuildOptions, ChildPiece,
    DEFAULT_MAX_TILES, MAX_CHILD_DEPTH,
};
pub use export::{export_json, export_svg, EdgeExport, SvgOptions, TileExport, TilingExport};

pub type TileId = usize;
pub type EdgeId = usize;

/// Relative gap under which two β-endpoints are considered the same point.
pub const ADJACENCY_TOLERANCE: f64 = 1e-9;

pub(crate) fn abuts(a: f64, b: f64) -> bool {
    (a - b).abs() <= ADJACENCY_TOLERANCE * a.abs().max(b.abs())
}

fn covers(lo: f64, hi: f64, beta: f64) -> bool {
    (lo <= beta || abuts(lo, beta)) && (beta <= hi || abuts(hi, beta))
}

/// Part of a tile's lower boundary: on `[lo, hi]`, `α^-` is the candidate
/// function of `mv` evaluated on the tile's own `(I, σ)`. `mv = None` means
/// the tile reaches down to α = 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundarySegment {
    pub lo: f64,
    pub hi: f64,
    pub mv: Option<Move>,
}

/// `from` lies directly above `to` on `[lo, hi]`; `to = from.apply(mv)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Edge {
    pub id: EdgeId,
    pub from: TileId,
    pub to: TileId,
    pub lo: f64,
    pub hi: f64,
    pub mv: Move,
}

#[derive(Debug, Clone, Serialize)]
pub struct Tile {
    pub id: TileId,
    pub pattern: SignPattern,
    pub beta_minus: f64,
    pub beta_plus: f64,
    /// Ordered by β.
    pub parent_edges: Vec<EdgeId>,
    /// Ordered by β.
    pub child_edges: Vec<EdgeId>,
    /// Ordered by β.
    pub segments: Vec<BoundarySegment>,
    /// β-intervals where the lower boundary is still unknown.
    pub uncovered: Vec<(f64, f64)>,
    pub completed: bool,
    #[serde(skip)]
    pub(crate) sched_alpha: f64,
}

impl Tile {
    pub fn support(&self) -> Vec<usize> {
        self.pattern.support()
    }

    pub fn size(&self) -> usize {
        self.pattern.len()
    }

    pub fn contains_beta(&self, beta: f64) -> bool {
        covers(self.beta_minus, self.beta_plus, beta)
    }
}

/// The tiling together with the transform needed to evaluate its boundaries.
#[derive(Debug, Clone)]
pub struct TilingGraph {
    bt: BetaTransform,
    tiles: BTreeMap<TileId, Tile>,
    edges: BTreeMap<EdgeId, Edge>,
    root: TileId,
    beta_range: (f64, f64),
    s_max: usize,
    variant: Variant,
}

impl TilingGraph {
    pub fn transform(&self) -> &BetaTransform {
        &self.bt
    }

    pub fn root(&self) -> TileId {
        self.root
    }

    pub fn beta_range(&self) -> (f64, f64) {
        self.beta_range
    }

    pub fn s_max(&self) -> usize {
        self.s_max
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn tiles(&self) -> impl Iterator<Item = &Tile> {
        self.tiles.values()
    }

    pub fn tile(&self, id: TileId) -> Option<&Tile> {
        self.tiles.get(&id)
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.values()
    }

    pub fn edge(&self, id: EdgeId) -> Option<&Edge> {
        self.edges.get(&id)
    }

    pub fn tile_count(&self) -> usize {
        self.tiles.len()
    }

    fn get(&self, id: TileId) -> Result<&Tile> {
        self.tiles
            .get(&id)
            .ok_or_else(|| Error::Precondition(format!("no tile {id}")))
    }

    /// Distinct `(I, σ)` over tiles with exactly `s` entries, sorted.
    pub fn patterns_of_size(&self, s: usize) -> Vec<SignPattern> {
        let set: BTreeSet<SignPattern> = self
            .tiles
            .values()
            .filter(|t| t.size() == s)
            .map(|t| t.pattern.clone())
            .collect();
        set.into_iter().collect()
    }

    /// Distinct supports per support size.
    pub fn supports_by_size(&self) -> BTreeMap<usize, BTreeSet<Vec<usize>>> {
        let mut out: BTreeMap<usize, BTreeSet<Vec<usize>>> = BTreeMap::new();
        for t in self.tiles.values() {
            out.entry(t.size()).or_default().insert(t.support());
        }
        out
    }

    fn eval_move(&self, pattern: &SignPattern, mv: &Move, beta: f64) -> Result<f64> {
        let design = self.bt.slice(beta)?;
        let sys = ActiveSystem::for_pattern(&design, pattern)?;
        Ok(sys.candidate(mv.index, Variant::Lasso).value)
    }

    /// Lower boundary `α^-_τ(β)`.
    ///
    /// Where the tile has not been processed (always the case at `|I| = s_max`)
    /// the boundary is evaluated directly as the largest candidate at β.
    pub fn alpha_minus(&self, id: TileId, beta: f64) -> Result<f64> {
        let tile = self.get(id)?;
        let seg = tile.segments.iter().find(|s| covers(s.lo, s.hi, beta));
        let design = self.bt.slice(beta)?;
        let sys = ActiveSystem::for_pattern(&design, &tile.pattern)?;
        let value = match seg {
            Some(BoundarySegment { mv: None, .. }) => 0.0,
            Some(BoundarySegment { mv: Some(mv), .. }) => {
                sys.candidate(mv.index, Variant::Lasso).value
            }
            None => sys
                .candidates(design.ncols(), self.variant)
                .iter()
                .map(|c| c.value)
                .fold(0.0, f64::max),
        };
        Ok(value.max(0.0))
    }

    /// Upper boundary `α^+_τ(β)`, from the parent edge covering β; `∞` for the root.
    pub fn alpha_plus(&self, id: TileId, beta: f64) -> Result<f64> {
        if id == self.root {
            return Ok(f64::INFINITY);
        }
        let tile = self.get(id)?;
        let edge = tile
            .parent_edges
            .iter()
            .map(|e| &self.edges[e])
            .find(|e| covers(e.lo, e.hi, beta))
            .ok_or_else(|| {
                Error::Precondition(format!("beta {beta:e} outside the range of tile {id}"))
            })?;
        let parent = self.get(edge.from)?;
        Ok(self.eval_move(&parent.pattern, &edge.mv, beta)?.max(0.0))
    }

    /// Child edge of `id` directly below it at β.
    fn child_at(&self, id: TileId, beta: f64) -> Option<&Edge> {
        self.tiles[&id]
            .child_edges
            .iter()
            .map(|e| &self.edges[e])
            .find(|e| covers(e.lo, e.hi, beta))
    }

    fn check_point(&self, beta: f64) -> Result<()> {
        let (lo, hi) = self.beta_range;
        if !covers(lo, hi, beta) {
            return Err(Error::Precondition(format!(
                "beta {beta:e} outside ({lo:e}, {hi:e})"
            )));
        }
        Ok(())
    }

    /// Tile containing `(β, α)` under the convention that each tile owns `[α^-, α^+)`.
    pub fn locate(&self, beta: f64, alpha: f64) -> Result<TileId> {
        self.check_point(beta)?;
        if !(alpha > 0.0) {
            return Err(Error::Precondition(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        let below = || Error::BelowComputedDepth { beta, alpha };
        let mut cur = self.root;
        for _ in 0..=self.tiles.len() {
            if alpha >= self.alpha_minus(cur, beta)? {
                return Ok(cur);
            }
            cur = self.child_at(cur, beta).ok_or_else(below)?.to;
        }
        Err(below())
    }

    /// Tiles met descending from α = ∞ at β, with each one's lower boundary.
    /// The last entry has lower boundary 0 unless the computed depth ends there.
    pub fn column(&self, beta: f64) -> Result<Vec<(TileId, f64)>> {
        self.check_point(beta)?;
        let mut out = Vec::new();
        let mut cur = self.root;
        for _ in 0..=self.tiles.len() {
            let lower = self.alpha_minus(cur, beta)?;
            out.push((cur, lower));
            match self.child_at(cur, beta) {
                Some(e) if lower > 0.0 => cur = e.to,
                _ => break,
            }
        }
        Ok(out)
    }

    /// Closed-form `u_{β,α}` on tile `id`, scattered to length n.
    pub fn solution(&self, id: TileId, beta: f64, alpha: f64) -> Result<DVector<f64>> {
        let tile = self.get(id)?;
        let design = self.bt.slice(beta)?;
        let sys = ActiveSystem::for_pattern(&design, &tile.pattern)?;
        let vals = DVector::from_vec(sys.solution(alpha));
        Ok(expand(&tile.pattern, &vals, self.bt.n()))
    }

    /// Next tile to process: smallest support, tiles with children first,
    /// then smallest β^-, then largest α^+ at β^- (standing in for α^- there).
    pub fn schedule_next(&self) -> Option<TileId> {
        self.tiles
            .values()
            .filter(|t| !t.completed && t.size() < self.s_max)
            .min_by(|a, b| {
                a.size()
                    .cmp(&b.size())
                    .then(a.child_edges.is_empty().cmp(&b.child_edges.is_empty()))
                    .then(a.beta_minus.total_cmp(&b.beta_minus))
                    .then(b.sched_alpha.total_cmp(&a.sched_alpha))
                    .then(a.id.cmp(&b.id))
            })
            .map(|t| t.id)
    }
}
