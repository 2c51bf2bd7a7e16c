use std::collections::{BTreeMap, HashMap};

use log::{debug, trace};

use super::{abuts, BoundarySegment, Edge, EdgeId, Tile, TileId, TilingGraph, ADJACENCY_TOLERANCE};
use crate::error::{Error, Result};
use crate::lasso_path::{
    factor_gram, ActiveSystem, Candidate, Move, SignPattern, Variant, TIE_TOLERANCE,
};
use crate::rootfind::{bisect, guarded_secant, BracketedProblem};
use crate::transform::BetaTransform;

pub const DEFAULT_MAX_TILES: usize = 100_000;

/// Divide-and-conquer depth beyond which child discovery gives up.
pub const MAX_CHILD_DEPTH: usize = 64;

/// Subintervals narrower than this in `ln β` are not split further.
const MIN_LOG_WIDTH: f64 = 1e-9;

/// Absolute tolerance in `ln β` for crossings and breakpoints.
const ROOT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct BuildOptions {
    pub beta_range: (f64, f64),
    pub s_max: usize,
    pub variant: Variant,
    pub max_tiles: usize,
}

impl BuildOptions {
    pub fn new(beta_range: (f64, f64), s_max: usize, variant: Variant) -> Self {
        Self {
            beta_range,
            s_max,
            variant,
            max_tiles: DEFAULT_MAX_TILES,
        }
    }
}

/// Full tiling of `beta_range × (0, ∞)` down to supports of size `s_max`.
pub fn build(
    bt: &BetaTransform,
    beta_range: (f64, f64),
    s_max: usize,
    variant: Variant,
) -> Result<TilingGraph> {
    build_with(bt, BuildOptions::new(beta_range, s_max, variant))
}

pub fn build_with(bt: &BetaTransform, opts: BuildOptions) -> Result<TilingGraph> {
    let (lo, hi) = opts.beta_range;
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::Precondition(format!(
            "beta range ({lo:e}, {hi:e}) must satisfy 0 < min < max < inf"
        )));
    }
    if opts.s_max > bt.m() || opts.s_max > bt.n() {
        return Err(Error::Precondition(format!(
            "s_max = {} exceeds min(m, n) = {}",
            opts.s_max,
            bt.m().min(bt.n())
        )));
    }
    let mut b = Builder::new(bt, opts);
    let mut steps = 0usize;
    while let Some(id) = b.g.schedule_next() {
        steps += 1;
        if steps > 4 * opts.max_tiles {
            return Err(Error::TileLimit(opts.max_tiles));
        }
        b.process(id).map_err(|e| e.in_tile(id))?;
    }
    debug!(
        "tiling done: {} tiles, {} edges, {} steps",
        b.g.tiles.len(),
        b.g.edges.len(),
        steps
    );
    Ok(b.g)
}

/// A maximal β-range on which one move defines the lower boundary; `mv = None` is the α = 0 floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChildPiece {
    pub lo: f64,
    pub hi: f64,
    pub mv: Option<Move>,
}

/// Coalesce neighbours with equal moves whose ranges abut.
pub fn merge_preliminary(pieces: Vec<ChildPiece>) -> Vec<ChildPiece> {
    let mut out: Vec<ChildPiece> = Vec::with_capacity(pieces.len());
    for p in pieces {
        match out.last_mut() {
            Some(last) if last.mv == p.mv && (abuts(last.hi, p.lo) || p.lo <= last.hi) => {
                last.hi = last.hi.max(p.hi);
            }
            _ => out.push(p),
        }
    }
    out
}

/// Positive roots `β` in the given intervals of `s_i(β) = ((B_IᵀB_I)⁻¹σ)_i`.
///
/// Where `s_i` changes sign the leave-candidate of `i` switches between valid
/// and invalid, so the candidate set is only constant between these points.
pub fn subdivide(
    bt: &BetaTransform,
    pattern: &SignPattern,
    intervals: &[(f64, f64)],
) -> Result<Vec<f64>> {
    if pattern.is_empty() {
        return Ok(Vec::new());
    }
    let shrink = |beta: f64| -> Result<Vec<f64>> {
        let design = bt.slice(beta)?;
        let order = pattern.support();
        let chol = factor_gram(&design, &order)?;
        Ok(chol.solve(&pattern.signs()))
    };
    let mut out = Vec::new();
    for &(lo, hi) in intervals {
        let sl = shrink(lo)?;
        let sh = shrink(hi)?;
        for k in 0..pattern.len() {
            if sl[k] == 0.0 || sh[k] == 0.0 || sl[k].signum() == sh[k].signum() {
                continue;
            }
            let t = bisect(BracketedProblem {
                f: |t: f64| Ok(shrink(t.exp())?[k]),
                lo: lo.ln(),
                hi: hi.ln(),
                tol_rel: ROOT_TOLERANCE,
            })?;
            let beta = t.exp();
            if beta > lo && beta < hi {
                out.push(beta);
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| abuts(*a, *b));
    Ok(out)
}

/// Largest and second-largest entries of `{α̃_j > 0} ∪ {floor = 0}` at one β.
#[derive(Debug, Clone, Copy)]
struct Probe {
    top: Option<Candidate>,
    top_value: f64,
    second: Option<Option<Candidate>>,
    second_value: f64,
}

impl Probe {
    fn key(&self, pattern: &SignPattern) -> Option<Move> {
        self.top.map(|c| c.as_move(pattern))
    }

    fn second_key(&self, pattern: &SignPattern) -> Option<Option<Move>> {
        self.second.map(|c| c.map(|c| c.as_move(pattern)))
    }

    fn tied(&self) -> bool {
        self.second.is_some()
            && self.top_value - self.second_value <= TIE_TOLERANCE * self.top_value
    }
}

struct Children<'a> {
    bt: &'a BetaTransform,
    pattern: &'a SignPattern,
    variant: Variant,
}

impl Children<'_> {
    fn probe(&self, beta: f64) -> Result<Probe> {
        let design = self.bt.slice(beta)?;
        let sys = ActiveSystem::for_pattern(&design, self.pattern)?;
        // Entries: (value, candidate); the floor has value 0 and no candidate.
        let mut top: (f64, Option<Candidate>) = (0.0, None);
        let mut second: Option<(f64, Option<Candidate>)> = None;
        for c in sys.candidates(design.ncols(), self.variant) {
            if !(c.value > 0.0) {
                continue;
            }
            // Strictly greater wins, so ties keep the smaller index.
            if c.value > top.0 {
                second = Some(top);
                top = (c.value, Some(c));
            } else if second.is_none_or(|s| c.value > s.0) {
                second = Some((c.value, Some(c)));
            }
        }
        Ok(Probe {
            top: top.1,
            top_value: top.0,
            second: second.map(|s| s.1),
            second_value: second.map_or(f64::NEG_INFINITY, |s| s.0),
        })
    }

    /// Probe just inside an endpoint, moving closer while the two leaders tie.
    fn probe_inside(&self, lo: f64, hi: f64, from_left: bool) -> Result<Probe> {
        let width = (hi / lo).ln();
        let mut eps = 1e-6 * width;
        let mut p = Probe {
            top: None,
            top_value: 0.0,
            second: None,
            second_value: f64::NEG_INFINITY,
        };
        for _ in 0..4 {
            let beta = if from_left {
                lo * eps.exp()
            } else {
                hi * (-eps).exp()
            };
            p = self.probe(beta)?;
            if !p.tied() {
                break;
            }
            eps *= 0.1;
        }
        Ok(p)
    }

    fn value_of(&self, c: Option<Candidate>, beta: f64) -> Result<f64> {
        match c {
            None => Ok(0.0),
            Some(c) => {
                let design = self.bt.slice(beta)?;
                let sys = ActiveSystem::for_pattern(&design, self.pattern)?;
                Ok(sys.candidate(c.index, Variant::Lasso).value)
            }
        }
    }

    fn crossing(
        &self,
        left: Option<Candidate>,
        right: Option<Candidate>,
        lo: f64,
        hi: f64,
    ) -> Result<f64> {
        let t = guarded_secant(
            |t: f64| {
                let beta = t.exp();
                Ok(self.value_of(left, beta)? - self.value_of(right, beta)?)
            },
            lo.ln(),
            hi.ln(),
            ROOT_TOLERANCE,
        )?;
        Ok(t.exp())
    }

    fn split(&self, lo: f64, hi: f64, depth: usize, out: &mut Vec<ChildPiece>) -> Result<()> {
        if depth > MAX_CHILD_DEPTH {
            return Err(Error::RecursionDepth {
                tile: usize::MAX,
                lo,
                hi,
                depth,
            });
        }
        let width = (hi / lo).ln();
        let pl = self.probe_inside(lo, hi, true)?;
        let pr = self.probe_inside(lo, hi, false)?;
        let kl = pl.key(self.pattern);
        let kr = pr.key(self.pattern);
        let mid = (lo * hi).sqrt();
        if kl == kr {
            if width <= MIN_LOG_WIDTH || self.probe(mid)?.key(self.pattern) == kl {
                out.push(ChildPiece { lo, hi, mv: kl });
                return Ok(());
            }
        } else if width <= MIN_LOG_WIDTH {
            out.push(ChildPiece {
                lo,
                hi: mid,
                mv: kl,
            });
            out.push(ChildPiece {
                lo: mid,
                hi,
                mv: kr,
            });
            return Ok(());
        } else if pl.second_key(self.pattern) == Some(kr) && pr.second_key(self.pattern) == Some(kl)
        {
            // The leaders swap places: their difference changes sign inside.
            match self.crossing(pl.top, pr.top, lo, hi) {
                Ok(x) if x > lo && x < hi => {
                    trace!("crossing at {x:e} in ({lo:e}, {hi:e})");
                    self.split(lo, x, depth + 1, out)?;
                    return self.split(x, hi, depth + 1, out);
                }
                Ok(_) => {}
                Err(e) => trace!("crossing search failed, bisecting: {e}"),
            }
        }
        self.split(lo, mid, depth + 1, out)?;
        self.split(mid, hi, depth + 1, out)
    }
}

/// Left-to-right lower-boundary pieces of the tile `pattern` on `(lo, hi)`.
pub fn find_children(
    bt: &BetaTransform,
    pattern: &SignPattern,
    interval: (f64, f64),
    variant: Variant,
) -> Result<Vec<ChildPiece>> {
    let (lo, hi) = interval;
    if !(lo > 0.0 && lo < hi) {
        return Err(Error::Precondition(format!(
            "bad interval ({lo:e}, {hi:e})"
        )));
    }
    let ctx = Children {
        bt,
        pattern,
        variant,
    };
    let mut out = Vec::new();
    ctx.split(lo, hi, 0, &mut out)?;
    Ok(merge_preliminary(out))
}

fn normalize_intervals(mut v: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
    for (lo, hi) in v {
        match out.last_mut() {
            Some(last) if lo <= last.1 || abuts(lo, last.1) => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out.retain(|(lo, hi)| hi - lo > ADJACENCY_TOLERANCE * hi.abs());
    out
}

struct Builder<'a> {
    g: TilingGraph,
    index: HashMap<SignPattern, Vec<TileId>>,
    next_tile: TileId,
    next_edge: EdgeId,
    max_tiles: usize,
    bt: &'a BetaTransform,
}

impl<'a> Builder<'a> {
    fn new(bt: &'a BetaTransform, opts: BuildOptions) -> Self {
        let (lo, hi) = opts.beta_range;
        let root = Tile {
            id: 0,
            pattern: SignPattern::empty(),
            beta_minus: lo,
            beta_plus: hi,
            parent_edges: Vec::new(),
            child_edges: Vec::new(),
            segments: Vec::new(),
            uncovered: vec![(lo, hi)],
            completed: false,
            sched_alpha: f64::INFINITY,
        };
        let mut tiles = BTreeMap::new();
        tiles.insert(0, root);
        let mut index = HashMap::new();
        index.insert(SignPattern::empty(), vec![0]);
        Self {
            g: TilingGraph {
                bt: bt.clone(),
                tiles,
                edges: BTreeMap::new(),
                root: 0,
                beta_range: opts.beta_range,
                s_max: opts.s_max,
                variant: opts.variant,
            },
            index,
            next_tile: 1,
            next_edge: 0,
            max_tiles: opts.max_tiles,
            bt,
        }
    }

    fn tile(&mut self, id: TileId) -> &mut Tile {
        self.g.tiles.get_mut(&id).expect("live tile")
    }

    fn process(&mut self, id: TileId) -> Result<()> {
        let (pattern, uncovered) = {
            let t = &self.g.tiles[&id];
            (t.pattern.clone(), t.uncovered.clone())
        };
        trace!("processing tile {id} {pattern} on {uncovered:?}");
        let variant = self.g.variant;
        let mut pieces = Vec::new();
        for &(lo, hi) in &uncovered {
            let mut cuts = vec![lo];
            if variant == Variant::Lasso {
                cuts.extend(subdivide(self.bt, &pattern, &[(lo, hi)])?);
            }
            cuts.push(hi);
            for w in cuts.windows(2) {
                if w[1] > w[0] {
                    let found = find_children(self.bt, &pattern, (w[0], w[1]), variant).map_err(
                        |e| match e {
                            Error::RecursionDepth { lo, hi, depth, .. } => Error::RecursionDepth {
                                tile: id,
                                lo,
                                hi,
                                depth,
                            },
                            other => other,
                        },
                    )?;
                    pieces.extend(found);
                }
            }
        }
        let pieces = merge_preliminary(pieces);
        {
            let t = self.tile(id);
            t.uncovered.clear();
            t.completed = true;
        }
        let mut fresh = Vec::new();
        for p in &pieces {
            self.tile(id).segments.push(BoundarySegment {
                lo: p.lo,
                hi: p.hi,
                mv: p.mv,
            });
            if let Some(mv) = p.mv {
                fresh.push(self.attach(id, &pattern, p.lo, p.hi, mv)?);
            }
        }
        self.normalize_segments(id);
        for child in fresh {
            if self.g.tiles.contains_key(&child) {
                self.merge_across(child)?;
            }
        }
        Ok(())
    }

    fn attach(
        &mut self,
        parent: TileId,
        pattern: &SignPattern,
        lo: f64,
        hi: f64,
        mv: Move,
    ) -> Result<TileId> {
        if self.next_tile >= self.max_tiles {
            return Err(Error::TileLimit(self.max_tiles));
        }
        let id = self.next_tile;
        self.next_tile += 1;
        let eid = self.next_edge;
        self.next_edge += 1;
        let child_pattern = pattern.apply(&mv);
        self.g.edges.insert(
            eid,
            Edge {
                id: eid,
                from: parent,
                to: id,
                lo,
                hi,
                mv,
            },
        );
        self.tile(parent).child_edges.push(eid);
        self.sort_edges(parent);
        let sched_alpha = self.g.eval_move(pattern, &mv, lo).unwrap_or(f64::INFINITY);
        self.index
            .entry(child_pattern.clone())
            .or_default()
            .push(id);
        self.g.tiles.insert(
            id,
            Tile {
                id,
                pattern: child_pattern,
                beta_minus: lo,
                beta_plus: hi,
                parent_edges: vec![eid],
                child_edges: Vec::new(),
                segments: Vec::new(),
                uncovered: vec![(lo, hi)],
                completed: false,
                sched_alpha,
            },
        );
        Ok(id)
    }

    /// Merge `id` with every other tile of the same `(I, σ)` whose β-range touches it.
    fn merge_across(&mut self, mut id: TileId) -> Result<TileId> {
        loop {
            let t = &self.g.tiles[&id];
            let partner = self.index[&t.pattern].iter().copied().find(|&o| {
                if o == id {
                    return false;
                }
                let other = &self.g.tiles[&o];
                abuts(t.beta_plus, other.beta_minus)
                    || abuts(other.beta_plus, t.beta_minus)
                    || (other.beta_minus < t.beta_plus && t.beta_minus < other.beta_plus)
            });
            let Some(o) = partner else {
                return Ok(id);
            };
            let (keep, gone) = (id.min(o), id.max(o));
            self.merge_tiles(keep, gone);
            id = keep;
        }
    }

    fn merge_tiles(&mut self, keep: TileId, gone: TileId) {
        trace!("merging tile {gone} into {keep}");
        let g = self.g.tiles.remove(&gone).expect("live tile");
        if let Some(list) = self.index.get_mut(&g.pattern) {
            list.retain(|&t| t != gone);
        }
        for e in &g.parent_edges {
            self.g.edges.get_mut(e).expect("edge").to = keep;
        }
        for e in &g.child_edges {
            self.g.edges.get_mut(e).expect("edge").from = keep;
        }
        let k = self.tile(keep);
        if g.beta_minus < k.beta_minus {
            k.sched_alpha = g.sched_alpha;
        }
        k.beta_minus = k.beta_minus.min(g.beta_minus);
        k.beta_plus = k.beta_plus.max(g.beta_plus);
        k.parent_edges.extend(g.parent_edges.iter().copied());
        k.child_edges.extend(g.child_edges.iter().copied());
        k.segments.extend(g.segments);
        let mut unc = std::mem::take(&mut k.uncovered);
        unc.extend(g.uncovered);
        k.uncovered = normalize_intervals(unc);
        k.completed = k.uncovered.is_empty();
        self.sort_edges(keep);
        self.normalize_segments(keep);
        let parents: Vec<TileId> = self.g.tiles[&keep]
            .parent_edges
            .iter()
            .map(|e| self.g.edges[e].from)
            .collect();
        for p in parents {
            self.coalesce_edges(p);
            self.normalize_segments(p);
        }
        self.coalesce_edges(keep);
    }

    fn sort_edges(&mut self, id: TileId) {
        let edges = &self.g.edges;
        let t = self.g.tiles.get_mut(&id).expect("live tile");
        t.child_edges
            .sort_by(|a, b| edges[a].lo.total_cmp(&edges[b].lo));
        t.parent_edges
            .sort_by(|a, b| edges[a].lo.total_cmp(&edges[b].lo));
    }

    /// Join abutting child edges of `id` that lead to the same tile by the same move.
    fn coalesce_edges(&mut self, id: TileId) {
        self.sort_edges(id);
        let list = self.g.tiles[&id].child_edges.clone();
        let mut kept: Vec<EdgeId> = Vec::with_capacity(list.len());
        for e in list {
            if let Some(&last) = kept.last() {
                let (a, b) = (&self.g.edges[&last], &self.g.edges[&e]);
                if a.to == b.to && a.mv == b.mv && (abuts(a.hi, b.lo) || b.lo <= a.hi) {
                    let hi = a.hi.max(b.hi);
                    let to = b.to;
                    self.g.edges.get_mut(&last).expect("edge").hi = hi;
                    self.g.edges.remove(&e);
                    self.tile(to).parent_edges.retain(|&x| x != e);
                    continue;
                }
            }
            kept.push(e);
        }
        self.tile(id).child_edges = kept;
    }

    fn normalize_segments(&mut self, id: TileId) {
        let t = self.tile(id);
        t.segments.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut out: Vec<BoundarySegment> = Vec::with_capacity(t.segments.len());
        for s in t.segments.drain(..) {
            match out.last_mut() {
                Some(last) if last.mv == s.mv && (abuts(last.hi, s.lo) || s.lo <= last.hi) => {
                    last.hi = last.hi.max(s.hi);
                }
                _ => out.push(s),
            }
        }
        t.segments = out;
    }
}
