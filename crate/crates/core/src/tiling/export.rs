use std::fmt::Write as _;

use serde::Serialize;

use super::{TileId, TilingGraph};
use crate::error::Result;
use crate::lasso_path::{Direction, Sign, Variant};

#[derive(Debug, Clone, Serialize)]
pub struct TileExport {
    pub id: TileId,
    pub support: Vec<usize>,
    pub signs: Vec<i8>,
    pub beta_minus: f64,
    pub beta_plus: f64,
    pub completed: bool,
    pub parent_edges: Vec<usize>,
    pub child_edges: Vec<usize>,
    /// `(β, α^-)` samples, left to right. Empty where the boundary is not computed.
    pub lower: Vec<[f64; 2]>,
    /// `(β, α^+)` samples, left to right. Empty for the root (α^+ = ∞).
    pub upper: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeExport {
    pub id: usize,
    pub from: TileId,
    pub to: TileId,
    pub beta_lo: f64,
    pub beta_hi: f64,
    pub index: usize,
    pub direction: Direction,
    pub gamma: Sign,
}

#[derive(Debug, Clone, Serialize)]
pub struct TilingExport {
    pub beta_min: f64,
    pub beta_max: f64,
    pub s_max: usize,
    pub variant: Variant,
    pub root: TileId,
    pub resolution: usize,
    pub tiles: Vec<TileExport>,
    pub edges: Vec<EdgeExport>,
}

impl TilingExport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 || hi <= lo {
        return vec![(lo * hi).sqrt()];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| match k {
            0 => lo,
            _ if k == n - 1 => hi,
            _ => (a + (b - a) * k as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

fn lower_polyline(g: &TilingGraph, id: TileId, resolution: usize) -> Result<Vec<[f64; 2]>> {
    let tile = &g.tiles[&id];
    let mut out = Vec::new();
    for seg in &tile.segments {
        for beta in log_grid(seg.lo, seg.hi, resolution) {
            let alpha = g.alpha_minus(id, beta)?;
            out.push([beta, alpha]);
        }
    }
    Ok(out)
}

fn upper_polyline(g: &TilingGraph, id: TileId, resolution: usize) -> Result<Vec<[f64; 2]>> {
    if id == g.root {
        return Ok(Vec::new());
    }
    let tile = &g.tiles[&id];
    let mut out = Vec::new();
    for e in &tile.parent_edges {
        let edge = &g.edges[e];
        let parent = &g.tiles[&edge.from];
        for beta in log_grid(edge.lo, edge.hi, resolution) {
            let alpha = g.eval_move(&parent.pattern, &edge.mv, beta)?.max(0.0);
            out.push([beta, alpha]);
        }
    }
    Ok(out)
}

/// Tiles, edges and boundary polylines with `resolution` samples per segment.
pub fn export_json(g: &TilingGraph, resolution: usize) -> Result<TilingExport> {
    let mut tiles = Vec::with_capacity(g.tiles.len());
    for t in g.tiles.values() {
        tiles.push(TileExport {
            id: t.id,
            support: t.support(),
            signs: t.pattern.iter().map(|(_, s)| i8::from(s)).collect(),
            beta_minus: t.beta_minus,
            beta_plus: t.beta_plus,
            completed: t.completed,
            parent_edges: t.parent_edges.clone(),
            child_edges: t.child_edges.clone(),
            lower: lower_polyline(g, t.id, resolution)?,
            upper: upper_polyline(g, t.id, resolution)?,
        });
    }
    let edges = g
        .edges
        .values()
        .map(|e| EdgeExport {
            id: e.id,
            from: e.from,
            to: e.to,
            beta_lo: e.lo,
            beta_hi: e.hi,
            index: e.mv.index,
            direction: e.mv.direction,
            gamma: e.mv.gamma,
        })
        .collect();
    Ok(TilingExport {
        beta_min: g.beta_range.0,
        beta_max: g.beta_range.1,
        s_max: g.s_max,
        variant: g.variant,
        root: g.root,
        resolution,
        tiles,
        edges,
    })
}

#[derive(Debug, Clone)]
pub struct SvgOptions {
    pub resolution: usize,
    pub width: f64,
    pub height: f64,
    /// Tiles with exactly this support get a heavy outline.
    pub highlight: Option<Vec<usize>>,
}

impl Default for SvgOptions {
    fn default() -> Self {
        Self {
            resolution: 64,
            width: 800.0,
            height: 600.0,
            highlight: None,
        }
    }
}

const PALETTE: [&str; 8] = [
    "#f7fbff", "#c6dbef", "#9ecae1", "#6baed6", "#4292c6", "#2171b5", "#08519c", "#08306b",
];

/// One filled polygon per tile on log-β / log-α axes.
pub fn export_svg(g: &TilingGraph, opts: &SvgOptions) -> Result<String> {
    let data = export_json(g, opts.resolution.max(2))?;
    let positive = data
        .tiles
        .iter()
        .flat_map(|t| t.lower.iter().chain(&t.upper))
        .map(|p| p[1])
        .filter(|a| *a > 0.0 && a.is_finite());
    let (mut amin, mut amax) = (f64::INFINITY, 0.0_f64);
    for a in positive {
        amin = amin.min(a);
        amax = amax.max(a);
    }
    if !amin.is_finite() {
        amin = 1e-3;
        amax = 1.0;
    }
    let (amin, amax) = (amin / 10.0, amax * 10.0);
    let (bmin, bmax) = g.beta_range;
    let (w, h) = (opts.width, opts.height);
    let x = |b: f64| (b.ln() - bmin.ln()) / (bmax.ln() - bmin.ln()) * w;
    let y = |a: f64| {
        let a = a.clamp(amin, amax);
        h - (a.ln() - amin.ln()) / (amax.ln() - amin.ln()) * h
    };
    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    )
    .unwrap();
    writeln!(
        svg,
        "<desc>log beta in [{bmin:e}, {bmax:e}], log alpha in [{amin:e}, {amax:e}]</desc>"
    )
    .unwrap();
    for t in &data.tiles {
        let mut pts: Vec<(f64, f64)> = Vec::new();
        if t.upper.is_empty() {
            pts.push((x(t.beta_minus), y(amax)));
            pts.push((x(t.beta_plus), y(amax)));
        } else {
            pts.extend(t.upper.iter().map(|p| (x(p[0]), y(p[1]))));
        }
        if t.lower.is_empty() {
            pts.push((x(t.beta_plus), y(amin)));
            pts.push((x(t.beta_minus), y(amin)));
        } else {
            pts.extend(t.lower.iter().rev().map(|p| (x(p[0]), y(p[1]))));
        }
        let fill = PALETTE[t.support.len().min(PALETTE.len() - 1)];
        let highlighted = opts.highlight.as_ref() == Some(&t.support);
        let (stroke, width) = if highlighted {
            ("#d62728", 3.0)
        } else {
            ("#333333", 0.5)
        };
        let points: Vec<String> = pts
            .iter()
            .map(|(px, py)| format!("{px:.2},{py:.2}"))
            .collect();
        writeln!(
            svg,
            r#"<polygon data-tile="{}" data-support="{:?}" points="{}" fill="{fill}" stroke="{stroke}" stroke-width="{width}"/>"#,
            t.id,
            t.support,
            points.join(" ")
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
