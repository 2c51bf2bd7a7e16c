use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("beta must be positive and finite, got {0}")]
    NonPositiveBeta(f64),

    #[error("non-finite entry in {what} at ({row}, {col})")]
    NonFinite {
        what: &'static str,
        row: usize,
        col: usize,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("Gram matrix on support {support:?} is singular (condition estimate {condition:.3e})")]
    SingularGram { support: Vec<usize>, condition: f64 },

    #[error("path at beta={beta:e} exceeded {cap} knots")]
    PathIterationCap { beta: f64, cap: usize },

    #[error("tiling exceeded {0} tiles")]
    TileLimit(usize),

    #[error("root finding on [{lo:e}, {hi:e}] failed: {reason}")]
    RootFinding { lo: f64, hi: f64, reason: String },

    #[error("child search on tile {tile} over ({lo:e}, {hi:e}) exceeded recursion depth {depth}")]
    RecursionDepth {
        tile: usize,
        lo: f64,
        hi: f64,
        depth: usize,
    },

    #[error("tile {tile}: {source}")]
    Tile {
        tile: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("point (beta={beta:e}, alpha={alpha:e}) lies below the computed depth")]
    BelowComputedDepth { beta: f64, alpha: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("rank deficient columns {0:?}")]
    RankDeficient(Vec<usize>),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn in_tile(self, tile: usize) -> Error {
        match self {
            e @ (Error::Tile { .. } | Error::TileLimit(_)) => e,
            e => Error::Tile {
                tile,
                source: Box::new(e),
            },
        }
    }

    /// True for failures caused by reading or writing files.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Csv(_) | Error::Parse(_))
    }
}
