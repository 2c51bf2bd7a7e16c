#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` deliberately rejects NaN.

pub mod bench;
pub mod decoders;
pub mod error;
pub mod io;
pub mod lasso_path;
pub mod linalg;
pub mod rootfind;
pub mod selection;
pub mod tiling;
pub mod transform;

pub use error::{Error, Result};
