// `!(x > y)` is used on purpose so NaN fails every check; indexed loops
// mirror the tensor formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod band;
pub mod curvature;
pub mod deform;
pub mod error;
pub mod flow;
pub mod grid;
pub mod jet;
pub mod line;
pub mod metric;
pub mod oracle;
pub mod pipeline;
pub mod report;
pub mod stencil;
pub mod verdict;

pub use error::{GeomError, Result};
