//! Weighted finite elements for the integral fractional Laplacian on an
//! interval, with basis functions `δ^s ψ_i` built from hat functions `ψ_i`.

// NaN must fail every bound check, hence the negated comparisons
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod assembly;
pub mod basis;
pub mod error;
pub mod error_norms;
pub mod experiments;
pub mod mesh;
pub mod quadrature;
pub mod special;
pub mod weight;

pub use basis::{DiscreteSolution, WfemSpace};
pub use error::{Result, WfemError};
pub use mesh::{Mesh1D, PairClass};
pub use special::FracParams;
pub use weight::{WeightFn, WeightKind};
