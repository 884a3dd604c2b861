//! Numerical laboratory core for intrinsic square functions on uniform box grids.
//!
//! Everything here works on scalar or vector fields sampled on a uniform grid
//! over a box `[-L, L]^n` (`n` is 1 or 2), with functions extended by zero
//! outside the box. Suprema over continuum families (test kernels, balls,
//! radii) are replaced by maxima over finite, named, reproducible families;
//! all quantities carry enough diagnostics to judge the discretization.

// negated comparisons like `!(x > 0.0)` are deliberate: they treat NaN as a
// validation failure
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conditions;
pub mod error;
pub mod grid;
pub mod kernels;
pub mod norms;
pub mod operators;
pub mod util;
pub mod weights;

pub use error::{Error, Result};
pub use grid::{Ball, Grid, GridFunction, Point, VecGridFunction};
pub use kernels::{KernelDictionary, TestKernel};
pub use norms::{BallFamily, PhiFunction};
pub use operators::ScaleGrid;
pub use weights::Weight;
