//! Pointwise conformal and projective geometry on truncated power series.
#![cfg_attr(not(test), no_std)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod catalog;
pub mod connection;
pub mod detour;
pub mod error;
pub mod jet;
pub mod metricdsl;
pub mod prolong;
pub mod riemann;
pub mod sampling;
pub mod tensor;
pub mod tractor;

/// Crate version, recorded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
pub use jet::{ElemFn, Jet, JetSpace};
pub use metricdsl::{parse_metric, Expr, MetricSpec, ParseError};
pub use riemann::{CurvaturePack, Geometry};
pub use tensor::{JetTensor, TensorValue, Variance};
