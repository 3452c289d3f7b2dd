//! Exact truncated power-series tools for generalized uncertainty principles.

pub mod bounds;
pub mod commutators;
pub mod convert;
pub mod error;
pub mod models;
pub mod poly;
pub(crate) mod quad;
pub mod series;
pub mod text;
pub mod uncertainty;

pub use error::{Error, Result};
pub use poly::{ParamSymbol, PolyCoeff, Rational, SymbolTable};
pub use series::{Grading, MomentumSeries, NumericSeries};
