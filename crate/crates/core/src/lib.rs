//! Interval superposition arithmetic and set inversion.
//!
//! The crate provides outward-rounded interval arithmetic ([`interval`]),
//! factorable expressions as hash-consed DAGs ([`expr`]), interval
//! superposition models over uniform grids ([`ism`]), staircase pruning of
//! infeasible grid cells ([`staircase`]), two set-inversion engines
//! ([`setinv`]) and brute-force references used for validation ([`oracle`]).

pub mod error;
pub mod experiments;
pub mod expr;
pub mod interval;
pub mod ism;
pub mod oracle;
pub mod problem;
pub mod setinv;
pub mod staircase;

pub use error::{Error, Result};
pub use expr::{Expr, ExprBuilder, Node};
pub use interval::{AtomTag, Interval, IntervalBox};
pub use ism::{ism_of_expr, Grid, Ism, IsmVector};
