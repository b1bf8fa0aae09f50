//! Certified computation of KMS weights for generalized gauge actions on
//! graph algebras.
//!
//! The crate works on finite graphs and on graphs built from a finite base
//! plus a periodic ray template. Edge potentials are exact linear
//! combinations over rationally independent symbols; all numeric work uses
//! outward-rounded interval arithmetic at a caller-chosen precision.

#![allow(clippy::needless_range_loop)]

pub mod classify;
pub mod error;
pub mod exits;
pub mod geodesics;
pub mod graph;
pub mod harmonic;
pub mod interval;
pub mod series;
pub mod symbolic;

pub use error::{Error, Result};
pub use graph::{
    builtin, builtin_names, builtin_with, truncate, validate, Coefficient, Edge, EdgeId, GraphKind,
    GraphSpec, PathPrefix, Potential, SpecDocument, Truncation, ValidationReport, Vertex,
    ZeroCycleScan,
};
pub use interval::{Interval, DEFAULT_PRECISION};
pub use symbolic::{Basis, SymbolicReal};
