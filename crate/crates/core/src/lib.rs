//! Straggler-tolerant approximation of matrix inverses and left
//! pseudoinverses.
//!
//! A master splits the columns of `A⁻¹` into `k` blocks, hands them to `n`
//! workers through a balanced Reed-Solomon generator matrix, and recovers
//! the full estimate from any `k` responses. The matrix itself travels to
//! the workers as a masked Lagrange share polynomial. The pseudoinverse
//! pipeline adds polynomial-code multiplication rounds before and after
//! the coded inversion.
//!
//! Module map:
//!
//! - [`matrix`], [`solver`], [`estimate`], [`metrics`]: dense arithmetic,
//!   steepest descent / conjugate gradient least squares, single-server
//!   estimation and error metrics.
//! - [`field`], [`poly`]: evaluation points on the unit circle and
//!   polynomial helpers.
//! - [`share`]: Lagrange secret sharing of the input.
//! - [`brs`]: mask matrices and balanced Reed-Solomon generators.
//! - [`straggler`], [`scheme`]: the simulated coded-inversion protocol.
//! - [`cmm`], [`pinv`]: polynomial-code multiplication and the three-round
//!   pseudoinverse protocol.
//! - [`io`]: CSV formats.

pub mod brs;
pub mod cmm;
pub mod error;
pub mod estimate;
pub mod field;
pub mod io;
pub mod matrix;
pub mod metrics;
pub mod pinv;
pub mod poly;
pub mod random;
pub mod reference;
pub mod scheme;
pub mod share;
pub mod solver;
pub mod straggler;

pub use brs::{BrsGenerator, MaskMatrix, SchemeParams};
pub use error::{Error, Result};
pub use matrix::{ComplexMatrix, RealMatrix};
pub use solver::{Method, SolveReport, SolverConfig};
