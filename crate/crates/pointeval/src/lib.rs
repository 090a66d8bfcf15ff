//! Numerical criteria for bounded point evaluations in several complex
//! variables.
//!
//! A point x in the closure of a bounded domain U in C^d is a *bounded point
//! evaluation* for the p-norm analytic functions on U when f -> f(x) is a
//! bounded functional. This crate decides a sufficient condition numerically:
//! it estimates Sobolev q-capacities of the dyadic shell complements
//! `A_n(x) \ U` by variational minimization and sums the weighted series
//!
//! ```text
//!   sum_n 2^{n (2d-1) q} cap_q(A_n(x) \ U),       q = p / (p - 1)
//! ```
//!
//! whose finiteness guarantees that x is a bounded point evaluation. The
//! crate also ships the machinery that justifies the criterion and makes it
//! checkable: a Bochner-Martinelli quadrature engine (the reproducing
//! integral behind the bound), the radial cutoff functions whose products
//! localize test functions to shells, and closed-form condenser oracles that
//! pin the capacity solver down in acceptance tests.
//!
//! # Module map
//!
//! - [`geometry`]: implicit CSG sets, dyadic shells, conservative inner
//!   rasterization.
//! - [`capacity`]: the discrete q-Dirichlet energy, the projected-descent
//!   minimizer, ladder estimates, and the radial oracle.
//! - [`cutoff`]: shell bump functions, products, envelopes, and the Sobolev
//!   quotient.
//! - [`martinelli`]: the kernel, pullback quadrature over hypersurfaces, and
//!   the vanishing-divergence residual.
//! - [`criterion`]: the weighted series, verdicts, and the evaluation-norm
//!   probe.
//! - [`cli`]: batch front end with JSON reports, CSV tables, and the
//!   capacity cache.
//!
//! The `book/` directory of the repository walks through the mathematics
//! chapter by chapter; its code snippets compile and run as doc-tests of the
//! [`guide`] module.

pub mod cache;
pub mod capacity;
pub mod cli;
pub mod criterion;
pub mod cutoff;
pub mod geometry;
pub mod grid;
pub mod martinelli;

mod error;
mod util;

pub mod guide;

pub use error::{Error, Result};
