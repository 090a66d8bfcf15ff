//! The narrative guide, compiled straight from the `book/` sources so that
//! every code snippet in the book builds and runs under `cargo test --doc`.
//!
//! Read it with `mdbook serve book/` or chapter by chapter below.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/geometry.md")]
pub mod geometry {}

#[doc = include_str!("../../../book/src/capacity.md")]
pub mod capacity {}

#[doc = include_str!("../../../book/src/cutoff.md")]
pub mod cutoff {}

#[doc = include_str!("../../../book/src/martinelli.md")]
pub mod martinelli {}

#[doc = include_str!("../../../book/src/criterion.md")]
pub mod criterion {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
