// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conformal;
pub mod curve;
pub mod effective;
pub mod error;
pub mod fiber;
pub mod hardy;
pub mod numerics;
pub mod potential;

pub use error::{Error, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

// The guide's snippets run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/overview.md")]
    pub struct Overview;
    #[doc = include_str!("../../../book/src/geometry.md")]
    pub struct Geometry;
    #[doc = include_str!("../../../book/src/fibers.md")]
    pub struct Fibers;
    #[doc = include_str!("../../../book/src/hardy.md")]
    pub struct Hardy;
    #[doc = include_str!("../../../book/src/conformal.md")]
    pub struct Conformal;
    #[doc = include_str!("../../../book/src/effective.md")]
    pub struct Effective;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}
