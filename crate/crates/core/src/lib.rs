//! Self-similar harmonic chains: the affine-sum machinery, the self-similar
//! Laplacian, its dispersion relation, the continuum limit, time evolution
//! and fractal-dimension estimates.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]
// `!(x > 0.0)` is how NaN gets rejected along with the rest
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod affine;
pub mod continuum;
pub mod dimension;
pub mod dispersion;
pub mod error;
pub mod fit;
pub mod fourier;
pub mod laplacian;
pub mod params;
pub mod quad;
pub mod series;
pub mod simulate;

pub use error::{Error, Result};
pub use params::ChainParams;
