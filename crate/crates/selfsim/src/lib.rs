//! File formats, parallel drivers and the `selfsim` command line around
//! [`selfsim_core`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod check;
pub mod cli;
pub mod config;
pub mod error;
pub mod format;
pub mod parallel;
pub mod presets;
pub mod run;

pub use selfsim_core as core;
