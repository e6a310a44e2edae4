//! File formats, run configuration and experiment drivers around `selagg-core`.
//!
//! Everything here is deterministic for a fixed configuration: experiment cases run
//! in parallel but are collected in input order, so the written CSVs do not depend
//! on the number of threads.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod io;
pub mod manifest;

pub use error::{Error, Result};
pub use selagg_core as core;
