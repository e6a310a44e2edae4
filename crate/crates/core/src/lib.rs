//! Blind recovery of a periodic source from many parallel noisy LTI channels.
//!
//! Each channel window is projected onto an orthonormal quadratic basis over one
//! period of the source. The resulting `(a, b)` points form an elliptical disk whose
//! angle tracks channel phase and whose radius tracks how strongly the channel passes
//! the fundamental. Averaging the channels that lie on one oriented half of the disk,
//! outside a radius of exclusion, recovers the source up to scale.
//!
//! The crate is `no_std` with `alloc`. IO and the command-line surface live in the
//! companion `selagg` crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod basis;
pub mod channel;
pub mod disk;
pub mod error;
pub mod metrics;
pub mod pipeline;
pub mod proxy;
pub mod signal;
pub mod spectrum;
pub mod video;

pub use basis::{CoeffPoint, QuadraticBasis};
pub use channel::{ChannelBank, ChannelMatrix, ChannelSpec, NoiseKind, PhaseResponse};
pub use disk::{CoeffDisk, EstimateResult, MembershipSet, RadiusSweep};
pub use error::{Error, Result};
pub use pipeline::PipelineConfig;
pub use signal::{GeneratingSignal, Harmonic, Preset, SampledSignal};
