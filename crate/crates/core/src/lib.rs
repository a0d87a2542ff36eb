#![no_std]
//! Synthetic multimodal data, anisotropic branched transport and graph
//! stochastic control for whole-brain flow analysis.

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod config;
pub mod dynamics;
pub mod eeg;
pub mod error;
pub mod fmri;
pub mod fusion;
pub mod geometry;
pub mod pipeline;
pub mod rng;
pub mod tradeoff;
pub mod transport;

pub use error::{Error, Result};
pub use nalgebra;
