//! Decentralized Chow-Liu learning of tree-structured Gaussian graphical
//! models whose sensor columns reach a fusion center through noisy channels.
//!
//! The crate is organized bottom-up:
//!
//! * [`tree`] and [`model`]: random weighted trees, their correlation
//!   matrices and approximately bounded Gaussian samples.
//! * [`channel`]: Gaussian, erasure and binary symmetric channels, plus sign
//!   quantization.
//! * [`estimators`]: correlation, mutual-information and agreement
//!   estimators used by the fusion center.
//! * [`chow_liu`]: maximum weight spanning tree over estimated scores.
//! * [`bounds`]: closed-form upper bounds on incorrect recovery and their
//!   sample-complexity inversions.
//! * [`sim`]: sensors, channels and fusion center wired together.
//! * [`harness`]: seeded Monte Carlo sweeps and experiment presets.
//!
//! With the default `parallel` feature, Monte Carlo trials and pairwise
//! estimation run on rayon; without it every path is sequential. Results are
//! identical either way.

pub mod bounds;
pub mod channel;
pub mod chow_liu;
pub mod config;
pub mod error;
pub mod estimators;
pub mod exec;
pub mod harness;
pub mod model;
pub mod rng;
pub mod sim;
pub mod tree;

pub use error::{Error, Result};
