//! Edge-of-chaos analysis and pruning-at-initialization toolkit.
//!
//! The crate is organized around five layers:
//! - [`gaussfield`]: Gaussian moment engine, correlation map, EOC solver,
//!   folded-normal quantiles.
//! - [`meanfield`]: depth-wise signal propagation, theoretical saliency
//!   profiles, critical-sparsity bounds, residual conditioning theory.
//! - [`nnet`]: a small f64 tensor/network engine (dense, 1-D conv, residual
//!   variants) with softmax cross-entropy training and checkpointing.
//! - [`pruning`]: saliency scoring, global top-k masks, critical sparsity,
//!   row rescaling, EOC subnetwork sampling.
//! - [`data`], [`figures`], [`config`], [`runner`], [`cli`]: experiment
//!   plumbing behind the `eocprune` binary.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod figures;
pub mod gaussfield;
pub mod meanfield;
pub mod nnet;
pub mod pruning;
pub mod rng;
pub mod runner;

pub use error::{Error, Result};
pub use gaussfield::{ActivationKind, EdgePoint};
