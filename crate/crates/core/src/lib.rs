//! Channel-optimized vector quantization (COVQ) of compressed-sensing
//! measurements sent over a discrete memoryless channel.
//!
//! A `K`-sparse Gaussian source `x ∈ R^M` is observed through `y = Φx + w`,
//! reconstructed with orthogonal matching pursuit, quantized to one of
//! `L = 2^B` indexes, sent over a noisy channel and decoded by codebook
//! lookup. The trainer alternates the channel-aware encoder rule with the
//! channel-aware centroid rule to minimise the end-to-end MSE.
//!
//! Modules, bottom-up:
//! - [`numerics`]: dense matrices, mat-vec and Householder least squares.
//! - [`sparse_source`]: sparse sources, sensing matrices and measurements.
//! - [`reconstruction`]: OMP recovery of sparse estimates.
//! - [`channel`]: DMC / BSC transition matrices and index transmission.
//! - [`covq`]: the encoder rule, the codebook rule and the training loop.
//! - [`baselines`]: COVQ-Q and CUVQ-E2E.
//! - [`evaluation`]: Monte Carlo NMSE and the three experiment sweeps.
//! - [`persist`], [`plot`], [`config`]: file formats used by the CLI.

pub mod baselines;
pub mod channel;
pub mod cli;
pub mod config;
pub mod covq;
pub mod error;
pub mod evaluation;
pub mod numerics;
pub mod parallel;
pub mod persist;
pub mod plot;
pub mod reconstruction;
pub mod rng;
pub mod sparse_source;

pub use error::{Error, Result};
