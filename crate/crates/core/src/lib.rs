//! Neural belief-propagation decoding for binary linear codes and the
//! Construction A lattices built on them.
//!
//! The pipeline is:
//!
//! 1. [`tanner`]: parse a parity-check matrix, inspect its Tanner graph and
//!    pick the *culprit edges* covering its 4-cycles.
//! 2. [`trellis`]: unroll the graph into a `3L + 1` layer network and define
//!    the trainable weight pairs `(w, w')`.
//! 3. [`decoder`]: weighted sum-product forward pass.
//! 4. [`trainer`]: reverse-mode gradients of the multiloss cross entropy and
//!    plain gradient descent.
//! 5. [`lattice`] and [`channel`]: Construction A folding around the decoder
//!    and a reproducible Monte Carlo BER/WER harness.

pub mod channel;
pub mod decoder;
pub mod error;
pub mod format;
pub mod lattice;
pub mod rng;
pub mod tanner;
pub mod trainer;
pub mod trellis;

pub use error::{Error, Result};
