//! Safety verification of discrete-time systems driven by sub-Gaussian noise.
//!
//! The probabilistic gap between a stochastic trajectory and its noise-free
//! counterpart is bounded with [`gap_bound`]; the safe set is eroded by that
//! radius ([`geometry`]) and the deterministic system is checked on the
//! eroded set ([`verifier`]). [`montecarlo`] validates the bounds empirically.

pub mod benchmarks;
pub mod dynamics;
pub mod error;
pub mod gap_bound;
pub mod geometry;
pub mod montecarlo;
pub mod verifier;

pub use error::{Error, Result};
