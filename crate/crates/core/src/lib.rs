//! Monte Carlo study of how quickly massive MIMO systems approach their
//! large-antenna limits.
//!
//! The crate generates Kronecker-correlated Rayleigh channels `G = H D^{1/2}`
//! with a deterministic link-gain profile, measures how far the normalized
//! Gram matrix `W = H^H H / M` is from the identity ([`metrics`]), and
//! evaluates zero-forcing and matched-filter downlink precoders against their
//! closed-form asymptotic limits ([`precoding`]). [`montecarlo`] sweeps these
//! over the two growth regimes (fixed `K`, or fixed `alpha = M/K`).
//!
//! Every random draw comes from a `(seed, stream)` pair, so sweep results are
//! reproducible bit-for-bit regardless of how many workers run the trials.

pub mod channel;
mod error;
pub mod metrics;
pub mod montecarlo;
pub mod numerics;
pub mod power;
pub mod precoding;

pub use error::{Error, Result};
pub use numerics::{ComplexMatrix, HermitianMatrix, C64};
