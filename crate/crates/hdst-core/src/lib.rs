//! Hyperdimensional computing for spatio-temporal multi-channel signals.
//!
//! The crate provides two encoders that map windows of quantized multi-channel
//! samples to D-dimensional binary hypervectors:
//!
//! - the conventional encoder, which bundles channel-bound level vectors
//!   spatially at each time step and then chains the spatial vectors through
//!   a permute-and-bind temporal stage, and
//! - the in-memory-adapted encoder, which reads precomputed channel-bound
//!   rows from a (simulated) memristive crossbar, runs the temporal
//!   permute-and-bind recurrence per channel, and bundles once at the end.
//!
//! Around the encoders sit the item memories ([`memories`]), a behavioral
//! crossbar simulator with configurable stochastic device non-idealities
//! ([`crossbar`]), an associative-memory classifier ([`learner`]), dataset
//! ingestion and a synthetic generator ([`dataio`]), an analytical
//! operation-count and energy model ([`costmodel`]), and batch drivers that
//! run training and evaluation data-parallel ([`pipeline`]).
//!
//! All randomness flows through [`rng::SeededRng`]; every run is reproducible
//! from a single 64-bit seed, independent of thread count.

pub mod costmodel;
pub mod crossbar;
pub mod dataio;
pub mod encoder;
pub mod error;
pub mod hv;
pub mod learner;
pub mod memories;
pub mod par;
pub mod pipeline;
pub mod rng;

pub use error::{Error, Result};
pub use hv::Hypervector;
pub use rng::SeededRng;
