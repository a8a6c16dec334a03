//! Network-aware semantic transcoding on the edge-to-cloud backhaul.
//!
//! The crate models the transmit side of a semantic image codec whose
//! latent channels are pruned to fit the link:
//!
//! - [`latent`]: latent tensors, channel importance, top-k masking and
//!   payload accounting, plus the `LTNS` tensor container.
//! - [`policy`]: the bandwidth-to-channel-budget modulator.
//! - [`netmodel`]: telemetry sampling and the additive latency model.
//! - [`slalib`]: SLA tiers and a random-forest compliance predictor.
//! - [`harness`]: parameter sweeps producing results CSVs and labeled
//!   datasets.
//! - [`cli`]: the `netaware` command-line front end.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod atomic;
pub mod cli;
pub mod error;
pub mod harness;
pub mod latent;
pub mod netmodel;
pub mod policy;
pub mod rng;
pub mod slalib;

pub use error::{Error, Result};
