//! Comparative-advantage bandwidth allocation for multi-tone (OFDMA-style)
//! small-cell channels.
//!
//! The crate is organised around the allocation pipeline:
//!
//! - [`channel`]: resource grids, synthetic tapped-delay-line fading, trace
//!   ingestion, per-block aggregation and SNR.
//! - [`alloc`]: spectral efficiency, advantage-ratio ranking, threshold
//!   partition, two-user and recursive multi-user allocation.
//! - [`metrics`]: capacity, tradeoff curves, equal-capacity points and
//!   improvement statistics.
//! - [`oracle`]: exhaustive and difference-greedy optima for fixed splits plus
//!   seeded random baselines.

pub mod alloc;
pub mod channel;
pub mod error;
pub mod metrics;
pub mod oracle;
pub mod seed;

pub use error::{Error, Result};

use serde::{Deserialize, Serialize};
use std::fmt;

/// Opaque user identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserId(pub u32);

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for UserId {
    fn from(v: u32) -> Self {
        UserId(v)
    }
}
