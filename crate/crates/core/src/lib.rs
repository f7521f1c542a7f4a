//! Trace-driven simulation of online content caching at a single edge node.
//!
//! The crate is organised around the per-slot protocol of a proactive cache:
//! predict next-slot demand, choose a replacement, reveal the requests, and
//! account hits, replacement cost and utility.
//!
//! - [`trace`]: slotted request traces, ingestion of timestamped logs and a
//!   seeded non-stationary generator.
//! - [`glm`]: the grouped linear demand predictor with monotone, non-negative
//!   coefficients fitted by gradient projection.
//! - [`cache`]: cache state and exact slot accounting.
//! - [`policies`]: LRU, LFUDA, GLM most-popular and hindsight optimal.
//! - [`rlma`]: tabular Q-learning over (divergence, replacement count) with
//!   imaginary rollouts.
//! - [`harness`]: running, auditing, comparing and exporting policy runs.

pub mod cache;
pub mod error;
pub mod glm;
pub mod harness;
pub mod policies;
pub mod rlma;
pub mod rng;
pub mod trace;

pub use error::{Error, Result};
pub use trace::{FileId, SlottedTrace};
