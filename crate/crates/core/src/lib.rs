//! Active domain adaptation over embedding datasets.
//!
//! The crate selects which target-domain samples to annotate (local
//! inconsistency of predictions plus a family of baseline criteria), adapts a
//! small classifier with a progressively augmented anchor set, and runs
//! seeded experiments end to end.

pub mod anchor;
pub mod cluster;
pub mod criteria;
pub mod dataio;
pub mod error;
pub mod harness;
pub mod model;
pub mod neighbors;
pub mod rng;
pub mod selection;
pub mod stats;

pub use error::{LadaError, Result};
