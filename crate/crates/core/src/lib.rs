//! Numerics for renewal processes and polymer pinning models.
//!
//! Modules follow the chain law → renewal function → homogeneous free energy →
//! intersection renewal → 2-replica free energy, with a quenched Monte Carlo
//! engine on top.

pub mod error;
pub mod homogeneous;
pub mod intersection;
pub mod laws;
pub mod numerics;
pub mod quenched;
pub mod renewal;
pub mod replica;

pub use error::{Error, Result};
