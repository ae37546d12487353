//! Numerical building blocks shared by the model modules.

pub mod conv;
pub mod fixed;
pub mod quad;
pub mod stats;
pub mod tail;
