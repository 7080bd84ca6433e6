//! Outage and sum-rate evaluation for full-duplex cellular networks whose
//! nodes carry a fluid antenna with imperfect channel knowledge.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod channel;
pub mod error;
pub mod estimation;
pub mod geometry;
pub mod interference;
pub mod monte_carlo;
pub mod params;
pub mod quadrature;
pub mod special;
pub mod sweep;

pub use error::{Error, Result};
