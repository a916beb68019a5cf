//! Time-shifted alternating (TSA) Gelfand-Pinsker polar coding for two-receiver broadcast
//! channels.
//!
//! The numeric code is generic over the scalar type ([`Real`], implemented for `f32` and `f64`);
//! the `*64` aliases below fix it to `f64`, which is what the simulator uses.

pub mod channel;
pub mod coder;
pub mod polar;
pub mod prob;
pub mod regions;
pub mod rng;
pub mod scheme;
pub mod sim;
mod scalar;

pub use scalar::{binary_entropy, Real};

pub type Pmf64 = prob::Pmf<f64>;
pub type ConditionalPmf64 = prob::ConditionalPmf<f64>;
pub type JointPmf64 = prob::JointPmf<f64>;
pub type InputStructure64 = regions::InputStructure<f64>;
pub type RatePair64 = regions::RatePair<f64>;
pub type GenericBc64 = channel::GenericBc<f64>;
pub type ReliabilityProfile64 = polar::ReliabilityProfile<f64>;
