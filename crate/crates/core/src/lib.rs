//! Classical simulation of an accuracy-weighted quantum ensemble of
//! classifiers.
//!
//! The pipeline trains (or leaves untrained) a population of small MLPs,
//! weights each member by its training accuracy, and computes the
//! probability that measuring the post-selected ensemble returns the correct
//! label. The closed-form probabilities in [`qensemble`] are cross-checked
//! against an explicit state-vector simulation of the registers.

pub mod data;
pub mod error;
pub mod experiment;
pub mod model;
pub mod qensemble;
pub mod replicate;
pub mod train;

pub use error::{Error, Result};
