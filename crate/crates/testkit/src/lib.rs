//! Reference implementations used as test oracles.
//!
//! Everything here is written directly from the textbook definitions, on
//! plain strings, without sharing code with the production crates.

pub mod extraction;
pub mod metrics;
pub mod synthetic;
