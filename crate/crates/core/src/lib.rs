//! Secure private information retrieval from databases whose answers pass
//! through a wiretap channel II with per-database tap ratios.
//!
//! The crate covers the capacity upper bound, the family of achievable
//! group-sequence schemes, explicit query plans with artificial-noise keys,
//! and a simulator with decodability, privacy and security audits.

pub mod algebra;
pub mod ratio;
pub mod rates;
pub mod subsets;
pub mod bounds;
pub mod planner;
pub mod simulator;
pub mod cli;
