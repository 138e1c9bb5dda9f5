//! Deterministic 2-ruling sets for graphs.
//!
//! The sampler draws a vertex subset from a k-wise independent hash of a
//! proper coloring; its seed is fixed chunk by chunk with the method of
//! conditional expectations so that the sample is sparse and hits every
//! high-degree neighborhood. Repeated sampling shrinks the maximum degree
//! until a final MIS finishes the job. Everything runs inside a simulator of
//! the linear-memory MPC and Congested Clique models that accounts for
//! rounds, words and memory.

pub mod cli;
pub mod derand;
pub mod generate;
pub mod graph;
pub mod kwise;
pub mod linial;
pub mod oracle;
pub mod ruling;
pub mod sim;

/// Default cap on the number of seed completions enumerated per call.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 1 << 24;
