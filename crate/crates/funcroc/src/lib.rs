//! Simulation harness, file IO and reporting around `funcroc-core`.

pub use funcroc_core as core;

pub mod harness;
pub mod io;
pub mod report;
