//! Experiment campaigns, verification and file formats around `qpq-core`.

pub mod config;
pub mod experiments;
pub mod output;
pub mod seeds;
pub mod stats;
pub mod verify;
