//! Configuration, snapshots and CSV outputs.

pub mod config;
pub mod output;
pub mod snapshot;

pub use config::{InitSpec, Profile, ProfileKind, RunConfig, Setup};
