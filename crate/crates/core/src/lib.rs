//! Crash-recovery shared-memory model: finite deterministic object types,
//! crash-budgeted execution sets, recording/discerning deciders, consensus
//! protocols on the non-readable `tnn` family, and a bounded exhaustive
//! explorer for agreement, validity and valency.

pub mod characterization;
pub mod cli;
pub mod error;
pub mod execution;
pub mod explorer;
pub mod protocol;
pub mod types;

pub use error::{ModelError, SearchError, TypeError};
