//! Command-line harness around `sel4sel-core`: checkpoint files, CSV/JSON
//! outputs, and parallel drivers for training, comparing and analysing
//! selection policies.

pub mod checkpoint;
pub mod commands;
pub mod error;
pub mod output;
pub mod parallel;
pub mod policy;

pub use checkpoint::{Checkpoint, Metadata, TrainingConfig};
pub use error::{HarnessError, Result};
pub use policy::PolicySpec;
