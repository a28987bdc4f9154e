//! Meta-evolution of selection functions for tournament genetic algorithms.
//!
//! A small neural network scores every individual of an inner genetic
//! algorithm from six features (fitness, rank, age, novelty, noise and
//! generation). The inner GA runs tournament replacement with that score,
//! and an outer evolution-strategies loop tunes the network so that the
//! final population of a fresh run is as fit as possible.
//!
//! The crate is `no_std` (it needs `alloc`). IO, file formats, threading and
//! the command line live in the `sel4sel` companion crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod bitstring;
pub mod domains;
pub mod engine;
mod error;
pub mod meta;
pub mod population;
pub mod rng;
pub mod selection;

pub use analysis::{pearson, probe_population, CorrelationProbe};
pub use bitstring::{Genome, GENOME_BITS};
pub use domains::{DomainKind, TaskInstance};
pub use engine::{run_ga, GaConfig, GenerationStats, RunTrace};
pub use error::Error;
pub use meta::{rank_weights, MetaConfig, MetaRecord, MetaTrace};
pub use population::{FeatureVector, Individual, NoveltyMode, Population};
pub use selection::{PolicyParams, SelectionPolicy};

pub type Result<T, E = Error> = core::result::Result<T, E>;
