//! CSV and JSON writers for run outputs.
//!
//! Floats are written in their shortest round-trip decimal form, so equal
//! inputs always give byte-identical files.

use std::path::Path;

use serde::Serialize;
use sel4sel_core::analysis::{AggregatePoint, AveragedProbe};
use sel4sel_core::meta::MetaRecord;
use sel4sel_core::GenerationStats;

use crate::checkpoint::write_atomic;
use crate::error::Result;

#[derive(Serialize)]
struct TraceRow {
    generation: u32,
    mean_fitness: f64,
    mean_novelty: f64,
    max_fitness: f64,
}

#[derive(Serialize)]
struct MetaRow {
    iteration: u32,
    score_mean: f64,
    score_best: f64,
    score_worst: f64,
}

#[derive(Serialize)]
struct CorrelationRow {
    generation: u32,
    corr_fitness: Option<f64>,
    corr_rank: Option<f64>,
    corr_age: Option<f64>,
    corr_novelty: Option<f64>,
    corr_noise: Option<f64>,
}

fn csv_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    for row in rows {
        writer.serialize(row)?;
    }
    writer.into_inner().map_err(|e| csv::Error::from(e.into_error()).into())
}

/// `generation,mean_fitness,mean_novelty,max_fitness`
pub fn trace_csv(generations: &[GenerationStats]) -> Result<Vec<u8>> {
    csv_bytes(generations.iter().map(|g| TraceRow {
        generation: g.generation,
        mean_fitness: g.mean_fitness,
        mean_novelty: g.mean_novelty,
        max_fitness: g.max_fitness,
    }))
}

/// `generation,fitness_mean,fitness_std,novelty_mean,novelty_std`
pub fn aggregate_csv(points: &[AggregatePoint]) -> Result<Vec<u8>> {
    csv_bytes(points)
}

/// `iteration,score_mean,score_best,score_worst`
pub fn meta_csv(records: &[MetaRecord]) -> Result<Vec<u8>> {
    csv_bytes(records.iter().map(|r| MetaRow {
        iteration: r.iteration,
        score_mean: r.score_mean,
        score_best: r.score_best,
        score_worst: r.score_worst,
    }))
}

/// `generation,corr_fitness,corr_rank,corr_age,corr_novelty,corr_noise`;
/// undefined correlations are empty fields.
pub fn correlation_csv(probes: &[AveragedProbe]) -> Result<Vec<u8>> {
    csv_bytes(probes.iter().map(|p| CorrelationRow {
        generation: p.generation,
        corr_fitness: p.fitness,
        corr_rank: p.rank,
        corr_age: p.age,
        corr_novelty: p.novelty,
        corr_noise: p.noise,
    }))
}

pub fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    write_atomic(path, bytes)
}
