//! Checkpoint documents for trained selection networks.
//!
//! ```json
//! {
//!   "layer_shapes": [[6, 16], [16, 16], [16, 1]],
//!   "parameters": [0.0123, ...],
//!   "metadata": { "domain": "convex", "iterations": 1500, ... }
//! }
//! ```
//!
//! Parameters are stored as JSON numbers printed with the shortest
//! representation that reads back to the same `f64`, so a save/load round
//! trip is exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sel4sel_core::meta::{EarlyStop, MetaConfig, UpdateRule};
use sel4sel_core::{DomainKind, NoveltyMode, PolicyParams};

use crate::error::{io_err, HarnessError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    pub copies: usize,
    pub sigma: f64,
    pub pop_size: usize,
    pub generations: u32,
    pub mutation_rate: f64,
    pub novelty_mode: NoveltyMode,
    pub hidden: Vec<usize>,
    pub update: UpdateRule,
    pub early_stop: Option<EarlyStop>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    pub domain: DomainKind,
    /// Configured outer iterations.
    pub iterations: u32,
    /// Outer iterations actually applied to these parameters.
    pub completed_iterations: u32,
    pub stopped_early: bool,
    pub seed: u64,
    pub training: TrainingConfig,
}

impl Metadata {
    pub fn from_config(config: &MetaConfig, completed_iterations: u32, stopped_early: bool) -> Self {
        Metadata {
            domain: config.domain,
            iterations: config.iterations,
            completed_iterations,
            stopped_early,
            seed: config.master_seed,
            training: TrainingConfig {
                copies: config.copies,
                sigma: config.sigma,
                pop_size: config.ga.population_size,
                generations: config.ga.generations,
                mutation_rate: config.ga.mutation_rate,
                novelty_mode: config.ga.novelty_mode,
                hidden: config.hidden.clone(),
                update: config.update,
                early_stop: config.early_stop,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub params: PolicyParams,
    pub metadata: Metadata,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    layer_shapes: Vec<(usize, usize)>,
    parameters: Vec<f64>,
    metadata: Metadata,
}

impl Checkpoint {
    pub fn to_json(&self) -> Result<String> {
        let doc = Document {
            layer_shapes: self.params.layer_shapes().to_vec(),
            parameters: self.params.values().to_vec(),
            metadata: self.metadata.clone(),
        };
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        Ok(text)
    }

    /// Parses a checkpoint; `origin` names the source in error messages.
    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        let fail = |message: String| HarnessError::Checkpoint { path: origin.to_path_buf(), message };
        let doc: Document = serde_json::from_str(text).map_err(|e| fail(e.to_string()))?;
        let expected = PolicyParams::param_count(&doc.layer_shapes);
        if doc.parameters.len() != expected {
            return Err(fail(format!(
                "field `parameters` holds {} values but `layer_shapes` needs {expected}",
                doc.parameters.len()
            )));
        }
        let params = PolicyParams::new(doc.layer_shapes, doc.parameters)
            .map_err(|e| fail(format!("field `layer_shapes`: {e}")))?;
        Ok(Checkpoint { params, metadata: doc.metadata })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_json(&text, path)
    }
}

/// Writes via a sibling temporary file and a rename so an interrupted run
/// never leaves a truncated file behind.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use sel4sel_core::meta::initial_params;

    fn sample(seed: u64) -> Checkpoint {
        let mut config = MetaConfig::new(DomainKind::Convex, seed);
        config.iterations = 100;
        Checkpoint { params: initial_params(&config).unwrap(), metadata: Metadata::from_config(&config, 100, false) }
    }

    #[test]
    fn metadata_labels_domain_and_iterations() {
        let json: serde_json::Value = serde_json::from_str(&sample(7).to_json().unwrap()).unwrap();
        assert_eq!(json["metadata"]["domain"], "convex");
        assert_eq!(json["metadata"]["iterations"], 100);
        assert_eq!(json["metadata"]["seed"], 7);
        assert_eq!(json["parameters"].as_array().unwrap().len(), 401);
    }

    #[test]
    fn missing_parameter_is_rejected() {
        let mut json: serde_json::Value = serde_json::from_str(&sample(1).to_json().unwrap()).unwrap();
        json["parameters"].as_array_mut().unwrap().pop();
        let err = Checkpoint::from_json(&json.to_string(), Path::new("x.json")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("parameters") && msg.contains("400") && msg.contains("401"), "{msg}");
    }

    #[test]
    fn malformed_documents_name_the_field() {
        let mut json: serde_json::Value = serde_json::from_str(&sample(1).to_json().unwrap()).unwrap();
        json.as_object_mut().unwrap().remove("layer_shapes");
        let msg = Checkpoint::from_json(&json.to_string(), Path::new("x.json")).unwrap_err().to_string();
        assert!(msg.contains("layer_shapes"), "{msg}");

        let mut json: serde_json::Value = serde_json::from_str(&sample(1).to_json().unwrap()).unwrap();
        json["metadata"]["domain"] = "bogus".into();
        let msg = Checkpoint::from_json(&json.to_string(), Path::new("x.json")).unwrap_err().to_string();
        assert!(msg.contains("bogus"), "{msg}");

        assert!(Checkpoint::from_json("{", Path::new("x.json")).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn json_round_trip_is_exact(seed: u64, scale in 1e-6f64..1e6) {
            let mut ck = sample(seed);
            let values: Vec<f64> = ck.params.values().iter().map(|v| v * scale).collect();
            ck.params = ck.params.with_values(values).unwrap();
            let back = Checkpoint::from_json(&ck.to_json().unwrap(), Path::new("x.json")).unwrap();
            prop_assert_eq!(back, ck);
        }
    }
}
