//! Policy names accepted on the command line.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use sel4sel_core::SelectionPolicy;

use crate::checkpoint::Checkpoint;
use crate::error::{HarnessError, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PolicySpec {
    Fitness,
    Novelty,
    MinimalCriterion,
    Drift,
    Trained(PathBuf),
}

impl PolicySpec {
    /// Parses a comma-separated list such as `fitness,sel4sel:runs/a.json`.
    pub fn parse_list(list: &str) -> Result<Vec<PolicySpec>> {
        let specs = list.split(',').map(str::trim).map(str::parse).collect::<Result<Vec<_>>>()?;
        if specs.is_empty() {
            return Err(HarnessError::Usage("no policies given".into()));
        }
        Ok(specs)
    }

    /// Text used in summaries, exactly as given on the command line.
    pub fn name(&self) -> String {
        match self {
            PolicySpec::Fitness => "fitness".into(),
            PolicySpec::Novelty => "novelty".into(),
            PolicySpec::MinimalCriterion => "mincrit".into(),
            PolicySpec::Drift => "drift".into(),
            PolicySpec::Trained(path) => format!("sel4sel:{}", path.display()),
        }
    }

    /// File-name friendly label, e.g. `sel4sel-convex` for `sel4sel:ck/convex.json`.
    pub fn slug(&self) -> String {
        match self {
            PolicySpec::Trained(path) => {
                let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                let clean: String = stem
                    .chars()
                    .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
                    .collect();
                format!("sel4sel-{clean}")
            }
            other => other.name(),
        }
    }

    pub fn resolve(&self) -> Result<SelectionPolicy> {
        Ok(match self {
            PolicySpec::Fitness => SelectionPolicy::UnderlyingFitness,
            PolicySpec::Novelty => SelectionPolicy::Novelty,
            PolicySpec::MinimalCriterion => SelectionPolicy::minimal_criterion(),
            PolicySpec::Drift => SelectionPolicy::RandomDrift,
            PolicySpec::Trained(path) => SelectionPolicy::Network(Checkpoint::load(path)?.params),
        })
    }

    pub fn checkpoint_path(&self) -> Option<&Path> {
        match self {
            PolicySpec::Trained(path) => Some(path),
            _ => None,
        }
    }
}

impl FromStr for PolicySpec {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "fitness" => PolicySpec::Fitness,
            "novelty" => PolicySpec::Novelty,
            "mincrit" => PolicySpec::MinimalCriterion,
            "drift" => PolicySpec::Drift,
            _ => match s.strip_prefix("sel4sel:") {
                Some(path) if !path.is_empty() => PolicySpec::Trained(PathBuf::from(path)),
                _ => return Err(HarnessError::Policy(s.to_string())),
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lists() {
        let specs = PolicySpec::parse_list("fitness, novelty,mincrit,drift,sel4sel:ck/run a.json").unwrap();
        assert_eq!(specs.len(), 5);
        assert_eq!(specs[4], PolicySpec::Trained("ck/run a.json".into()));
        assert_eq!(specs[4].slug(), "sel4sel-run_a");
        assert_eq!(specs[4].name(), "sel4sel:ck/run a.json");
        assert_eq!(specs[2].slug(), "mincrit");
    }

    #[test]
    fn rejects_unknown_names() {
        assert!(PolicySpec::parse_list("fitness,greedy").is_err());
        assert!("sel4sel:".parse::<PolicySpec>().is_err());
        assert!("".parse::<PolicySpec>().is_err());
    }
}
