//! JSON run configuration shared by `simulate` and `calibrate`.

use std::fs;
use std::path::{Path, PathBuf};

use odcal::calibrate::NetworkPolicy;
use odcal::{Algorithm, ConcernThreshold, FjUpdate, MapeNormalization, Model, OptimizerConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Schema identifier every config file must carry.
pub const SCHEMA: &str = "odcal.run/v1";

/// Concern thresholds enumerated by `--grid` when the config names none.
pub const DEFAULT_GRID_THRESHOLDS: [f64; 3] = [0.6, 0.75, 0.9];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    pub model: Model,
    /// Concern threshold c_th.
    pub threshold: f64,
    /// `respondent_id,rank` survey of the first period.
    pub survey: PathBuf,
    /// `period,proportion` target series.
    pub targets: PathBuf,
    #[serde(default)]
    pub network: NetworkConfig,
    pub steps_per_period: usize,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub mape: MapeNormalization,
    #[serde(default)]
    pub fj_update: FjUpdate,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    /// Independent calibrations per task, each written to its own directory.
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    /// BA attachment count m.
    pub edges_per_node: usize,
    /// Pinned network as an `i j` edge list; overrides generation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edge_list: Option<PathBuf>,
    /// Generation seed; derived from the run seed when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Draw a fresh network for every replicate instead of sharing one.
    pub per_replicate: bool,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self { edges_per_node: 3, edge_list: None, seed: None, per_replicate: false }
    }
}

impl NetworkConfig {
    pub fn policy(&self) -> NetworkPolicy {
        if self.per_replicate {
            NetworkPolicy::PerReplicate { edges_per_node: self.edges_per_node }
        } else {
            NetworkPolicy::Shared
        }
    }
}

/// Axes enumerated by `--grid`; an empty axis falls back to its default.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub models: Vec<Model>,
    pub thresholds: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
}

fn default_replicates() -> usize {
    20
}

fn default_repetitions() -> usize {
    1
}

impl RunConfig {
    /// Reads, parses and validates `path`. Relative input paths are taken
    /// relative to the config file's directory and made absolute, so an
    /// echoed config replays from anywhere.
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
        let mut config: RunConfig = serde_json::from_str(&text)
            .map_err(|source| CliError::Json { path: path.to_path_buf(), source })?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let resolve = |p: &mut PathBuf| {
            let joined = base.join(&*p);
            *p = std::path::absolute(&joined).unwrap_or(joined);
        };
        resolve(&mut self.survey);
        resolve(&mut self.targets);
        if let Some(p) = self.network.edge_list.as_mut() {
            resolve(p);
        }
    }

    /// Checks everything that can be checked without reading input files.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(CliError::Config(msg));
        if self.schema != SCHEMA {
            return fail(format!("schema must be {SCHEMA:?}, got {:?}", self.schema));
        }
        ConcernThreshold::new(self.threshold)?;
        if self.steps_per_period == 0 {
            return fail("steps_per_period must be positive".into());
        }
        if self.replicates == 0 {
            return fail("replicates must be positive".into());
        }
        if self.repetitions == 0 {
            return fail("repetitions must be positive".into());
        }
        if self.network.edges_per_node == 0 {
            return fail("network.edges_per_node must be positive".into());
        }
        if let FjUpdate::Synchronous { steps_per_sweep: 0 } = self.fj_update {
            return fail("fj_update.synchronous.steps_per_sweep must be positive".into());
        }
        if self.threads == Some(0) {
            return fail("threads must be positive".into());
        }
        self.optimizer.validate()?;
        if let Some(grid) = &self.grid {
            for &t in &grid.thresholds {
                ConcernThreshold::new(t)?;
            }
            for &algorithm in &grid.algorithms {
                OptimizerConfig { algorithm, ..self.optimizer.clone() }.validate()?;
            }
        }
        Ok(())
    }

    /// The `(model, threshold, algorithm)` cells of `--grid`. Missing axes
    /// default to all three models, the thresholds 0.6, 0.75 and 0.9, and
    /// the configured algorithm.
    pub fn grid_cells(&self) -> Vec<(Model, f64, Algorithm)> {
        let grid = self.grid.clone().unwrap_or_default();
        let models =
            if grid.models.is_empty() { vec![Model::Fj, Model::Dw, Model::Atbcr] } else { grid.models };
        let thresholds =
            if grid.thresholds.is_empty() { DEFAULT_GRID_THRESHOLDS.to_vec() } else { grid.thresholds };
        let algorithms =
            if grid.algorithms.is_empty() { vec![self.optimizer.algorithm] } else { grid.algorithms };
        let mut cells = Vec::new();
        for &model in &models {
            for &threshold in &thresholds {
                for &algorithm in &algorithms {
                    cells.push((model, threshold, algorithm));
                }
            }
        }
        cells
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("config serializes");
        text.push('\n');
        text
    }
}
