//! Experiment configuration: a single versioned JSON document.

use std::path::Path;

use neumann_core::geometry::ConvexPolygon;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::domains::GeneratorSpec;
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// The configuration bundled with the binary, used when `--config` is absent.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.json");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KRange {
    pub min: usize,
    pub max: usize,
}

impl KRange {
    pub fn iter(&self) -> impl Iterator<Item = usize> {
        self.min..=self.max
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarlo {
    pub samples: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    pub csv: String,
    pub json: String,
}

impl Default for OutputPaths {
    fn default() -> Self {
        OutputPaths {
            csv: "sweep.csv".into(),
            json: "sweep.json".into(),
        }
    }
}

fn default_grid() -> usize {
    neumann_core::partition::DEFAULT_GRID_RESOLUTION
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub domains: Vec<GeneratorSpec>,
    /// k range for polygon domains (FEM spectra).
    pub polygon_k: KRange,
    /// k range for boxes (closed-form spectra).
    pub box_k: KRange,
    pub fem_levels: usize,
    pub monte_carlo: MonteCarlo,
    #[serde(default = "default_grid")]
    pub grid_resolution: usize,
    #[serde(default)]
    pub output: OutputPaths,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn bundled() -> Self {
        Self::from_json(DEFAULT_CONFIG).expect("bundled config is valid")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.domains.is_empty() {
            return bad("domain list is empty".into());
        }
        for (name, r) in [("polygon_k", &self.polygon_k), ("box_k", &self.box_k)] {
            if r.min == 0 || r.min > r.max {
                return bad(format!("{name} must satisfy 1 <= min <= max, got {}..={}", r.min, r.max));
            }
        }
        if self.fem_levels > 9 {
            return bad(format!("fem_levels {} is too large", self.fem_levels));
        }
        if self.monte_carlo.samples < neumann_core::geometry::MIN_MC_SAMPLES {
            return bad(format!(
                "monte_carlo.samples must be at least {}",
                neumann_core::geometry::MIN_MC_SAMPLES
            ));
        }
        if self.grid_resolution < 2 {
            return bad("grid_resolution must be at least 2".into());
        }
        for (i, d) in self.domains.iter().enumerate() {
            d.validate().map_err(|e| CliError::Config(format!("domains[{i}]: {e}")))?;
        }
        Ok(())
    }

    pub fn has_polygons(&self) -> bool {
        self.domains.iter().any(|d| !matches!(d, GeneratorSpec::Box { .. }))
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Parses a polygon literal `[[x, y], ...]`.
pub fn parse_polygon(text: &str) -> Result<ConvexPolygon, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(format!("bad polygon literal: {e}")))
}
