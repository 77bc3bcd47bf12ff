//! Run configuration shared by the pipeline commands.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeling::Connectivity;
use crate::matching::ComparisonParams;
use crate::registration::RegistrationParams;
use crate::report::{DEFAULT_BIN_THRESHOLDS, DEFAULT_CHART_FLOOR};
use crate::slices::DEFAULT_MASK_THRESHOLD;

/// Effective settings of a run. Loaded from a JSON file, overridden by
/// command-line flags and echoed into every JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub connectivity: Connectivity,
    pub min_voxels: u64,
    /// Relative volume change still counted as stable.
    pub stability_tolerance: f64,
    pub min_ioc: f64,
    pub chart_floor: u64,
    pub bins: Vec<f64>,
    pub registration: RegistrationParams,
    /// Mask voxels strictly above this value are foreground.
    pub mask_threshold: f64,
    pub columns: usize,
    /// Not echoed: outputs must not depend on where they are written.
    #[serde(skip_serializing)]
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            connectivity: Connectivity::default(),
            min_voxels: 0,
            stability_tolerance: 0.0,
            min_ioc: 0.0,
            chart_floor: DEFAULT_CHART_FLOOR,
            bins: DEFAULT_BIN_THRESHOLDS.to_vec(),
            registration: RegistrationParams::default(),
            mask_threshold: DEFAULT_MASK_THRESHOLD,
            columns: 4,
            out: PathBuf::from("."),
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: RunConfig = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.stability_tolerance.is_finite() && (0.0..1.0).contains(&self.stability_tolerance)) {
            return Err(Error::InvalidConfig(format!(
                "stability_tolerance must lie in [0, 1), got {}",
                self.stability_tolerance
            )));
        }
        if !(self.min_ioc.is_finite() && (0.0..1.0).contains(&self.min_ioc)) {
            return Err(Error::InvalidConfig(format!("min_ioc must lie in [0, 1), got {}", self.min_ioc)));
        }
        if self.bins.is_empty()
            || self.bins.iter().any(|t| !t.is_finite() || *t <= 0.0)
            || self.bins.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidConfig(format!(
                "bins must be positive and strictly ascending, got {:?}",
                self.bins
            )));
        }
        if !self.mask_threshold.is_finite() {
            return Err(Error::InvalidConfig("mask_threshold must be finite".into()));
        }
        if self.columns == 0 {
            return Err(Error::InvalidConfig("columns must be positive".into()));
        }
        self.registration.validate()
    }

    pub fn comparison_params(&self) -> ComparisonParams {
        ComparisonParams {
            connectivity: self.connectivity,
            min_voxels: self.min_voxels,
            stability_tolerance: self.stability_tolerance,
            min_ioc: self.min_ioc,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(c.chart_floor, 100);
        assert_eq!(c.bins, vec![200.0, 3500.0]);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"connectivity": 6, "min_voxels": 3}"#).unwrap();
        assert_eq!(c.connectivity, Connectivity::Six);
        assert_eq!(c.min_voxels, 3);
        assert_eq!(c.columns, 4);
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"colums": 4}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"connectivity": 8}"#).is_err());
        let c = RunConfig {
            bins: vec![3500.0, 200.0],
            ..RunConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn echo_round_trips() {
        let c = RunConfig {
            min_voxels: 7,
            ..RunConfig::default()
        };
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        let elsewhere = RunConfig {
            out: PathBuf::from("/elsewhere"),
            ..c.clone()
        };
        assert_eq!(serde_json::to_string(&elsewhere).unwrap(), serde_json::to_string(&c).unwrap());
    }
}
