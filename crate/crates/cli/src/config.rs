use std::path::{Path, PathBuf};

use orlicz_capacity::bodies::{BodyKind, YoungTuple};
use orlicz_capacity::YoungFunction;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Lower limits enforced on the sample counts and grid sizes of a config.
pub mod minimums {
    pub const VOLUME_SAMPLES: usize = 1_000;
    pub const DUAL_SAMPLES: usize = 1_000;
    pub const POLAR_SAMPLES: usize = 100;
    pub const JACOBIAN_POINTS: usize = 100;
    pub const INEQUALITY_PAIRS: usize = 100;
    pub const INEQUALITY_GRID: usize = 10;
    pub const PLOT_RESOLUTION: usize = 8;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabConfig {
    pub tuple: Vec<YoungFunction>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub seed: u64,
    /// Tolerance for the equality flags of the capacity report.
    #[serde(default = "default_flag_tolerance")]
    pub flag_tolerance: f64,
    #[serde(default)]
    pub samples: SampleCounts,
    #[serde(default)]
    pub grids: GridSizes,
    #[serde(default)]
    pub plot: PlotSettings,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_epsilon() -> f64 {
    0.05
}

fn default_flag_tolerance() -> f64 {
    orlicz_capacity::capacity::DEFAULT_FLAG_TOL
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleCounts {
    pub volume: usize,
    pub embed_dual: usize,
    pub embed_polar: usize,
    pub jacobian: usize,
    pub inequality_pairs: usize,
}

impl Default for SampleCounts {
    fn default() -> Self {
        SampleCounts {
            volume: 200_000,
            embed_dual: 100_000,
            embed_polar: 10_000,
            jacobian: 10_000,
            inequality_pairs: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSizes {
    pub inequality: usize,
    pub x_max: f64,
    pub jacobian_step: f64,
}

impl Default for GridSizes {
    fn default() -> Self {
        GridSizes {
            inequality: 100,
            x_max: 10.0,
            jacobian_step: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlotSettings {
    pub body: BodyKind,
    pub resolution: usize,
}

impl Default for PlotSettings {
    fn default() -> Self {
        PlotSettings {
            body: BodyKind::OrliczBall,
            resolution: 256,
        }
    }
}

/// A parsed and validated config together with the hash of its bytes.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: LabConfig,
    pub tuple: YoungTuple,
    pub sha256: String,
}

impl LabConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    /// Checks ranges and builds the tuple.
    pub fn validate(&self) -> Result<YoungTuple, CliError> {
        use minimums::*;
        let bad = |m: String| Err(CliError::Config(m));
        if self.tuple.is_empty() {
            return bad("tuple must contain at least one function".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return bad(format!("epsilon must lie in (0, 1], got {}", self.epsilon));
        }
        if !(self.flag_tolerance > 0.0 && self.flag_tolerance.is_finite()) {
            return bad(format!("flag_tolerance must be positive, got {}", self.flag_tolerance));
        }
        let s = &self.samples;
        let counts = [
            ("samples.volume", s.volume, VOLUME_SAMPLES),
            ("samples.embed_dual", s.embed_dual, DUAL_SAMPLES),
            ("samples.embed_polar", s.embed_polar, POLAR_SAMPLES),
            ("samples.jacobian", s.jacobian, JACOBIAN_POINTS),
            ("samples.inequality_pairs", s.inequality_pairs, INEQUALITY_PAIRS),
            ("grids.inequality", self.grids.inequality, INEQUALITY_GRID),
            ("plot.resolution", self.plot.resolution, PLOT_RESOLUTION),
        ];
        for (name, value, min) in counts {
            if value < min {
                return bad(format!("{name} = {value} is below the minimum {min}"));
            }
        }
        if !(self.grids.x_max > 0.0 && self.grids.x_max.is_finite()) {
            return bad(format!("grids.x_max must be positive, got {}", self.grids.x_max));
        }
        if !(self.grids.jacobian_step > 0.0 && self.grids.jacobian_step < 0.1) {
            return bad(format!("grids.jacobian_step must lie in (0, 0.1), got {}", self.grids.jacobian_step));
        }
        YoungTuple::new(self.tuple.clone()).map_err(|e| CliError::Config(format!("invalid tuple: {e}")))
    }
}

pub fn load(path: &Path) -> Result<LoadedConfig, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes).map_err(|_| CliError::Config("config is not UTF-8".into()))?;
    let config = LabConfig::from_json(text)?;
    let tuple = config.validate()?;
    Ok(LoadedConfig {
        config,
        tuple,
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let c = LabConfig::from_json(r#"{"tuple":[{"family":"power","p":2.0}]}"#).unwrap();
        assert_eq!(c.epsilon, 0.05);
        assert_eq!(c.plot.body, BodyKind::OrliczBall);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(LabConfig::from_json(r#"{"tuple":[],"bogus":1}"#).is_err());
        assert!(LabConfig::from_json(r#"{"tuple":[{"family":"power","p":2.0,"q":2.0}]}"#).is_err());
    }

    #[test]
    fn ranges_are_checked() {
        let mut c = LabConfig::from_json(r#"{"tuple":[{"family":"scaled_exp"}]}"#).unwrap();
        c.epsilon = 0.0;
        assert!(c.validate().is_err());
        c.epsilon = 0.5;
        c.samples.volume = 10;
        assert!(c.validate().is_err());
        let empty = LabConfig::from_json(r#"{"tuple":[]}"#).unwrap();
        assert!(empty.validate().is_err());
    }
}
