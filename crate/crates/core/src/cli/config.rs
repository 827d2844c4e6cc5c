use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{QlsmError, Result};
use crate::hebbian::{HebbianConfig, DEFAULT_ART_LEARNING_RATE, DEFAULT_VIGILANCE};
use crate::reservoir::{FilterDescriptor, DEFAULT_FIELD_SCALE, DEFAULT_LEAK};

/// One run's configuration. Exactly the section matching the subcommand is
/// required; unknown keys anywhere are rejected.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    /// Relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adiabatic: Option<AdiabaticParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lsm: Option<LsmParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learn: Option<LearnParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub props: Option<PropsParams>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdiabaticParams {
    /// DIMACS file; the bundled three-variable instance when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<PathBuf>,
    pub total_times: Vec<f64>,
    pub steps_per_unit: f64,
    /// Points of the `s ∈ [0, 1]` gap profile.
    pub gap_samples: usize,
}

impl Default for AdiabaticParams {
    fn default() -> Self {
        Self {
            instance: None,
            total_times: (0..8).map(|k| f64::from(1u32 << k)).collect(),
            steps_per_unit: 10.0,
            gap_samples: 21,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LsmParams {
    pub nodes: usize,
    pub connectivity: f64,
    pub field_scale: f64,
    pub leak: f64,
    /// Filter bank; one lag-0..4 filter per node when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filters: Option<Vec<FilterDescriptor>>,
    pub signal: SignalParams,
    pub task: TaskParams,
    pub separation: SeparationParams,
    pub fading: FadingParams,
}

impl Default for LsmParams {
    fn default() -> Self {
        Self {
            nodes: 6,
            connectivity: 0.5,
            field_scale: DEFAULT_FIELD_SCALE,
            leak: DEFAULT_LEAK,
            filters: None,
            signal: SignalParams::default(),
            task: TaskParams::default(),
            separation: SeparationParams::default(),
            fading: FadingParams::default(),
        }
    }
}

/// Driving signal: a `t,ch0,…` CSV file, or a seeded random walk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<usize>,
    /// Random-walk step as a fraction of the largest admissible step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_fraction: Option<f64>,
}

impl Default for SignalParams {
    fn default() -> Self {
        Self {
            path: None,
            length: Some(400),
            step_fraction: Some(0.5),
        }
    }
}

/// Delayed recall: predict channel 0 of the input `delay` samples ago.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskParams {
    pub delay: usize,
    /// Leading samples left out of the training set.
    pub washout: usize,
    pub regularization: f64,
}

impl Default for TaskParams {
    fn default() -> Self {
        Self {
            delay: 3,
            washout: 10,
            regularization: crate::readout::DEFAULT_REGULARIZATION,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparationParams {
    pub pairs: usize,
    pub length: usize,
    pub threshold: f64,
}

impl Default for SeparationParams {
    fn default() -> Self {
        Self {
            pairs: 100,
            length: 40,
            threshold: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FadingParams {
    pub pairs: usize,
    pub base_length: usize,
    pub windows: Vec<usize>,
}

impl Default for FadingParams {
    fn default() -> Self {
        Self {
            pairs: 10,
            base_length: 57,
            windows: vec![1, 2, 4, 8, 16],
        }
    }
}

/// Exactly one of `cnf` and `truth_table`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cnf: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_table: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnParams {
    pub nodes: usize,
    pub connectivity: f64,
    pub leak: f64,
    /// Constant input patterns, one value per channel.
    pub patterns: Vec<Vec<f64>>,
    /// Samples per presentation of a pattern.
    pub pattern_length: usize,
    /// Order in which patterns are presented within an epoch.
    pub stream: Vec<usize>,
    pub epochs: usize,
    pub hebbian: HebbianConfig,
    pub vigilance: f64,
    pub art_learning_rate: f64,
}

impl Default for LearnParams {
    fn default() -> Self {
        Self {
            nodes: 6,
            connectivity: 0.5,
            leak: DEFAULT_LEAK,
            patterns: vec![vec![0.9, -0.9], vec![-0.9, 0.9]],
            pattern_length: 20,
            stream: vec![0, 1, 0, 1],
            epochs: 2,
            hebbian: HebbianConfig::default(),
            vigilance: DEFAULT_VIGILANCE,
            art_learning_rate: DEFAULT_ART_LEARNING_RATE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropsParams {
    /// Random instances per randomized invariant.
    pub trials: usize,
}

impl Default for PropsParams {
    fn default() -> Self {
        Self { trials: 20 }
    }
}

impl ExperimentConfig {
    /// Parses a config document. Errors carry the dotted path of the
    /// offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                QlsmError::Config(inner.to_string())
            } else {
                QlsmError::Config(format!("{path}: {inner}"))
            }
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| QlsmError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            QlsmError::Config(msg) => QlsmError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

/// Field-naming config error.
pub(crate) fn field_error(field: &str, message: impl std::fmt::Display) -> QlsmError {
    QlsmError::Config(format!("{field}: {message}"))
}

/// Resolves `path` against `base` and checks that it names a readable file.
pub(crate) fn resolve_input(field: &str, path: &Path, base: &Path) -> Result<PathBuf> {
    let joined = if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    };
    if !joined.is_file() {
        return Err(field_error(field, format!("no such file {}", joined.display())));
    }
    Ok(joined)
}
