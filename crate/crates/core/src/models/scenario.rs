//! Input scenarios and model profiles selectable from configuration.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::gbdt::TreeConfig;
use super::nn::Modality;
use super::train::DeepModelConfig;
use crate::error::{Error, Result};

/// The five benchmark input scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    RoutineTree,
    EcgfeatTree,
    WaveDeep,
    EcgfeatRoutineTree,
    WaveRoutineDeep,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::RoutineTree,
        Scenario::EcgfeatTree,
        Scenario::WaveDeep,
        Scenario::EcgfeatRoutineTree,
        Scenario::WaveRoutineDeep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::RoutineTree => "routine_tree",
            Scenario::EcgfeatTree => "ecgfeat_tree",
            Scenario::WaveDeep => "wave_deep",
            Scenario::EcgfeatRoutineTree => "ecgfeat_routine_tree",
            Scenario::WaveRoutineDeep => "wave_routine_deep",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Scenario::RoutineTree => "Clinical routine data (tree)",
            Scenario::EcgfeatTree => "ECG features (tree)",
            Scenario::WaveDeep => "ECG waveforms (deep)",
            Scenario::EcgfeatRoutineTree => "ECG features + clinical routine data (tree)",
            Scenario::WaveRoutineDeep => "ECG waveforms + clinical routine data (deep)",
        }
    }

    pub fn spec(self) -> ModelSpec {
        match self {
            Scenario::RoutineTree => ModelSpec::Tree { routine: true, ecg: false },
            Scenario::EcgfeatTree => ModelSpec::Tree { routine: false, ecg: true },
            Scenario::EcgfeatRoutineTree => ModelSpec::Tree { routine: true, ecg: true },
            Scenario::WaveDeep => ModelSpec::Deep {
                modality: Modality::Waveform,
            },
            Scenario::WaveRoutineDeep => ModelSpec::Deep {
                modality: Modality::Fusion,
            },
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL.into_iter().find(|v| v.name() == s).ok_or_else(|| {
            let known: Vec<_> = Scenario::ALL.iter().map(|v| v.name()).collect();
            Error::Config(format!("unknown scenario `{s}` (expected one of {})", known.join(", ")))
        })
    }
}

/// Model family and inputs. Scenarios map onto this; the tabular-only deep
/// model is reachable only through it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelSpec {
    Tree { routine: bool, ecg: bool },
    Deep { modality: Modality },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    #[default]
    Desk,
    Paper,
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            _ => Err(Error::Config(format!("unknown profile `{s}` (expected desk or paper)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub tree: TreeConfig,
    pub deep: DeepModelConfig,
    /// Append missingness indicators to imputed numeric inputs.
    pub mask_columns: bool,
    /// Trees see imputed values (plus masks) instead of raw NaNs.
    pub impute_trees: bool,
    /// Restrict tree fitting to these labels; the rest are skipped.
    pub tree_labels: Option<Vec<String>>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::for_profile(Profile::Desk)
    }
}

impl ModelConfig {
    pub fn for_profile(p: Profile) -> Self {
        Self {
            tree: TreeConfig::default(),
            deep: match p {
                Profile::Desk => DeepModelConfig::desk(),
                Profile::Paper => DeepModelConfig::paper(),
            },
            mask_columns: true,
            impute_trees: false,
            tree_labels: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.tree.validate()?;
        self.deep.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
            let json = serde_json::to_string(&s).unwrap();
            assert_eq!(json, format!("\"{}\"", s.name()));
        }
        let err = "wave_tree".parse::<Scenario>().unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn paper_profile_matches_reference_hyperparameters() {
        let d = ModelConfig::for_profile(Profile::Paper).deep;
        assert_eq!((d.n_blocks, d.d_model, d.d_state, d.batch_size, d.epochs), (4, 512, 8, 64, 20));
        assert_eq!((d.lr, d.weight_decay), (0.001, 0.001));
        let t = TreeConfig::default();
        assert_eq!((t.n_trees, t.max_depth, t.eta), (100, 6, 0.3));
    }
}
