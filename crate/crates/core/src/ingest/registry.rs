//! Canonical variables: 3 biometrics, 6 vitals and 45 labs, with canonical
//! units and outlier bounds. The feature layout is derived from this file.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const BUILTIN: &str = include_str!("../../data/registry.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Biometric,
    Vital,
    Lab,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub display: String,
    pub group: Group,
    /// Canonical unit after conversion.
    pub unit: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    /// Unit the bounds are stated in, when it differs from `unit`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_unit: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RegistryFile {
    statistics: Vec<String>,
    biometrics: Vec<Variable>,
    vitals: Vec<Variable>,
    labs: Vec<Variable>,
}

#[derive(Debug, Clone)]
pub struct VariableRegistry {
    pub statistics: Vec<String>,
    pub biometrics: Vec<Variable>,
    pub vitals: Vec<Variable>,
    pub labs: Vec<Variable>,
    index: HashMap<String, (Group, usize)>,
    hash: String,
}

impl VariableRegistry {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("bundled registry is valid")
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: RegistryFile = serde_json::from_str(text)?;
        let mut index = HashMap::new();
        for (group, vars) in [
            (Group::Biometric, &file.biometrics),
            (Group::Vital, &file.vitals),
            (Group::Lab, &file.labs),
        ] {
            for (i, v) in vars.iter().enumerate() {
                if v.group != group {
                    return Err(Error::Config(format!("variable `{}` listed under the wrong group", v.name)));
                }
                if let (Some(lo), Some(hi)) = (v.lower, v.upper) {
                    if lo >= hi {
                        return Err(Error::Config(format!("variable `{}`: lower bound >= upper", v.name)));
                    }
                }
                if index.insert(v.name.clone(), (group, i)).is_some() {
                    return Err(Error::Config(format!("duplicate variable `{}`", v.name)));
                }
            }
        }
        if file.statistics.is_empty() {
            return Err(Error::Config("registry lists no statistics".into()));
        }
        Ok(Self {
            statistics: file.statistics,
            biometrics: file.biometrics,
            vitals: file.vitals,
            labs: file.labs,
            index,
            hash: hex::encode(Sha256::digest(text.as_bytes())),
        })
    }

    /// SHA-256 of the registry text; recorded in checkpoints.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn get(&self, name: &str) -> Option<&Variable> {
        let (group, i) = *self.index.get(name)?;
        Some(match group {
            Group::Biometric => &self.biometrics[i],
            Group::Vital => &self.vitals[i],
            Group::Lab => &self.labs[i],
        })
    }

    pub fn contains(&self, name: &str, group: Group) -> bool {
        self.index.get(name).is_some_and(|(g, _)| *g == group)
    }

    /// Position of a vital or lab in its group.
    pub fn position(&self, name: &str) -> Option<(Group, usize)> {
        self.index.get(name).copied()
    }
}
