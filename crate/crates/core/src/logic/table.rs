use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{AtomicProposition, LogicError, Result};
use crate::pomdp::Pomdp;

/// One entry of an AP table file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum ApSpec {
    Affine {
        weights: Vec<f64>,
        #[serde(default)]
        offset: f64,
    },
    Indicator {
        indicator: Vec<String>,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default)]
        shift: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl ApSpec {
    pub fn build(&self, name: &str, model: &Pomdp) -> Result<AtomicProposition> {
        match self {
            ApSpec::Affine { weights, offset } => {
                if weights.len() != model.n_states() {
                    return Err(LogicError::DimensionMismatch {
                        name: name.to_string(),
                        expected: model.n_states(),
                        found: weights.len(),
                    });
                }
                Ok(AtomicProposition::affine(name, weights.clone(), *offset))
            }
            ApSpec::Indicator {
                indicator,
                scale,
                shift,
            } => {
                let subset = indicator
                    .iter()
                    .map(|s| {
                        model.state_index(s).ok_or_else(|| {
                            LogicError::Table(format!("`{name}` names unknown state `{s}`"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(AtomicProposition::indicator(
                    name,
                    model.n_states(),
                    &subset,
                    *scale,
                    *shift,
                ))
            }
        }
    }
}

/// Propositions by name, used to resolve identifiers in formulas and
/// automaton alphabets.
#[derive(Debug, Clone, Default)]
pub struct ApTable {
    map: BTreeMap<String, Arc<AtomicProposition>>,
}

impl ApTable {
    pub fn insert(&mut self, ap: AtomicProposition) {
        self.map.insert(ap.name().to_string(), Arc::new(ap));
    }

    pub fn get(&self, name: &str) -> Option<&Arc<AtomicProposition>> {
        self.map.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.map.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// The propositions named by `names`, in that order.
    pub fn select(&self, names: &[String]) -> Result<Vec<AtomicProposition>> {
        names
            .iter()
            .map(|n| {
                self.get(n)
                    .map(|p| (**p).clone())
                    .ok_or_else(|| LogicError::UnknownProposition(n.clone()))
            })
            .collect()
    }

    pub fn from_json_str(text: &str, model: &Pomdp) -> Result<Self> {
        let specs: BTreeMap<String, ApSpec> =
            serde_json::from_str(text).map_err(|e| LogicError::Table(e.to_string()))?;
        let mut table = ApTable::default();
        for (name, spec) in &specs {
            if !is_identifier(name) {
                return Err(LogicError::Table(format!(
                    "`{name}` is not a valid identifier"
                )));
            }
            table.insert(spec.build(name, model)?);
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>, model: &Pomdp) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| LogicError::Table(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text, model)
    }
}

impl FromIterator<AtomicProposition> for ApTable {
    fn from_iter<I: IntoIterator<Item = AtomicProposition>>(iter: I) -> Self {
        let mut t = ApTable::default();
        for ap in iter {
            t.insert(ap);
        }
        t
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !matches!(s, "true" | "false" | "X" | "F" | "G" | "U")
}
