//! JSON exports of solved value functions.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    AlphaSetFamily, AlphaVector, ProbFamily, Result, SolveReport, ValueError, ValueFunctions,
};
use crate::product::Product;

/// Every family with its vectors per `(q, a)`, plus the solve report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueFile {
    pub reward: AlphaSetFamily,
    pub prob: ProbFamily,
    pub safe_threshold: f64,
    pub constrained: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<SolveReport>,
}

impl ValueFile {
    pub fn new(values: &ValueFunctions, report: Option<SolveReport>) -> Self {
        ValueFile {
            reward: values.reward.clone(),
            prob: values.prob.clone(),
            safe_threshold: values.safe_threshold,
            constrained: values.constrained,
            report,
        }
    }

    pub fn into_values(self) -> ValueFunctions {
        ValueFunctions {
            reward: self.reward,
            prob: self.prob,
            safe_threshold: self.safe_threshold,
            constrained: self.constrained,
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("value file serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string() + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyEntry {
    pub q: usize,
    pub state: String,
    /// `Θ_q`; each vector names its owning action.
    pub vectors: Vec<AlphaVector>,
}

/// What the greedy safe policy needs: `Θ_q` of the reward family per
/// automaton state, and the probability family for the safe sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyFile {
    pub actions: Vec<String>,
    pub epsilon_actions: Vec<String>,
    pub entries: Vec<PolicyEntry>,
    pub prob: ProbFamily,
    pub safe_threshold: f64,
    pub constrained: bool,
}

impl PolicyFile {
    pub fn new(product: &Product, values: &ValueFunctions) -> Self {
        let aut = product.automaton();
        PolicyFile {
            actions: product.model().actions().to_vec(),
            epsilon_actions: aut.epsilon_edges().iter().map(|e| e.name.clone()).collect(),
            entries: (0..aut.n_states())
                .map(|q| PolicyEntry {
                    q,
                    state: aut.state_name(q).to_string(),
                    vectors: values.reward.theta_q(q).cloned().collect(),
                })
                .collect(),
            prob: values.prob.clone(),
            safe_threshold: values.safe_threshold,
            constrained: values.constrained,
        }
    }

    /// Rebuilds the value functions, checking the action names against
    /// `product`.
    pub fn into_values(self, product: &Product) -> Result<ValueFunctions> {
        if self.actions != product.model().actions() {
            return Err(ValueError::Format(format!(
                "policy was written for actions {:?}, model has {:?}",
                self.actions,
                product.model().actions()
            )));
        }
        if self.entries.len() != product.n_automaton_states() {
            return Err(ValueError::Format(format!(
                "policy covers {} automaton states, automaton has {}",
                self.entries.len(),
                product.n_automaton_states()
            )));
        }
        let mut reward = AlphaSetFamily::default();
        for e in self.entries {
            for v in e.vectors {
                if v.owner_q != e.q || v.theta.len() != product.model().n_states() {
                    return Err(ValueError::Format(format!(
                        "malformed vector under automaton state {}",
                        e.q
                    )));
                }
                reward.push(v);
            }
        }
        Ok(ValueFunctions {
            reward,
            prob: self.prob,
            safe_threshold: self.safe_threshold,
            constrained: self.constrained,
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("policy file serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string() + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}
