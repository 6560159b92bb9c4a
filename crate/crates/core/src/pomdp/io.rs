//! JSON model files.
//!
//! ```json
//! {
//!   "states": ["s1", "s2"],
//!   "actions": ["a"],
//!   "observations": ["o1", "o2"],
//!   "transition": {"s1": {"a": {"s1": 1.0}}, "s2": {"a": {"s2": 1.0}}},
//!   "observation_model": {"s1": {"o1": 0.8, "o2": 0.2}, "s2": {"o1": 0.4, "o2": 0.6}},
//!   "initial": {"s1": 0.5, "s2": 0.5},
//!   "reward": {"s1": {"a": 1.0}, "s2": 0.0},
//!   "discount": 0.9
//! }
//! ```
//!
//! Missing probability entries are zero. A reward given as a bare number
//! applies to every action in that state. Values are never renormalized;
//! run [`Pomdp::validate`] on the result.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Pomdp, PomdpError, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PomdpFile {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub observations: Vec<String>,
    pub transition: BTreeMap<String, BTreeMap<String, BTreeMap<String, f64>>>,
    pub observation_model: BTreeMap<String, BTreeMap<String, f64>>,
    pub initial: BTreeMap<String, f64>,
    pub reward: BTreeMap<String, RewardEntry>,
    pub discount: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RewardEntry {
    Constant(f64),
    PerAction(BTreeMap<String, f64>),
}

fn index_of(names: &[String], what: &str) -> Result<BTreeMap<String, usize>> {
    let mut seen = HashSet::new();
    let mut out = BTreeMap::new();
    for (i, n) in names.iter().enumerate() {
        if !seen.insert(n) {
            return Err(PomdpError::Format(format!("duplicate {what} `{n}`")));
        }
        out.insert(n.clone(), i);
    }
    Ok(out)
}

fn lookup(map: &BTreeMap<String, usize>, key: &str, what: &str) -> Result<usize> {
    map.get(key)
        .copied()
        .ok_or_else(|| PomdpError::Format(format!("unknown {what} `{key}`")))
}

impl PomdpFile {
    pub fn into_model(self) -> Result<Pomdp> {
        let si = index_of(&self.states, "state")?;
        let ai = index_of(&self.actions, "action")?;
        let oi = index_of(&self.observations, "observation")?;
        let (n, m, l) = (
            self.states.len(),
            self.actions.len(),
            self.observations.len(),
        );

        let mut t = vec![vec![vec![0.0; n]; m]; n];
        for (s, by_action) in &self.transition {
            let s = lookup(&si, s, "state")?;
            for (a, dist) in by_action {
                let a = lookup(&ai, a, "action")?;
                for (s2, p) in dist {
                    t[s][a][lookup(&si, s2, "state")?] = *p;
                }
            }
        }
        let mut omega = vec![vec![0.0; l]; n];
        for (s, dist) in &self.observation_model {
            let s = lookup(&si, s, "state")?;
            for (o, p) in dist {
                omega[s][lookup(&oi, o, "observation")?] = *p;
            }
        }
        let mut p0 = vec![0.0; n];
        for (s, p) in &self.initial {
            p0[lookup(&si, s, "state")?] = *p;
        }
        let mut r = vec![vec![None; m]; n];
        for (s, entry) in &self.reward {
            let s = lookup(&si, s, "state")?;
            match entry {
                RewardEntry::Constant(c) => r[s].iter_mut().for_each(|x| *x = Some(*c)),
                RewardEntry::PerAction(by_action) => {
                    for (a, v) in by_action {
                        r[s][lookup(&ai, a, "action")?] = Some(*v);
                    }
                }
            }
        }
        let mut reward = vec![vec![0.0; m]; n];
        for s in 0..n {
            for a in 0..m {
                reward[s][a] = r[s][a].ok_or_else(|| {
                    PomdpError::Format(format!(
                        "missing reward for ({}, {})",
                        self.states[s], self.actions[a]
                    ))
                })?;
            }
        }
        Pomdp::from_dense(
            self.states,
            self.actions,
            self.observations,
            t,
            omega,
            p0,
            reward,
            self.discount,
        )
    }

    pub fn from_model(model: &Pomdp) -> Self {
        let mut transition = BTreeMap::new();
        let mut observation_model = BTreeMap::new();
        let mut reward = BTreeMap::new();
        for (s, sn) in model.states().iter().enumerate() {
            let mut by_action = BTreeMap::new();
            let mut rewards = BTreeMap::new();
            for (a, an) in model.actions().iter().enumerate() {
                let dist: BTreeMap<_, _> = model
                    .transition_row(s, a)
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| **p != 0.0)
                    .map(|(s2, p)| (model.states()[s2].clone(), *p))
                    .collect();
                by_action.insert(an.clone(), dist);
                rewards.insert(an.clone(), model.reward(s, a));
            }
            transition.insert(sn.clone(), by_action);
            reward.insert(sn.clone(), RewardEntry::PerAction(rewards));
            let dist: BTreeMap<_, _> = (0..model.n_observations())
                .filter(|&o| model.observation_prob(s, o) != 0.0)
                .map(|o| {
                    (
                        model.observations()[o].clone(),
                        model.observation_prob(s, o),
                    )
                })
                .collect();
            observation_model.insert(sn.clone(), dist);
        }
        let initial = model
            .initial()
            .probs()
            .iter()
            .enumerate()
            .filter(|(_, p)| **p != 0.0)
            .map(|(s, p)| (model.states()[s].clone(), *p))
            .collect();
        PomdpFile {
            states: model.states().to_vec(),
            actions: model.actions().to_vec(),
            observations: model.observations().to_vec(),
            transition,
            observation_model,
            initial,
            reward,
            discount: model.discount(),
        }
    }
}

impl Pomdp {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: PomdpFile = serde_json::from_str(text)?;
        file.into_model()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&PomdpFile::from_model(self)).expect("model serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SENSOR: &str = r#"{
        "states": ["s1", "s2"],
        "actions": ["a"],
        "observations": ["o1", "o2"],
        "transition": {"s1": {"a": {"s1": 1.0}}, "s2": {"a": {"s2": 1.0}}},
        "observation_model": {"s1": {"o1": 0.8, "o2": 0.2}, "s2": {"o1": 0.4, "o2": 0.6}},
        "initial": {"s1": 0.5, "s2": 0.5},
        "reward": {"s1": {"a": 1.0}, "s2": 0.0},
        "discount": 0.9
    }"#;

    #[test]
    fn parses_sparse_file() {
        let m = Pomdp::from_json_str(SENSOR).unwrap();
        assert!(m.validate().is_empty());
        assert_eq!(m.transition(0, 0, 1), 0.0);
        assert_eq!(m.observation_prob(1, 1), 0.6);
        assert_eq!(m.reward(0, 0), 1.0);
        assert_eq!(m.discount(), 0.9);
    }

    #[test]
    fn round_trips_through_json() {
        let m = Pomdp::from_json_str(SENSOR).unwrap();
        let again = Pomdp::from_json_str(&m.to_json_string()).unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn rejects_unknown_fields_and_names() {
        let extra = SENSOR.replace("\"discount\"", "\"gamma\": 1, \"discount\"");
        assert!(matches!(
            Pomdp::from_json_str(&extra),
            Err(PomdpError::Json(_))
        ));
        let typo = SENSOR.replace("{\"s1\": 1.0}", "{\"s9\": 1.0}");
        assert!(matches!(
            Pomdp::from_json_str(&typo),
            Err(PomdpError::Format(_))
        ));
        let missing = SENSOR.replace("\"s2\": 0.0", "\"s2\": {}");
        assert!(matches!(
            Pomdp::from_json_str(&missing),
            Err(PomdpError::Format(_))
        ));
    }

    #[test]
    fn no_silent_renormalization() {
        let off = SENSOR.replace("\"o1\": 0.8", "\"o1\": 0.7");
        let m = Pomdp::from_json_str(&off).unwrap();
        assert_eq!(m.observation_prob(0, 0), 0.7);
        assert_eq!(m.validate().len(), 1);
    }
}
