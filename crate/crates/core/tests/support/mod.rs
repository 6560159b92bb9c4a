//! Independent oracles shared by the integration tests. Nothing here calls
//! into the solver, the learner or the formula evaluator; models are read
//! straight from their JSON files.
#![allow(dead_code)]

pub mod grid;
pub mod logic;
pub mod mdp;

use std::path::PathBuf;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use iltl_pomdp::ldba::{template_automaton, TemplateKind};
use iltl_pomdp::logic::ApTable;
use iltl_pomdp::pomdp::Pomdp;
use iltl_pomdp::product::Product;

pub fn bundle_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../bundles")
        .join(name)
}

pub fn load_model(name: &str) -> Pomdp {
    Pomdp::load(bundle_dir(name).join("model.json")).unwrap()
}

/// Product of a bundle with a template automaton over the named APs.
pub fn bundle_product(name: &str, kind: TemplateKind, aps: &[&str]) -> Product {
    let model = load_model(name);
    let table = ApTable::load(bundle_dir(name).join("aps.json"), &model).unwrap();
    Product::from_table(model, template_automaton(kind, aps).unwrap(), &table).unwrap()
}

/// Dense tables read directly from a model file.
#[derive(Debug, Clone)]
pub struct RawModel {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub observations: Vec<String>,
    /// `t[s][a][s2]`
    pub t: Vec<Vec<Vec<f64>>>,
    /// `o[s2][o]`
    pub o: Vec<Vec<f64>>,
    /// `r[s][a]`
    pub r: Vec<Vec<f64>>,
    pub init: Vec<f64>,
    pub gamma: f64,
}

fn names(v: &Value) -> Vec<String> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_str().unwrap().to_string())
        .collect()
}

fn dist(v: &Value, names: &[String]) -> Vec<f64> {
    let obj = v.as_object().unwrap();
    names
        .iter()
        .map(|n| obj.get(n).map_or(0.0, |x| x.as_f64().unwrap()))
        .collect()
}

impl RawModel {
    pub fn read(name: &str) -> RawModel {
        let text = std::fs::read_to_string(bundle_dir(name).join("model.json")).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        let states = names(&v["states"]);
        let actions = names(&v["actions"]);
        let observations = names(&v["observations"]);
        let t = states
            .iter()
            .map(|s| {
                actions
                    .iter()
                    .map(|a| dist(&v["transition"][s][a], &states))
                    .collect()
            })
            .collect();
        let o = states
            .iter()
            .map(|s| dist(&v["observation_model"][s], &observations))
            .collect();
        let r = states
            .iter()
            .map(|s| {
                let row = &v["reward"][s];
                actions
                    .iter()
                    .map(|a| row.as_f64().unwrap_or_else(|| row[a].as_f64().unwrap()))
                    .collect()
            })
            .collect();
        RawModel {
            init: dist(&v["initial"], &states),
            gamma: v["discount"].as_f64().unwrap(),
            states,
            actions,
            observations,
            t,
            o,
            r,
        }
    }

    pub fn to_pomdp(&self) -> Pomdp {
        Pomdp::from_dense(
            self.states.clone(),
            self.actions.clone(),
            self.observations.clone(),
            self.t.clone(),
            self.o.clone(),
            self.init.clone(),
            self.r.clone(),
            self.gamma,
        )
        .unwrap()
    }

    pub fn n(&self) -> usize {
        self.states.len()
    }

    /// `Pr(o | b, a)`
    pub fn likelihood(&self, b: &[f64], a: usize, o: usize) -> f64 {
        let mut z = 0.0;
        for s2 in 0..self.n() {
            for s in 0..self.n() {
                z += self.o[s2][o] * self.t[s][a][s2] * b[s];
            }
        }
        z
    }

    /// Bayes' rule written out term by term.
    pub fn update(&self, b: &[f64], a: usize, o: usize) -> Vec<f64> {
        let n = self.n();
        let mut num = vec![0.0; n];
        for s2 in 0..n {
            let mut acc = 0.0;
            for s in 0..n {
                acc += self.t[s][a][s2] * b[s];
            }
            num[s2] = self.o[s2][o] * acc;
        }
        let den: f64 = (0..n)
            .map(|s2| {
                let mut acc = 0.0;
                for s in 0..n {
                    acc += self.t[s][a][s2] * b[s];
                }
                self.o[s2][o] * acc
            })
            .sum();
        num.into_iter().map(|x| x / den).collect()
    }
}

/// AP functionals read directly from an AP file: `(name, weights, offset)`.
pub fn read_aps(name: &str, model: &RawModel) -> Vec<(String, Vec<f64>, f64)> {
    let text = std::fs::read_to_string(bundle_dir(name).join("aps.json")).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    v.as_object()
        .unwrap()
        .iter()
        .map(|(k, spec)| {
            if let Some(w) = spec.get("weights") {
                let w = w
                    .as_array()
                    .unwrap()
                    .iter()
                    .map(|x| x.as_f64().unwrap())
                    .collect();
                let off = spec.get("offset").and_then(Value::as_f64).unwrap_or(0.0);
                (k.clone(), w, off)
            } else {
                let scale = spec.get("scale").and_then(Value::as_f64).unwrap_or(1.0);
                let shift = spec.get("shift").and_then(Value::as_f64).unwrap_or(0.0);
                let mut w = vec![0.0; model.n()];
                for s in names(&spec["indicator"]) {
                    w[model.states.iter().position(|x| *x == s).unwrap()] = scale;
                }
                (k.clone(), w, shift)
            }
        })
        .collect()
}

/// Uniform point of the simplex.
pub fn simplex(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|x| x / z).collect()
}

/// A distribution that is sparse about a third of the time.
pub fn rough_dist(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut p = simplex(n, rng);
    if n > 1 && rng.gen_bool(0.35) {
        let k = rng.gen_range(0..n);
        p[k] = 0.0;
        let z: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= z);
    }
    p
}

pub fn random_raw(
    rng: &mut ChaCha8Rng,
    max_states: usize,
    max_actions: usize,
    max_obs: usize,
) -> RawModel {
    let n = rng.gen_range(2..=max_states);
    let m = rng.gen_range(1..=max_actions);
    let l = rng.gen_range(1..=max_obs);
    RawModel {
        states: (0..n).map(|i| format!("s{i}")).collect(),
        actions: (0..m).map(|i| format!("a{i}")).collect(),
        observations: (0..l).map(|i| format!("o{i}")).collect(),
        t: (0..n)
            .map(|_| (0..m).map(|_| rough_dist(n, rng)).collect())
            .collect(),
        o: (0..n).map(|_| rough_dist(l, rng)).collect(),
        r: (0..n)
            .map(|_| (0..m).map(|_| rng.gen_range(-5.0..5.0)).collect())
            .collect(),
        init: simplex(n, rng),
        gamma: rng.gen_range(0.5..0.95),
    }
}
