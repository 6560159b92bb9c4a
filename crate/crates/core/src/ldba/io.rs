use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{mask_text, EpsilonEdge, Guard, Ldba, LdbaError, Result};
use crate::logic::LabelSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionSpec {
    pub from: String,
    pub guard: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonSpec {
    pub from: String,
    pub to: String,
    pub name: String,
}

/// On-disk automaton description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdbaFile {
    pub states: Vec<String>,
    pub aps: Vec<String>,
    pub initial: String,
    pub accepting: Vec<String>,
    pub initial_component: Vec<String>,
    pub accepting_component: Vec<String>,
    pub transitions: Vec<TransitionSpec>,
    #[serde(default)]
    pub epsilon: Vec<EpsilonSpec>,
}

impl LdbaFile {
    pub fn into_ldba(self) -> Result<Ldba> {
        let n = self.states.len();
        let k = self.aps.len();
        if k > super::MAX_APS {
            return Err(LdbaError::Format(format!(
                "{k} propositions; at most {} are supported",
                super::MAX_APS
            )));
        }
        let idx = |s: &str| -> Result<usize> {
            self.states
                .iter()
                .position(|x| x == s)
                .ok_or_else(|| LdbaError::Format(format!("unknown state `{s}`")))
        };
        let idx_all = |v: &[String]| v.iter().map(|s| idx(s)).collect::<Result<Vec<_>>>();

        let initial = idx(&self.initial)?;
        let accepting = idx_all(&self.accepting)?;
        let q_i = idx_all(&self.initial_component)?;
        let q_a = idx_all(&self.accepting_component)?;

        let mut problems = Vec::new();
        for q in 0..n {
            match (q_i.contains(&q), q_a.contains(&q)) {
                (true, true) => problems.push(format!(
                    "state `{}` is in both the initial and the accepting component",
                    self.states[q]
                )),
                (false, false) => problems.push(format!(
                    "state `{}` is in neither component",
                    self.states[q]
                )),
                _ => {}
            }
        }

        let masks = 1usize << k;
        let mut step: Vec<Vec<Option<usize>>> = vec![vec![None; masks]; n];
        for t in &self.transitions {
            let from = idx(&t.from)?;
            let to = idx(&t.to)?;
            let guard = Guard::parse(&t.guard, &self.aps)?;
            for m in guard.models(k) {
                let cell = &mut step[from][m.0 as usize];
                match *cell {
                    Some(prev) => problems.push(format!(
                        "state `{}` has overlapping guards on label {} (to `{}` and `{}`)",
                        self.states[from],
                        mask_text(&self.aps, m),
                        self.states[prev],
                        self.states[to]
                    )),
                    _ => *cell = Some(to),
                }
            }
        }
        let mut table = Vec::with_capacity(n);
        for (q, row) in step.iter().enumerate() {
            let mut out = Vec::with_capacity(masks);
            for (m, cell) in row.iter().enumerate() {
                out.push(cell.unwrap_or_else(|| {
                    problems.push(format!(
                        "state `{}` has no transition on label {}",
                        self.states[q],
                        mask_text(&self.aps, LabelSet(m as u64))
                    ));
                    q
                }));
            }
            table.push(out);
        }

        let epsilon = self
            .epsilon
            .iter()
            .map(|e| {
                Ok(EpsilonEdge {
                    from: idx(&e.from)?,
                    to: idx(&e.to)?,
                    name: e.name.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let built = Ldba::from_parts(
            self.states,
            self.aps,
            initial,
            accepting,
            q_a,
            table,
            epsilon,
        );
        match built {
            Ok(a) if problems.is_empty() => Ok(a),
            Ok(_) => Err(LdbaError::Validation(problems)),
            Err(LdbaError::Validation(more)) => {
                problems.extend(more);
                Err(LdbaError::Validation(problems))
            }
            Err(e) => Err(e),
        }
    }

    /// Describes `aut`, grouping label moves by target state.
    pub fn from_ldba(aut: &Ldba) -> Self {
        let names = |v: Vec<usize>| v.into_iter().map(|q| aut.states[q].clone()).collect();
        let n = aut.n_states();
        let mut transitions = Vec::new();
        for q in 0..n {
            let mut targets: Vec<usize> = aut.step[q].clone();
            targets.sort_unstable();
            targets.dedup();
            for to in targets {
                let masks: Vec<LabelSet> = (0..aut.n_labels())
                    .filter(|&m| aut.step[q][m] == to)
                    .map(|m| LabelSet(m as u64))
                    .collect();
                transitions.push(TransitionSpec {
                    from: aut.states[q].clone(),
                    guard: Guard::text_for(&masks, &aut.aps),
                    to: aut.states[to].clone(),
                });
            }
        }
        LdbaFile {
            states: aut.states.clone(),
            aps: aut.aps.clone(),
            initial: aut.states[aut.initial].clone(),
            accepting: names(aut.accepting_states()),
            initial_component: names((0..n).filter(|&q| !aut.accepting_component[q]).collect()),
            accepting_component: names((0..n).filter(|&q| aut.accepting_component[q]).collect()),
            transitions,
            epsilon: aut
                .epsilon
                .iter()
                .map(|e| EpsilonSpec {
                    from: aut.states[e.from].clone(),
                    to: aut.states[e.to].clone(),
                    name: e.name.clone(),
                })
                .collect(),
        }
    }
}

impl Ldba {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: LdbaFile =
            serde_json::from_str(text).map_err(|e| LdbaError::Format(e.to_string()))?;
        file.into_ldba()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// Pretty JSON accepted by [`Ldba::from_json_str`].
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&LdbaFile::from_ldba(self)).expect("automaton serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ldba::{template_automaton, TemplateKind};

    const FIG2: &str = r#"{
        "states": ["q0", "q1", "q2", "q3", "q4"],
        "aps": ["safe1", "goal2"],
        "initial": "q0",
        "accepting": ["q1", "q3"],
        "initial_component": ["q0"],
        "accepting_component": ["q1", "q2", "q3", "q4"],
        "transitions": [
            {"from": "q0", "guard": "true", "to": "q0"},
            {"from": "q1", "guard": "safe1", "to": "q1"},
            {"from": "q1", "guard": "!safe1", "to": "q2"},
            {"from": "q2", "guard": "true", "to": "q2"},
            {"from": "q3", "guard": "goal2", "to": "q3"},
            {"from": "q3", "guard": "!goal2", "to": "q4"},
            {"from": "q4", "guard": "true", "to": "q4"}
        ],
        "epsilon": [
            {"from": "q0", "to": "q1", "name": "eps1"},
            {"from": "q0", "to": "q3", "name": "eps2"}
        ]
    }"#;

    #[test]
    fn loads_figure_automaton() {
        let a = Ldba::from_json_str(FIG2).unwrap();
        assert_eq!(a.epsilon_successors(0), vec![1, 3]);
        assert_eq!(a.accepting_states(), vec![1, 3]);
        let goal2 = a.label_of_names(&["goal2"]).unwrap();
        assert_eq!(a.step(3, goal2), 3);
        assert_eq!(a.step(3, LabelSet::EMPTY), 4);
        assert!(a.epsilon_successors(3).is_empty());
        assert_eq!(
            a,
            template_automaton(TemplateKind::FgOrFg, &["safe1", "goal2"]).unwrap()
        );
    }

    #[test]
    fn round_trip() {
        let a = Ldba::from_json_str(FIG2).unwrap();
        let b = Ldba::from_json_str(&a.to_json_string()).unwrap();
        assert_eq!(a, b);
    }

    fn validation(text: &str) -> Vec<String> {
        match Ldba::from_json_str(text) {
            Err(LdbaError::Validation(v)) => v,
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_epsilon_in_accepting_component() {
        let bad = FIG2.replace(
            r#"{"from": "q0", "to": "q3", "name": "eps2"}"#,
            r#"{"from": "q0", "to": "q3", "name": "eps2"}, {"from": "q3", "to": "q1", "name": "eps3"}"#,
        );
        let p = validation(&bad);
        assert_eq!(p.len(), 1);
        assert!(p[0].contains("`q3`"));
    }

    #[test]
    fn rejects_overlap_and_gaps() {
        let overlap = FIG2.replace(
            r#""guard": "!safe1", "to": "q2""#,
            r#""guard": "true", "to": "q2""#,
        );
        let p = validation(&overlap);
        assert!(p.iter().all(|m| m.contains("overlapping")), "{p:?}");
        assert_eq!(p.len(), 2);

        let gap = FIG2.replace(
            r#""guard": "!goal2", "to": "q4""#,
            r#""guard": "false", "to": "q4""#,
        );
        let p = validation(&gap);
        assert_eq!(p.len(), 2, "{p:?}");
        assert!(p.iter().all(|m| m.contains("no transition")));
    }

    #[test]
    fn rejects_broken_bipartition() {
        let bad = FIG2.replace(
            r#""initial_component": ["q0"]"#,
            r#""initial_component": ["q0", "q2"]"#,
        );
        let p = validation(&bad);
        assert!(p[0].contains("both"), "{p:?}");
        assert!(Ldba::from_json_str(
            &FIG2.replace("\"q0\", \"q1\", \"q2\"", "\"q0\", \"q1\", \"qq\"")
        )
        .is_err());
        assert!(matches!(
            Ldba::from_json_str("{\"states\": []"),
            Err(LdbaError::Format(_))
        ));
    }
}
