use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{EpsilonEdge, Ldba, LdbaError, Result};
use crate::logic::Formula;

/// Formula shapes with a built-in automaton.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemplateKind {
    /// `true`; one accepting state.
    Universal,
    /// `G F f`
    Gf,
    /// `F G f`
    Fg,
    /// `F G f | F G g`
    FgOrFg,
}

impl TemplateKind {
    pub fn arity(self) -> usize {
        match self {
            TemplateKind::Universal => 0,
            TemplateKind::Gf | TemplateKind::Fg => 1,
            TemplateKind::FgOrFg => 2,
        }
    }
}

impl FromStr for TemplateKind {
    type Err = LdbaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "universal" | "true" => Ok(TemplateKind::Universal),
            "gf" => Ok(TemplateKind::Gf),
            "fg" => Ok(TemplateKind::Fg),
            "fg-or-fg" | "fgorfg" => Ok(TemplateKind::FgOrFg),
            _ => Err(LdbaError::UnsupportedPattern(format!(
                "unknown template `{s}` (expected universal, gf, fg or fg-or-fg)"
            ))),
        }
    }
}

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// The standard automaton for a template over the given proposition names.
///
/// * `GF f`: `q0 -f-> q1`, `q1 -f-> q1`, `q1 -!f-> q0`, `q0 -!f-> q0`;
///   both states form the accepting component and `q1` is accepting.
/// * `FG f`: `q0` waits on every label and guesses with ε into `q1`, which
///   stays on `f` and falls into the trap `q2` otherwise.
/// * `FG f | FG g`: one waiting state with two ε-branches, each into an
///   `FG` component of its own.
pub fn template_automaton(kind: TemplateKind, aps: &[&str]) -> Result<Ldba> {
    if aps.len() != kind.arity() {
        return Err(LdbaError::UnsupportedPattern(format!(
            "{kind:?} takes {} proposition(s), got {}",
            kind.arity(),
            aps.len()
        )));
    }
    if aps.len() == 2 && aps[0] == aps[1] {
        return Err(LdbaError::UnsupportedPattern(format!(
            "propositions must be distinct, got `{}` twice",
            aps[0]
        )));
    }
    let eps = |from, to, name: &str| EpsilonEdge {
        from,
        to,
        name: name.into(),
    };
    match kind {
        TemplateKind::Universal => Ldba::from_parts(
            names(&["q0"]),
            vec![],
            0,
            vec![0],
            vec![0],
            vec![vec![0]],
            vec![],
        ),
        // masks: 0 = {}, 1 = {f}
        TemplateKind::Gf => Ldba::from_parts(
            names(&["q0", "q1"]),
            names(aps),
            0,
            vec![1],
            vec![0, 1],
            vec![vec![0, 1], vec![0, 1]],
            vec![],
        ),
        TemplateKind::Fg => Ldba::from_parts(
            names(&["q0", "q1", "q2"]),
            names(aps),
            0,
            vec![1],
            vec![1, 2],
            vec![vec![0, 0], vec![2, 1], vec![2, 2]],
            vec![eps(0, 1, "eps1")],
        ),
        // masks: 0 = {}, 1 = {f}, 2 = {g}, 3 = {f, g}
        TemplateKind::FgOrFg => Ldba::from_parts(
            names(&["q0", "q1", "q2", "q3", "q4"]),
            names(aps),
            0,
            vec![1, 3],
            vec![1, 2, 3, 4],
            vec![
                vec![0, 0, 0, 0],
                vec![2, 1, 2, 1],
                vec![2, 2, 2, 2],
                vec![4, 4, 3, 3],
                vec![4, 4, 4, 4],
            ],
            vec![eps(0, 1, "eps1"), eps(0, 3, "eps2")],
        ),
    }
}

/// Recognises the template shapes in a parsed formula. Returns the kind and
/// the proposition names in automaton order.
pub fn template_for_formula(phi: &Formula) -> Result<(TemplateKind, Vec<String>)> {
    use Formula::*;
    fn fg(f: &Formula) -> Option<String> {
        match f {
            Eventually(None, inner) => match &**inner {
                Always(None, p) => match &**p {
                    Ap(p) => Some(p.name().to_string()),
                    _ => None,
                },
                _ => None,
            },
            _ => None,
        }
    }
    match phi {
        True => return Ok((TemplateKind::Universal, vec![])),
        Always(None, inner) => {
            if let Eventually(None, p) = &**inner {
                if let Ap(p) = &**p {
                    return Ok((TemplateKind::Gf, vec![p.name().to_string()]));
                }
            }
        }
        Or(a, b) => {
            if let (Some(f), Some(g)) = (fg(a), fg(b)) {
                if f != g {
                    return Ok((TemplateKind::FgOrFg, vec![f, g]));
                }
                return Ok((TemplateKind::Fg, vec![f]));
            }
        }
        _ => {
            if let Some(f) = fg(phi) {
                return Ok((TemplateKind::Fg, vec![f]));
            }
        }
    }
    Err(LdbaError::UnsupportedPattern(format!(
        "`{phi}` is not one of true, G F f, F G f, F G f | F G g; supply an automaton file"
    )))
}
