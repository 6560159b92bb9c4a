use super::{LdbaError, Result};
use crate::logic::LabelSet;

/// Boolean expression over the automaton's propositions, indexed by position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Guard {
    True,
    False,
    Ap(usize),
    Not(Box<Guard>),
    And(Box<Guard>, Box<Guard>),
    Or(Box<Guard>, Box<Guard>),
}

impl Guard {
    /// Parses `true`, `false`, names, `!`, `&`, `|` and parentheses.
    pub fn parse(text: &str, aps: &[String]) -> Result<Guard> {
        let mut p = GuardParser {
            src: text,
            pos: 0,
            aps,
        };
        let g = p.or()?;
        p.skip_ws();
        if p.pos != text.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(g)
    }

    pub fn holds(&self, lbl: LabelSet) -> bool {
        match self {
            Guard::True => true,
            Guard::False => false,
            Guard::Ap(i) => lbl.contains(*i),
            Guard::Not(g) => !g.holds(lbl),
            Guard::And(a, b) => a.holds(lbl) && b.holds(lbl),
            Guard::Or(a, b) => a.holds(lbl) || b.holds(lbl),
        }
    }

    /// Every label over `k` propositions satisfying the guard.
    pub fn models(&self, k: usize) -> Vec<LabelSet> {
        LabelSet::all(k).filter(|&m| self.holds(m)).collect()
    }

    /// A guard that holds on exactly the given labels, written as a
    /// disjunction of minterms (`true` when every label is included).
    pub fn text_for(masks: &[LabelSet], aps: &[String]) -> String {
        let k = aps.len();
        if masks.len() == 1 << k {
            return "true".into();
        }
        if masks.is_empty() {
            return "false".into();
        }
        let minterm = |m: LabelSet| {
            let lits: Vec<String> = (0..k)
                .map(|i| {
                    if m.contains(i) {
                        aps[i].clone()
                    } else {
                        format!("!{}", aps[i])
                    }
                })
                .collect();
            if lits.len() == 1 {
                lits[0].clone()
            } else {
                format!("({})", lits.join(" & "))
            }
        };
        masks
            .iter()
            .map(|&m| minterm(m))
            .collect::<Vec<_>>()
            .join(" | ")
    }
}

struct GuardParser<'a> {
    src: &'a str,
    pos: usize,
    aps: &'a [String],
}

impl GuardParser<'_> {
    fn err(&self, msg: &str) -> LdbaError {
        LdbaError::Format(format!("guard `{}` at byte {}: {msg}", self.src, self.pos))
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn or(&mut self) -> Result<Guard> {
        let mut g = self.and()?;
        while self.eat('|') {
            g = Guard::Or(Box::new(g), Box::new(self.and()?));
        }
        Ok(g)
    }

    fn and(&mut self) -> Result<Guard> {
        let mut g = self.not()?;
        while self.eat('&') {
            g = Guard::And(Box::new(g), Box::new(self.not()?));
        }
        Ok(g)
    }

    fn not(&mut self) -> Result<Guard> {
        if self.eat('!') {
            return Ok(Guard::Not(Box::new(self.not()?)));
        }
        if self.eat('(') {
            let g = self.or()?;
            if !self.eat(')') {
                return Err(self.err("expected `)`"));
            }
            return Ok(g);
        }
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let len = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(rest.len());
        if len == 0 {
            return Err(self.err("expected a proposition"));
        }
        let word = &rest[..len];
        let g = match word {
            "true" => Guard::True,
            "false" => Guard::False,
            _ => Guard::Ap(
                self.aps
                    .iter()
                    .position(|a| a == word)
                    .ok_or_else(|| self.err(&format!("unknown proposition `{word}`")))?,
            ),
        };
        self.pos += len;
        Ok(g)
    }
}
