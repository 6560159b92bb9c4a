use super::{ApTable, Bound, Formula, LogicError, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(u32),
    True,
    False,
    Not,
    And,
    Or,
    Implies,
    Next,
    Finally,
    Globally,
    Until,
    LParen,
    RParen,
    LBracket,
    RBracket,
    End,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Num(n) => format!("number {n}"),
        Tok::End => "end of input".into(),
        other => format!("{other:?}"),
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'!' => Tok::Not,
            b'&' => Tok::And,
            b'|' => Tok::Or,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'[' => Tok::LBracket,
            b']' => Tok::RBracket,
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                i += 1;
                Tok::Implies
            }
            b'0'..=b'9' => {
                while i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit() {
                    i += 1;
                }
                let n = text[start..=i].parse().map_err(|_| LogicError::Syntax {
                    offset: start,
                    message: "bound out of range".into(),
                })?;
                Tok::Num(n)
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i + 1 < bytes.len()
                    && (bytes[i + 1].is_ascii_alphanumeric() || bytes[i + 1] == b'_')
                {
                    i += 1;
                }
                match &text[start..=i] {
                    "true" => Tok::True,
                    "false" => Tok::False,
                    "X" => Tok::Next,
                    "F" => Tok::Finally,
                    "G" => Tok::Globally,
                    "U" => Tok::Until,
                    id => Tok::Ident(id.to_string()),
                }
            }
            _ => {
                let ch = text[start..].chars().next().unwrap();
                return Err(LogicError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        out.push((start, tok));
        i += 1;
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    table: &'a ApTable,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if t != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(LogicError::Syntax {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn expect(&mut self, want: Tok) -> Result<()> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            self.error(format!(
                "expected {}, found {}",
                describe(&want),
                describe(self.peek())
            ))
        }
    }

    fn implication(&mut self) -> Result<Formula> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Implies {
            self.bump();
            let rhs = self.implication()?;
            return Ok(lhs.implies(rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula> {
        let mut lhs = self.conjunction()?;
        while *self.peek() == Tok::Or {
            self.bump();
            lhs = lhs.or(self.conjunction()?);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula> {
        let mut lhs = self.until()?;
        while *self.peek() == Tok::And {
            self.bump();
            lhs = lhs.and(self.until()?);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Formula> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::Until {
            self.bump();
            let t = self.bound()?;
            lhs = lhs.until(t, self.unary()?);
        }
        Ok(lhs)
    }

    fn bound(&mut self) -> Result<Bound> {
        if *self.peek() != Tok::LBracket {
            return Ok(None);
        }
        self.bump();
        let t = match self.bump() {
            Tok::Num(n) => n,
            other => {
                self.pos -= 1;
                return self.error(format!("expected a bound, found {}", describe(&other)));
            }
        };
        self.expect(Tok::RBracket)?;
        Ok(Some(t))
    }

    fn unary(&mut self) -> Result<Formula> {
        match self.peek() {
            Tok::Not => {
                self.bump();
                Ok(self.unary()?.not())
            }
            Tok::Next => {
                self.bump();
                Ok(self.unary()?.next())
            }
            Tok::Finally => {
                self.bump();
                let t = self.bound()?;
                Ok(self.unary()?.eventually(t))
            }
            Tok::Globally => {
                self.bump();
                let t = self.bound()?;
                Ok(self.unary()?.always(t))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Formula> {
        let at = self.offset();
        match self.bump() {
            Tok::True => Ok(Formula::True),
            Tok::False => Ok(Formula::True.not()),
            Tok::Ident(name) => match self.table.get(&name) {
                Some(p) => Ok(Formula::Ap(p.clone())),
                None => Err(LogicError::UnknownProposition(name)),
            },
            Tok::LParen => {
                let f = self.implication()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            other => Err(LogicError::Syntax {
                offset: at,
                message: format!("expected a formula, found {}", describe(&other)),
            }),
        }
    }
}

/// Parses a formula, resolving identifiers against `table`.
pub fn parse_formula(text: &str, table: &ApTable) -> Result<Formula> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        table,
    };
    let f = p.implication()?;
    if *p.peek() != Tok::End {
        return p.error(format!("unexpected {}", describe(p.peek())));
    }
    Ok(f)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::logic::AtomicProposition;
    use proptest::prelude::*;

    fn table() -> ApTable {
        let mut t = ApTable::default();
        t.insert(AtomicProposition::indicator("safe1", 2, &[0], -1.0, 0.1));
        t.insert(AtomicProposition::indicator("goal2", 2, &[1], 1.0, -0.8));
        t.insert(AtomicProposition::indicator("a", 2, &[0], 1.0, -0.5));
        t.insert(AtomicProposition::indicator("b", 2, &[1], 1.0, -0.5));
        t
    }

    fn ap(t: &ApTable, n: &str) -> Formula {
        Formula::Ap(t.get(n).unwrap().clone())
    }

    #[test]
    fn example_formula() {
        let t = table();
        let f = parse_formula("F G safe1 | F G goal2", &t).unwrap();
        let want = ap(&t, "safe1")
            .always(None)
            .eventually(None)
            .or(ap(&t, "goal2").always(None).eventually(None));
        assert_eq!(f, want);
    }

    #[test]
    fn leaf_and_bounded_until() {
        let t = table();
        assert_eq!(parse_formula("a", &t).unwrap(), ap(&t, "a"));
        let f = parse_formula("a U[5] b", &t).unwrap();
        assert_eq!(f, ap(&t, "a").until(Some(5), ap(&t, "b")));
        assert_eq!(parse_formula(&f.to_string(), &t).unwrap(), f);
    }

    #[test]
    fn precedence_and_associativity() {
        let t = table();
        let (a, b) = (ap(&t, "a"), ap(&t, "b"));
        assert_eq!(
            parse_formula("!a & b | a -> b -> a", &t).unwrap(),
            a.clone()
                .not()
                .and(b.clone())
                .or(a.clone())
                .implies(b.clone().implies(a.clone()))
        );
        assert_eq!(
            parse_formula("a U b U a", &t).unwrap(),
            a.clone().until(None, b.clone()).until(None, a.clone())
        );
        assert_eq!(
            parse_formula("X a U b & a", &t).unwrap(),
            a.clone().next().until(None, b.clone()).and(a.clone())
        );
        assert_eq!(
            parse_formula("G[2] (a | false)", &t).unwrap(),
            a.or(Formula::True.not()).always(Some(2))
        );
    }

    #[test]
    fn errors() {
        let t = table();
        assert_eq!(
            parse_formula("a & zz", &t),
            Err(LogicError::UnknownProposition("zz".into()))
        );
        assert!(matches!(
            parse_formula("a & ", &t),
            Err(LogicError::Syntax { offset: 4, .. })
        ));
        assert!(matches!(
            parse_formula("a $ b", &t),
            Err(LogicError::Syntax { offset: 2, .. })
        ));
        assert!(matches!(
            parse_formula("F[x] a", &t),
            Err(LogicError::Syntax { offset: 2, .. })
        ));
        assert!(matches!(
            parse_formula("(a", &t),
            Err(LogicError::Syntax { offset: 2, .. })
        ));
        assert!(matches!(
            parse_formula("a b", &t),
            Err(LogicError::Syntax { offset: 2, .. })
        ));
    }

    pub(crate) fn arb_formula(
        names: Vec<&'static str>,
        bounded: bool,
    ) -> impl Strategy<Value = String> {
        let leaf = prop_oneof![prop::sample::select(names), Just("true"), Just("false"),]
            .prop_map(|s| s.to_string());
        let bound = move || {
            prop::option::of(0u32..4).prop_map(move |t| match t {
                Some(t) => format!("[{t}]"),
                None if bounded => "[1]".into(),
                None => String::new(),
            })
        };
        leaf.prop_recursive(4, 32, 2, move |inner| {
            prop_oneof![
                inner.clone().prop_map(|f| format!("!{f}")),
                inner.clone().prop_map(|f| format!("X {f}")),
                (bound(), inner.clone()).prop_map(|(t, f)| format!("F{t} {f}")),
                (bound(), inner.clone()).prop_map(|(t, f)| format!("G{t} ({f})")),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a} & {b}")),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) | {b}")),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} -> {b})")),
                (inner.clone(), bound(), inner).prop_map(|(a, t, b)| format!("({a}) U{t} ({b})")),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn print_parse_round_trip(src in arb_formula(vec!["a", "b", "safe1"], false)) {
            let t = table();
            let f = parse_formula(&src, &t).unwrap();
            let printed = f.to_string();
            let g = parse_formula(&printed, &t).unwrap();
            prop_assert_eq!(&g, &f);
            prop_assert_eq!(g.to_string(), printed);
        }
    }
}
