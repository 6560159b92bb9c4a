//! Literal iLTL semantics on materialized trace shifts, formula enumeration
//! and lasso-word semantics of the template patterns.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use iltl_pomdp::ldba::{lasso_accepted, LassoRun, Ldba, TemplateKind};
use iltl_pomdp::logic::{ApTable, AtomicProposition, Formula, LabelSet};
use iltl_pomdp::pomdp::Belief;

/// `a` holds iff `b(s0) > 1/4`, `g` iff `b(s1) > 1/4`.
pub const WEIGHTS: [(&str, [f64; 3], f64); 2] =
    [("a", [1.0, 0.0, 0.0], -0.25), ("g", [0.0, 1.0, 0.0], -0.25)];

pub fn table() -> ApTable {
    WEIGHTS
        .iter()
        .map(|(n, w, off)| AtomicProposition::affine(*n, w.to_vec(), *off))
        .collect()
}

/// A belief whose label is the letter `m` (bit 0 = a, bit 1 = g).
pub fn letter_belief(m: usize) -> Vec<f64> {
    match m {
        0 => vec![0.0, 0.0, 1.0],
        1 => vec![0.5, 0.0, 0.5],
        2 => vec![0.0, 0.5, 0.5],
        _ => vec![0.5, 0.5, 0.0],
    }
}

pub fn trace(letters: &[usize]) -> Vec<Vec<f64>> {
    letters.iter().map(|&m| letter_belief(m)).collect()
}

pub fn to_beliefs(sigma: &[Vec<f64>]) -> Vec<Belief> {
    sigma
        .iter()
        .map(|b| Belief::new(b.clone()).unwrap())
        .collect()
}

fn ap_holds(name: &str, b: &[f64]) -> bool {
    let (_, w, off) = WEIGHTS.iter().find(|(n, _, _)| *n == name).unwrap();
    w.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() + off > 0.0
}

fn shift(sigma: &[Vec<f64>], t: usize) -> Vec<Vec<f64>> {
    assert!(
        t < sigma.len(),
        "shift {t} beyond a trace of length {}",
        sigma.len()
    );
    sigma[t..].to_vec()
}

/// `σ ⊨ φ` by the definitions, building every shifted trace `σ^[t]`.
pub fn sat(phi: &Formula, sigma: &[Vec<f64>]) -> bool {
    use Formula::*;
    match phi {
        True => true,
        Ap(p) => ap_holds(p.name(), &sigma[0]),
        Not(f) => !sat(f, sigma),
        And(a, b) => sat(a, sigma) & sat(b, sigma),
        Or(a, b) => !(!sat(a, sigma) & !sat(b, sigma)),
        Implies(a, b) => !sat(a, sigma) | sat(b, sigma),
        Next(f) => sat(f, &shift(sigma, 1)),
        Until(k, a, b) => {
            let k = k.expect("bounded formula") as usize;
            let rhs: Vec<bool> = (0..=k).map(|t| sat(b, &shift(sigma, t))).collect();
            let lhs: Vec<bool> = (0..=k).map(|t| sat(a, &shift(sigma, t))).collect();
            (0..=k).any(|t| rhs[t] && (0..t).all(|u| lhs[u]))
        }
        Eventually(k, f) => sat(&Until(*k, Box::new(True), f.clone()), sigma),
        Always(k, f) => !sat(&Eventually(*k, Box::new(Not(f.clone()))), sigma),
    }
}

/// Furthest position the definitions look at.
pub fn reach(phi: &Formula) -> usize {
    use Formula::*;
    match phi {
        True | Ap(_) => 0,
        Not(f) => reach(f),
        And(a, b) | Or(a, b) | Implies(a, b) => reach(a).max(reach(b)),
        Next(f) => 1 + reach(f),
        Until(k, a, b) => k.unwrap() as usize + reach(a).max(reach(b)),
        Eventually(k, f) | Always(k, f) => k.unwrap() as usize + reach(f),
    }
}

pub fn leaves(t: &ApTable) -> Vec<Formula> {
    vec![
        Formula::True,
        Formula::Ap(t.get("a").unwrap().clone()),
        Formula::Ap(t.get("g").unwrap().clone()),
    ]
}

pub const BOUNDS: [u32; 3] = [0, 1, 2];

fn unary(f: &Formula) -> Vec<Formula> {
    let mut out = vec![f.clone().not(), f.clone().next()];
    for k in BOUNDS {
        out.push(f.clone().eventually(Some(k)));
        out.push(f.clone().always(Some(k)));
    }
    out
}

fn binary(a: &Formula, b: &Formula) -> Vec<Formula> {
    let mut out = vec![
        a.clone().and(b.clone()),
        a.clone().or(b.clone()),
        a.clone().implies(b.clone()),
    ];
    for k in BOUNDS {
        out.push(a.clone().until(Some(k), b.clone()));
    }
    out
}

/// All formulas of depth at most `depth` (leaves have depth 1).
pub fn enumerate(t: &ApTable, depth: usize) -> Vec<Formula> {
    let mut all = leaves(t);
    for _ in 1..depth {
        let prev = all.clone();
        let mut next = leaves(t);
        for f in &prev {
            next.extend(unary(f));
        }
        for a in &prev {
            for b in &prev {
                next.extend(binary(a, b));
            }
        }
        all = next;
    }
    all
}

/// A random bounded formula of depth exactly `depth`.
pub fn random_formula(t: &ApTable, depth: usize, rng: &mut ChaCha8Rng) -> Formula {
    let ls = leaves(t);
    if depth == 1 {
        return ls[rng.gen_range(0..ls.len())].clone();
    }
    let sub = |rng: &mut ChaCha8Rng, exact: bool| {
        let d = if exact {
            depth - 1
        } else {
            rng.gen_range(1..depth)
        };
        random_formula(t, d, rng)
    };
    if rng.gen_bool(0.4) {
        let f = sub(rng, true);
        let us = unary(&f);
        us[rng.gen_range(0..us.len())].clone()
    } else {
        let left_exact = rng.gen_bool(0.5);
        let a = sub(rng, left_exact);
        let b = sub(rng, !left_exact);
        let bs = binary(&a, &b);
        bs[rng.gen_range(0..bs.len())].clone()
    }
}

/// A random formula that may use unbounded operators and larger bounds.
pub fn random_any(t: &ApTable, depth: usize, rng: &mut ChaCha8Rng) -> Formula {
    let ls = leaves(t);
    if depth <= 1 || rng.gen_bool(0.15) {
        return ls[rng.gen_range(0..ls.len())].clone();
    }
    let bound = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.3) {
            None
        } else {
            Some(rng.gen_range(0..12))
        }
    };
    let f = random_any(t, depth - 1, rng);
    match rng.gen_range(0..8) {
        0 => f.not(),
        1 => f.next(),
        2 => f.eventually(bound(rng)),
        3 => f.always(bound(rng)),
        4 => f.and(random_any(t, depth - 1, rng)),
        5 => f.or(random_any(t, depth - 1, rng)),
        6 => f.implies(random_any(t, depth - 1, rng)),
        _ => {
            let k = bound(rng);
            f.until(k, random_any(t, depth - 1, rng))
        }
    }
}

/// Whether `prefix · cycle^ω` satisfies the pattern; letters index the
/// template's propositions in order.
pub fn omega_sat(kind: TemplateKind, cycle: &[LabelSet]) -> bool {
    match kind {
        TemplateKind::Universal => true,
        TemplateKind::Gf => cycle.iter().any(|l| l.contains(0)),
        TemplateKind::Fg => cycle.iter().all(|l| l.contains(0)),
        TemplateKind::FgOrFg => {
            cycle.iter().all(|l| l.contains(0)) || cycle.iter().all(|l| l.contains(1))
        }
    }
}

/// Every lasso word with `|prefix| + |cycle| ≤ max_len` over `k`
/// propositions.
pub fn lasso_words(k: usize, max_len: usize) -> Vec<(Vec<LabelSet>, Vec<LabelSet>)> {
    let letters = 1usize << k;
    let mut out = Vec::new();
    for len in 1..=max_len {
        let total = letters.pow(len as u32);
        for code in 0..total {
            let mut c = code;
            let word: Vec<LabelSet> = (0..len)
                .map(|_| {
                    let l = LabelSet((c % letters) as u64);
                    c /= letters;
                    l
                })
                .collect();
            for p in 0..len {
                out.push((word[..p].to_vec(), word[p..].to_vec()));
            }
        }
    }
    out
}

/// Runs of the automaton on the word: deterministic except for at most one
/// ε-edge, taken before reading position `jump`.
fn induced_run(
    aut: &Ldba,
    prefix: &[LabelSet],
    cycle: &[LabelSet],
    jump: Option<(usize, usize)>,
) -> LassoRun {
    let p = prefix.len();
    let c = cycle.len();
    let letter = |i: usize| if i < p { prefix[i] } else { cycle[(i - p) % c] };
    let mut states = Vec::new();
    let mut marks: Vec<(usize, usize, usize)> = Vec::new();
    let mut q = aut.initial();
    let mut i = 0;
    loop {
        if let Some((j, to)) = jump {
            if i == j {
                states.push(q);
                q = to;
            }
        }
        let after_jump = jump.is_none_or(|(j, _)| i > j);
        if i >= p && after_jump {
            let pos = (i - p) % c;
            if let Some(&(_, _, start)) = marks
                .iter()
                .find(|&&(m_q, m_pos, _)| m_q == q && m_pos == pos)
            {
                return LassoRun {
                    prefix: states[..start].to_vec(),
                    cycle: states[start..].to_vec(),
                };
            }
            marks.push((q, pos, states.len()));
        }
        states.push(q);
        q = aut.step(q, letter(i));
        i += 1;
    }
}

/// Acceptance by search over induced runs, each checked with
/// [`lasso_accepted`].
pub fn some_run_accepted(aut: &Ldba, prefix: &[LabelSet], cycle: &[LabelSet]) -> bool {
    if lasso_accepted(aut, &induced_run(aut, prefix, cycle, None)).unwrap() {
        return true;
    }
    let horizon = prefix.len() + cycle.len() * (aut.n_states() + 1);
    for j in 0..horizon {
        // which state is the run in before position j?
        let run = induced_run(aut, prefix, cycle, None);
        let seq: Vec<usize> = run
            .prefix
            .iter()
            .chain(run.cycle.iter().cycle().take(horizon + 1))
            .copied()
            .collect();
        let q = seq[j];
        for to in aut.epsilon_successors(q) {
            if lasso_accepted(aut, &induced_run(aut, prefix, cycle, Some((j, to)))).unwrap() {
                return true;
            }
        }
    }
    false
}
