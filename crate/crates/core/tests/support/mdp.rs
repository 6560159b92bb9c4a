//! Finite product MDPs built by breadth-first enumeration, with end-component
//! analysis and tabular value iteration.

use std::collections::{BTreeMap, VecDeque};

use iltl_pomdp::ldba::Ldba;
use iltl_pomdp::logic::LabelSet;
use iltl_pomdp::product::ProductAction;

use super::RawModel;

#[derive(Debug, Clone)]
pub struct Edge {
    pub act: ProductAction,
    pub reward: f64,
    pub discount: f64,
    pub succ: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub struct FiniteProduct {
    pub states: Vec<(Vec<f64>, usize)>,
    pub accepting: Vec<bool>,
    pub edges: Vec<Vec<Edge>>,
}

fn key(b: &[f64], q: usize) -> (Vec<i64>, usize) {
    (b.iter().map(|x| (x * 1e9).round() as i64).collect(), q)
}

pub fn label_of(aps: &[(String, Vec<f64>, f64)], aut: &Ldba, b: &[f64]) -> LabelSet {
    LabelSet::from_indices(aut.aps().iter().enumerate().filter_map(|(i, name)| {
        let (_, w, off) = aps.iter().find(|(n, _, _)| n == name).unwrap();
        let v: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() + off;
        (v > 0.0).then_some(i)
    }))
}

impl FiniteProduct {
    /// Every product state reachable from `(init, q0)`. Panics past `limit`
    /// states, which means the belief set is not finite.
    pub fn enumerate(
        raw: &RawModel,
        aps: &[(String, Vec<f64>, f64)],
        aut: &Ldba,
        limit: usize,
    ) -> FiniteProduct {
        let mut index: BTreeMap<(Vec<i64>, usize), usize> = BTreeMap::new();
        let mut fp = FiniteProduct {
            states: Vec::new(),
            accepting: Vec::new(),
            edges: Vec::new(),
        };
        let mut queue = VecDeque::new();
        let mut intern =
            |b: Vec<f64>, q: usize, fp: &mut FiniteProduct, queue: &mut VecDeque<usize>| {
                let k = key(&b, q);
                if let Some(&i) = index.get(&k) {
                    return i;
                }
                let i = fp.states.len();
                assert!(i < limit, "more than {limit} product states");
                index.insert(k, i);
                fp.states.push((b, q));
                fp.accepting.push(aut.is_accepting(q));
                fp.edges.push(Vec::new());
                queue.push_back(i);
                i
            };
        intern(raw.init.clone(), aut.initial(), &mut fp, &mut queue);
        while let Some(i) = queue.pop_front() {
            let (b, q) = fp.states[i].clone();
            let q2 = aut.step(q, label_of(aps, aut, &b));
            let mut edges = Vec::new();
            for a in 0..raw.actions.len() {
                let mut succ: Vec<(usize, f64)> = Vec::new();
                for o in 0..raw.observations.len() {
                    let lik = raw.likelihood(&b, a, o);
                    if lik <= 1e-12 {
                        continue;
                    }
                    let j = intern(raw.update(&b, a, o), q2, &mut fp, &mut queue);
                    match succ.iter_mut().find(|(x, _)| *x == j) {
                        Some(e) => e.1 += lik,
                        None => succ.push((j, lik)),
                    }
                }
                edges.push(Edge {
                    act: ProductAction::Base(a),
                    reward: (0..raw.n()).map(|s| b[s] * raw.r[s][a]).sum(),
                    discount: raw.gamma,
                    succ,
                });
            }
            for (e, edge) in aut.epsilon_edges().iter().enumerate() {
                if edge.from == q {
                    let j = intern(b.clone(), edge.to, &mut fp, &mut queue);
                    edges.push(Edge {
                        act: ProductAction::Epsilon(e),
                        reward: 0.0,
                        discount: 1.0,
                        succ: vec![(j, 1.0)],
                    });
                }
            }
            fp.edges[i] = edges;
        }
        fp
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn find(&self, b: &[f64], q: usize) -> Option<usize> {
        let k = key(b, q);
        (0..self.len()).find(|&i| key(&self.states[i].0, self.states[i].1) == k)
    }

    /// Maximal end components, by repeatedly dropping actions that can leave
    /// their strongly connected component.
    pub fn mecs(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut alive = vec![true; n];
        let mut enabled: Vec<Vec<bool>> = self.edges.iter().map(|e| vec![true; e.len()]).collect();
        loop {
            // reachability closure over enabled edges
            let mut reach = vec![vec![false; n]; n];
            for s in 0..n {
                if !alive[s] {
                    continue;
                }
                reach[s][s] = true;
                for (k, e) in self.edges[s].iter().enumerate() {
                    if enabled[s][k] {
                        for &(t, _) in &e.succ {
                            reach[s][t] = true;
                        }
                    }
                }
            }
            for k in 0..n {
                for i in 0..n {
                    if reach[i][k] {
                        for j in 0..n {
                            if reach[k][j] {
                                reach[i][j] = true;
                            }
                        }
                    }
                }
            }
            let alive_now = alive.clone();
            let same = |s: usize, t: usize| alive_now[t] && reach[s][t] && reach[t][s];
            let mut changed = false;
            for s in 0..n {
                if !alive[s] {
                    continue;
                }
                for (k, e) in self.edges[s].iter().enumerate() {
                    if enabled[s][k] && e.succ.iter().any(|&(t, _)| !same(s, t)) {
                        enabled[s][k] = false;
                        changed = true;
                    }
                }
                if !enabled[s].iter().any(|&x| x) {
                    alive[s] = false;
                    changed = true;
                }
            }
            if !changed {
                let mut seen = vec![false; n];
                let mut out = Vec::new();
                for s in 0..n {
                    if alive[s] && !seen[s] {
                        let comp: Vec<usize> = (0..n).filter(|&t| same(s, t)).collect();
                        comp.iter().for_each(|&t| seen[t] = true);
                        out.push(comp);
                    }
                }
                return out;
            }
        }
    }

    /// Maximal probability of visiting an accepting state infinitely often:
    /// maximal reachability of the accepting end components.
    pub fn max_buchi(&self) -> Vec<f64> {
        let mut target = vec![false; self.len()];
        for c in self.mecs() {
            if c.iter().any(|&s| self.accepting[s]) {
                c.iter().for_each(|&s| target[s] = true);
            }
        }
        let mut x: Vec<f64> = target.iter().map(|&t| if t { 1.0 } else { 0.0 }).collect();
        for _ in 0..1_000_000 {
            let mut delta: f64 = 0.0;
            for s in 0..self.len() {
                if target[s] {
                    continue;
                }
                let v = self.edges[s]
                    .iter()
                    .map(|e| e.succ.iter().map(|&(t, p)| p * x[t]).sum::<f64>())
                    .fold(0.0, f64::max);
                delta = delta.max((v - x[s]).abs());
                x[s] = v;
            }
            if delta < 1e-15 {
                break;
            }
        }
        x
    }

    pub fn q_p(&self, p: &[f64], s: usize, k: usize) -> f64 {
        self.edges[s][k].succ.iter().map(|&(t, w)| w * p[t]).sum()
    }

    /// Edges with `Q_p ≥ threshold`.
    pub fn safe(&self, p: &[f64], s: usize, threshold: f64) -> Vec<usize> {
        (0..self.edges[s].len())
            .filter(|&k| self.q_p(p, s, k) >= threshold)
            .collect()
    }

    /// The safe edges, or the best-`Q_p` ones when none is safe.
    pub fn allowed(&self, p: &[f64], s: usize, threshold: f64, tol: f64) -> Vec<usize> {
        let safe = self.safe(p, s, threshold);
        if !safe.is_empty() {
            return safe;
        }
        let best = (0..self.edges[s].len())
            .map(|k| self.q_p(p, s, k))
            .fold(f64::MIN, f64::max);
        (0..self.edges[s].len())
            .filter(|&k| self.q_p(p, s, k) >= best - tol)
            .collect()
    }

    /// Discounted reward maximized over the allowed edges.
    pub fn constrained_value(&self, threshold: f64, tol: f64) -> Vec<f64> {
        let p = self.max_buchi();
        let allowed: Vec<Vec<usize>> = (0..self.len())
            .map(|s| self.allowed(&p, s, threshold, tol))
            .collect();
        let mut v = vec![0.0; self.len()];
        for _ in 0..100_000 {
            let mut delta: f64 = 0.0;
            let next: Vec<f64> = (0..self.len())
                .map(|s| {
                    allowed[s]
                        .iter()
                        .map(|&k| {
                            let e = &self.edges[s][k];
                            e.reward
                                + e.discount * e.succ.iter().map(|&(t, w)| w * v[t]).sum::<f64>()
                        })
                        .fold(f64::MIN, f64::max)
                })
                .collect();
            for s in 0..self.len() {
                delta = delta.max((next[s] - v[s]).abs());
            }
            v = next;
            if delta < 1e-14 {
                break;
            }
        }
        v
    }
}
