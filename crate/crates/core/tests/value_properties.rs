//! Invariants of α-vector value functions and the point-based solver.

mod support;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use iltl_pomdp::ldba::{template_automaton, TemplateKind};
use iltl_pomdp::logic::AtomicProposition;
use iltl_pomdp::pomdp::Belief;
use iltl_pomdp::product::{Product, ProductAction, ProductState};
use iltl_pomdp::value::{
    backup_empirical, backup_exact, grid_beliefs, prune_lp, reachable_beliefs, solve_pbvi,
    vertex_beliefs, AlphaVector, SolveConfig, ValueError, ValueFunctions, SAFE_THRESHOLD,
};

use support::mdp::FiniteProduct;
use support::{bundle_product, random_raw, read_aps, rough_dist, RawModel};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn universal(raw: &RawModel) -> Product {
    Product::new(
        raw.to_pomdp(),
        template_automaton(TemplateKind::Universal, &[]).unwrap(),
        vec![],
    )
    .unwrap()
}

fn values_after(p: &Product, beliefs: &[Belief], sweeps: usize) -> ValueFunctions {
    let cfg = SolveConfig {
        max_sweeps: sweeps,
        tolerance: 1e-12,
        ..SolveConfig::default()
    };
    match solve_pbvi(p, beliefs, &cfg) {
        Ok(sol) => sol.values,
        Err(ValueError::NonConvergence { partial, .. }) => partial.values,
        Err(e) => panic!("{e}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reward_values_are_convex(seed in any::<u64>()) {
        let mut r = rng(seed);
        let raw = random_raw(&mut r, 3, 3, 3);
        let p = universal(&raw);
        let vf = solve_pbvi(&p, &grid_beliefs(raw.n(), 4), &SolveConfig::default()).unwrap().values;
        let v = |b: &[f64]| vf.reward.eval_v(&p, &ProductState::new(Belief::new(b.to_vec()).unwrap(), 0)).unwrap();
        for _ in 0..200 {
            let b1 = rough_dist(raw.n(), &mut r);
            let b2 = rough_dist(raw.n(), &mut r);
            let l: f64 = r.gen();
            let mix: Vec<f64> = b1.iter().zip(&b2).map(|(x, y)| l * x + (1.0 - l) * y).collect();
            prop_assert!(v(&mix) <= l * v(&b1) + (1.0 - l) * v(&b2) + 1e-9);
        }
    }

    #[test]
    fn lp_pruning_keeps_the_envelope(seed in any::<u64>(), dim in 1usize..5, size in 1usize..25) {
        let mut r = rng(seed);
        let set: Vec<AlphaVector> = (0..size)
            .map(|_| {
                let mut v = AlphaVector::constant(dim, 0.0, 0, ProductAction::Base(0));
                v.theta = (0..dim).map(|_| r.gen_range(-3.0..3.0)).collect();
                v
            })
            .collect();
        let kept = prune_lp(&set);
        prop_assert!(!kept.is_empty() && kept.len() <= set.len());
        let top = |s: &[AlphaVector], b: &[f64]| {
            s.iter().map(|v| v.theta.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()).fold(f64::MIN, f64::max)
        };
        for _ in 0..200 {
            let b = rough_dist(dim, &mut r);
            prop_assert!((top(&set, &b) - top(&kept, &b)).abs() <= 1e-9);
        }
    }

    #[test]
    fn values_rise_across_sweeps(seed in any::<u64>()) {
        let mut r = rng(seed);
        let raw = random_raw(&mut r, 3, 3, 3);
        let p = universal(&raw);
        let beliefs = grid_beliefs(raw.n(), 3);
        let mut last = vec![f64::MIN; beliefs.len()];
        for k in [1, 2, 3, 5, 8, 13] {
            let vf = values_after(&p, &beliefs, k);
            for (b, prev) in beliefs.iter().zip(last.iter_mut()) {
                let v = vf.reward.eval_v(&p, &ProductState::new(b.clone(), 0)).unwrap();
                prop_assert!(v >= *prev - 1e-12, "{} after {} sweeps, was {}", v, k, prev);
                *prev = v;
            }
        }
    }

    #[test]
    fn values_stay_within_bounds(seed in any::<u64>()) {
        let mut r = rng(seed);
        let raw = random_raw(&mut r, 3, 2, 3);
        let goal = AtomicProposition::indicator("goal", raw.n(), &[0], 1.0, -0.4);
        let p = Product::new(raw.to_pomdp(), template_automaton(TemplateKind::Gf, &["goal"]).unwrap(), vec![goal]).unwrap();
        // rarely accepting chains can use up the sweep budget; bounds hold either way
        let vf = values_after(&p, &grid_beliefs(raw.n(), 3), SolveConfig::default().max_sweeps);
        let m = p.model();
        let (lo, hi) = (m.min_reward() / (1.0 - m.discount()), m.max_reward() / (1.0 - m.discount()));
        for _ in 0..50 {
            let b = Belief::new(rough_dist(raw.n(), &mut r)).unwrap();
            for q in 0..p.n_automaton_states() {
                let ps = ProductState::new(b.clone(), q);
                let v = vf.reward.eval_v(&p, &ps).unwrap();
                prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9);
                let pv = vf.value_p(&p, &ps).unwrap();
                prop_assert!((0.0..=1.0).contains(&pv));
            }
        }
    }
}

#[test]
fn stratified_samples_reproduce_the_exact_backup() {
    // likelihoods 0.6 / 0.4 at the uniform belief
    let raw = RawModel {
        states: vec!["s0".into(), "s1".into()],
        actions: vec!["stay".into(), "swap".into()],
        observations: vec!["o0".into(), "o1".into()],
        t: vec![
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        ],
        o: vec![vec![0.8, 0.2], vec![0.4, 0.6]],
        r: vec![vec![1.0, 0.0], vec![-1.0, 2.0]],
        init: vec![0.5, 0.5],
        gamma: 0.9,
    };
    let p = universal(&raw);
    let fam = values_after(&p, &grid_beliefs(2, 6), 5).reward;
    let b = Belief::uniform(2);
    for a in 0..2 {
        let act = ProductAction::Base(a);
        let exact = backup_exact(&fam, &p, 0, act, &b).unwrap();
        let mut samples = Vec::new();
        for s in p.successors(&ProductState::new(b.clone(), 0), act).unwrap() {
            let copies = (s.prob * 10.0).round() as usize;
            assert!((copies as f64 - s.prob * 10.0).abs() < 1e-9);
            samples.extend(std::iter::repeat_n(s.state, copies));
        }
        let mut scratch = fam.clone();
        let emp = backup_empirical(&mut scratch, &p, &samples, 0, act, &b).unwrap();
        for (x, y) in exact.theta.iter().zip(&emp.theta) {
            assert!(
                (x - y).abs() <= 1e-9,
                "{:?} vs {:?}",
                exact.theta,
                emp.theta
            );
        }
    }
}

#[test]
fn safe_sets_only_grow_across_sweeps() {
    for (name, kind, aps) in [
        ("trap-pair", TemplateKind::Gf, vec!["goal"]),
        ("three-state", TemplateKind::FgOrFg, vec!["safe1", "goal2"]),
    ] {
        let p = bundle_product(name, kind, &aps);
        let raw = RawModel::read(name);
        let fp = FiniteProduct::enumerate(&raw, &read_aps(name, &raw), p.automaton(), 64);
        let m = p.model();
        let mut beliefs = vertex_beliefs(m.n_states());
        beliefs.extend(reachable_beliefs(m, &m.initial(), 6, 100));
        let states: Vec<ProductState> = fp
            .states
            .iter()
            .map(|(b, q)| ProductState::new(Belief::new(b.clone()).unwrap(), *q))
            .collect();
        let mut last: Vec<Vec<ProductAction>> = vec![Vec::new(); states.len()];
        for k in [1, 2, 4, 8, 16, 32, 64, 128, 256, 10_000] {
            let vf = values_after(&p, &beliefs, k);
            for (ps, prev) in states.iter().zip(last.iter_mut()) {
                let safe = vf.safe_actions(&p, ps).unwrap();
                assert!(
                    prev.iter().all(|a| safe.contains(a)),
                    "{name}: {ps} lost safe actions after {k} sweeps"
                );
                *prev = safe;
            }
        }
        // and the limit is the oracle's
        let p_star = fp.max_buchi();
        for (i, safe) in last.iter().enumerate() {
            let oracle: Vec<ProductAction> = fp
                .safe(&p_star, i, SAFE_THRESHOLD)
                .into_iter()
                .map(|k| fp.edges[i][k].act)
                .collect();
            assert_eq!(safe, &oracle, "{name}: {}", states[i]);
        }
    }
}
