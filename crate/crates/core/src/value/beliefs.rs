//! Belief sets for point-based solving.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::pomdp::{Belief, Pomdp};

/// The `n` one-hot beliefs.
pub fn vertex_beliefs(n: usize) -> Vec<Belief> {
    (0..n).map(|s| Belief::point(n, s)).collect()
}

/// All beliefs whose entries are multiples of `1/resolution`.
pub fn grid_beliefs(n: usize, resolution: usize) -> Vec<Belief> {
    fn fill(rest: usize, slots: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            cur.push(rest);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in (0..=rest).rev() {
            cur.push(k);
            fill(rest - k, slots - 1, cur, out);
            cur.pop();
        }
    }
    if n == 0 || resolution == 0 {
        return Vec::new();
    }
    let mut counts = Vec::new();
    fill(resolution, n, &mut Vec::new(), &mut counts);
    counts
        .into_iter()
        .map(|c| {
            let p = c
                .into_iter()
                .map(|k| k as f64 / resolution as f64)
                .collect();
            Belief::new(p).expect("grid point is a distribution")
        })
        .collect()
}

/// Beliefs reachable from `start` in at most `depth` steps, breadth first,
/// stopping at `limit` distinct beliefs.
pub fn reachable_beliefs(model: &Pomdp, start: &Belief, depth: usize, limit: usize) -> Vec<Belief> {
    let mut seen = vec![start.clone()];
    let mut queue = VecDeque::from([(start.clone(), 0usize)]);
    while let Some((b, d)) = queue.pop_front() {
        if d == depth {
            continue;
        }
        for a in 0..model.n_actions() {
            for s in model.successors(&b, a) {
                if seen.len() >= limit {
                    return seen;
                }
                if !seen.iter().any(|x| x.approx_eq(&s.belief)) {
                    seen.push(s.belief.clone());
                    queue.push_back((s.belief, d + 1));
                }
            }
        }
    }
    seen
}

/// `count` beliefs drawn uniformly from the simplex.
pub fn random_beliefs(n: usize, count: usize, seed: u64) -> Vec<Belief> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
            let z: f64 = e.iter().sum();
            Belief::new(e.into_iter().map(|x| x / z).collect()).expect("normalized")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pomdp::model::tests::noisy_sensor;

    #[test]
    fn grid_counts() {
        assert_eq!(grid_beliefs(2, 4).len(), 5);
        assert_eq!(grid_beliefs(3, 4).len(), 15);
        assert_eq!(grid_beliefs(3, 1), vertex_beliefs(3));
    }

    #[test]
    fn reachable_starts_with_start() {
        let m = noisy_sensor();
        let r = reachable_beliefs(&m, &Belief::uniform(2), 3, 100);
        assert_eq!(r[0], Belief::uniform(2));
        assert!(r.len() > 1 && r.len() <= 100);
        assert_eq!(reachable_beliefs(&m, &Belief::uniform(2), 0, 100).len(), 1);
        assert_eq!(reachable_beliefs(&m, &Belief::uniform(2), 10, 3).len(), 3);
    }

    #[test]
    fn random_is_seeded() {
        let a = random_beliefs(3, 5, 7);
        assert_eq!(a, random_beliefs(3, 5, 7));
        assert_ne!(a, random_beliefs(3, 5, 8));
    }
}
