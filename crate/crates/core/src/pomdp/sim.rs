use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Belief, Pomdp};

/// Draws an index from a discrete distribution by inverse CDF. Mass lost to
/// rounding falls on the last index with positive weight.
pub fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Serializable position of a ChaCha stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSnapshot {
    pub seed: [u8; 32],
    pub stream: u64,
    pub word_pos: u128,
}

impl RngSnapshot {
    pub fn of(rng: &ChaCha8Rng) -> Self {
        RngSnapshot {
            seed: rng.get_seed(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos(),
        }
    }

    pub fn restore(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos);
        rng
    }
}

/// The true, unobserved state of a simulated episode together with the random
/// stream that drives it. One stream per episode worker.
#[derive(Debug, Clone)]
pub struct HiddenState {
    current: usize,
    rng: ChaCha8Rng,
}

impl HiddenState {
    /// Starts at a state drawn from the model's initial distribution.
    pub fn new(model: &Pomdp, seed: u64) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(seed);
        Self::from_belief(&model.initial(), rng)
    }

    /// Starts at a state drawn from `b`, consuming one draw from `rng`.
    pub fn from_belief(b: &Belief, mut rng: ChaCha8Rng) -> Self {
        let current = sample_index(b.probs(), &mut rng);
        HiddenState { current, rng }
    }

    pub fn at(state: usize, seed: u64) -> Self {
        HiddenState {
            current: state,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn current(&self) -> usize {
        self.current
    }

    /// Redraws the hidden state from `b` using this stream.
    pub fn resample(&mut self, b: &Belief) {
        self.current = sample_index(b.probs(), &mut self.rng);
    }

    /// Samples `s' ~ T(s, a, ·)`, then `o ~ Ω(s', ·)`. Returns the observation.
    pub fn step(&mut self, model: &Pomdp, a: usize) -> usize {
        let next = sample_index(model.transition_row(self.current, a), &mut self.rng);
        let weights: Vec<f64> = (0..model.n_observations())
            .map(|o| model.observation_prob(next, o))
            .collect();
        let o = sample_index(&weights, &mut self.rng);
        self.current = next;
        o
    }

    pub fn snapshot(&self) -> (usize, RngSnapshot) {
        (self.current, RngSnapshot::of(&self.rng))
    }

    pub fn restore(current: usize, rng: &RngSnapshot) -> Self {
        HiddenState {
            current,
            rng: rng.restore(),
        }
    }
}
