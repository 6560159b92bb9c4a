use std::fmt;

use super::{Belief, PomdpError, Result, LIKELIHOOD_FLOOR, STOCHASTIC_TOL};

/// A finite POMDP with a scalar discount factor.
#[derive(Debug, Clone, PartialEq)]
pub struct Pomdp {
    states: Vec<String>,
    actions: Vec<String>,
    observations: Vec<String>,
    /// `T[s][a][s']`, flattened.
    transition: Vec<f64>,
    /// `Ω[s'][o]`, flattened.
    observation: Vec<f64>,
    initial: Vec<f64>,
    /// `r[s][a]`, flattened.
    reward: Vec<f64>,
    discount: f64,
}

/// One branch of a belief transition: the observation, its likelihood and the
/// posterior it produces.
#[derive(Debug, Clone)]
pub struct Successor {
    pub observation: usize,
    pub likelihood: f64,
    pub belief: Belief,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    TransitionRowSum,
    TransitionEntry,
    ObservationRowSum,
    ObservationEntry,
    InitialSum,
    InitialEntry,
    Discount,
    NonFinite,
}

/// A single broken model invariant, with its location and the offending
/// magnitude (the row sum, the entry, or the discount).
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub location: String,
    pub magnitude: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            ViolationKind::TransitionRowSum => "transition row does not sum to 1",
            ViolationKind::TransitionEntry => "transition entry outside [0,1]",
            ViolationKind::ObservationRowSum => "observation row does not sum to 1",
            ViolationKind::ObservationEntry => "observation entry outside [0,1]",
            ViolationKind::InitialSum => "initial distribution does not sum to 1",
            ViolationKind::InitialEntry => "initial entry outside [0,1]",
            ViolationKind::Discount => "discount outside (0,1)",
            ViolationKind::NonFinite => "non-finite value",
        };
        write!(f, "{what} at {}: {}", self.location, self.magnitude)
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(PomdpError::DimensionMismatch { expected, found });
    }
    Ok(())
}

impl Pomdp {
    /// Builds a model from dense tables. Only shapes are checked here; use
    /// [`Pomdp::validate`] for the stochasticity invariants.
    #[allow(clippy::too_many_arguments)]
    pub fn from_dense(
        states: Vec<String>,
        actions: Vec<String>,
        observations: Vec<String>,
        transition: Vec<Vec<Vec<f64>>>,
        observation: Vec<Vec<f64>>,
        initial: Vec<f64>,
        reward: Vec<Vec<f64>>,
        discount: f64,
    ) -> Result<Self> {
        let (n, m, l) = (states.len(), actions.len(), observations.len());
        if n == 0 || m == 0 || l == 0 {
            return Err(PomdpError::Format(
                "states, actions and observations must be nonempty".into(),
            ));
        }
        check_dim(n, transition.len())?;
        let mut t = Vec::with_capacity(n * m * n);
        for row in &transition {
            check_dim(m, row.len())?;
            for dist in row {
                check_dim(n, dist.len())?;
                t.extend_from_slice(dist);
            }
        }
        check_dim(n, observation.len())?;
        let mut o = Vec::with_capacity(n * l);
        for row in &observation {
            check_dim(l, row.len())?;
            o.extend_from_slice(row);
        }
        check_dim(n, initial.len())?;
        check_dim(n, reward.len())?;
        let mut r = Vec::with_capacity(n * m);
        for row in &reward {
            check_dim(m, row.len())?;
            r.extend_from_slice(row);
        }
        Ok(Pomdp {
            states,
            actions,
            observations,
            transition: t,
            observation: o,
            initial,
            reward: r,
            discount,
        })
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn n_observations(&self) -> usize {
        self.observations.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn observations(&self) -> &[String] {
        &self.observations
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|s| s == name)
    }

    pub fn observation_index(&self, name: &str) -> Option<usize> {
        self.observations.iter().position(|s| s == name)
    }

    #[inline]
    pub fn transition(&self, s: usize, a: usize, s2: usize) -> f64 {
        let n = self.n_states();
        self.transition[(s * self.n_actions() + a) * n + s2]
    }

    /// The distribution `T(s, a, ·)`.
    pub fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        let n = self.n_states();
        let start = (s * self.n_actions() + a) * n;
        &self.transition[start..start + n]
    }

    #[inline]
    pub fn observation_prob(&self, s: usize, o: usize) -> f64 {
        self.observation[s * self.n_observations() + o]
    }

    #[inline]
    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.n_actions() + a]
    }

    /// The reward column `r(·, a)`.
    pub fn reward_column(&self, a: usize) -> Vec<f64> {
        (0..self.n_states()).map(|s| self.reward(s, a)).collect()
    }

    pub fn initial(&self) -> Belief {
        Belief::from_raw(self.initial.clone())
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn min_reward(&self) -> f64 {
        self.reward.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_reward(&self) -> f64 {
        self.reward
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Every violated invariant; empty iff the model is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let (n, m, l) = (self.n_states(), self.n_actions(), self.n_observations());
        let entry = |kind, location: String, v: f64, out: &mut Vec<Violation>| {
            if !v.is_finite() {
                out.push(Violation {
                    kind: ViolationKind::NonFinite,
                    location,
                    magnitude: v,
                });
            } else if !(0.0..=1.0).contains(&v) {
                out.push(Violation {
                    kind,
                    location,
                    magnitude: v,
                });
            }
        };
        for s in 0..n {
            for a in 0..m {
                let row = self.transition_row(s, a);
                for (s2, &p) in row.iter().enumerate() {
                    entry(
                        ViolationKind::TransitionEntry,
                        format!(
                            "T({}, {}, {})",
                            self.states[s], self.actions[a], self.states[s2]
                        ),
                        p,
                        &mut out,
                    );
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > STOCHASTIC_TOL {
                    out.push(Violation {
                        kind: ViolationKind::TransitionRowSum,
                        location: format!("T({}, {}, ·)", self.states[s], self.actions[a]),
                        magnitude: sum,
                    });
                }
            }
            let mut sum = 0.0;
            for o in 0..l {
                let p = self.observation_prob(s, o);
                sum += p;
                entry(
                    ViolationKind::ObservationEntry,
                    format!("Ω({}, {})", self.states[s], self.observations[o]),
                    p,
                    &mut out,
                );
            }
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                out.push(Violation {
                    kind: ViolationKind::ObservationRowSum,
                    location: format!("Ω({}, ·)", self.states[s]),
                    magnitude: sum,
                });
            }
            for a in 0..m {
                let r = self.reward(s, a);
                if !r.is_finite() {
                    out.push(Violation {
                        kind: ViolationKind::NonFinite,
                        location: format!("r({}, {})", self.states[s], self.actions[a]),
                        magnitude: r,
                    });
                }
            }
        }
        for (s, &p) in self.initial.iter().enumerate() {
            entry(
                ViolationKind::InitialEntry,
                format!("p0({})", self.states[s]),
                p,
                &mut out,
            );
        }
        let sum: f64 = self.initial.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            out.push(Violation {
                kind: ViolationKind::InitialSum,
                location: "p0".into(),
                magnitude: sum,
            });
        }
        if !(self.discount > 0.0 && self.discount < 1.0) {
            out.push(Violation {
                kind: ViolationKind::Discount,
                location: "discount".into(),
                magnitude: self.discount,
            });
        }
        out
    }

    fn check_belief(&self, b: &Belief) -> Result<()> {
        check_dim(self.n_states(), b.dim())
    }

    fn check_action(&self, a: usize) -> Result<()> {
        if a >= self.n_actions() {
            return Err(PomdpError::OutOfRange {
                what: "action",
                index: a,
                len: self.n_actions(),
            });
        }
        Ok(())
    }

    /// Predictive state distribution `Σ_s T(s, a, ·) b(s)`.
    pub fn predict(&self, b: &Belief, a: usize) -> Vec<f64> {
        let n = self.n_states();
        let mut out = vec![0.0; n];
        for (s, &bs) in b.probs().iter().enumerate() {
            if bs == 0.0 {
                continue;
            }
            for (o, t) in out.iter_mut().zip(self.transition_row(s, a)) {
                *o += t * bs;
            }
        }
        out
    }

    /// Probability of observing `o` after taking `a` in belief `b`.
    pub fn observation_likelihood(&self, b: &Belief, a: usize, o: usize) -> f64 {
        self.predict(b, a)
            .iter()
            .enumerate()
            .map(|(s2, p)| self.observation_prob(s2, o) * p)
            .sum()
    }

    /// Bayes-rule posterior after taking `a` and observing `o`.
    pub fn belief_update(&self, b: &Belief, a: usize, o: usize) -> Result<Belief> {
        self.check_belief(b)?;
        self.check_action(a)?;
        let pred = self.predict(b, a);
        self.posterior(&pred, a, o)
    }

    fn posterior(&self, pred: &[f64], a: usize, o: usize) -> Result<Belief> {
        let unnorm: Vec<f64> = pred
            .iter()
            .enumerate()
            .map(|(s2, p)| self.observation_prob(s2, o) * p)
            .collect();
        let z: f64 = unnorm.iter().sum();
        if z <= LIKELIHOOD_FLOOR {
            return Err(PomdpError::ZeroLikelihoodObservation {
                action: self.actions[a].clone(),
                observation: self.observations[o].clone(),
                likelihood: z,
            });
        }
        Ok(Belief::from_raw(
            unnorm.into_iter().map(|x| x / z).collect(),
        ))
    }

    /// All observation branches with likelihood above [`LIKELIHOOD_FLOOR`],
    /// in observation order.
    pub fn successors(&self, b: &Belief, a: usize) -> Vec<Successor> {
        let pred = self.predict(b, a);
        (0..self.n_observations())
            .filter_map(|o| {
                let lik: f64 = pred
                    .iter()
                    .enumerate()
                    .map(|(s2, p)| self.observation_prob(s2, o) * p)
                    .sum();
                if lik <= LIKELIHOOD_FLOOR {
                    return None;
                }
                let belief = self.posterior(&pred, a, o).ok()?;
                Some(Successor {
                    observation: o,
                    likelihood: lik,
                    belief,
                })
            })
            .collect()
    }

    /// Expected immediate reward `Σ_s b(s) r(s, a)`.
    pub fn belief_reward(&self, b: &Belief, a: usize) -> f64 {
        b.probs()
            .iter()
            .enumerate()
            .map(|(s, p)| p * self.reward(s, a))
            .sum()
    }
}
