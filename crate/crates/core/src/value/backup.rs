use super::{AlphaSetFamily, AlphaVector, ProbFamily, Provenance, Result, ValueError};
use crate::logic::LabelSet;
use crate::pomdp::Belief;
use crate::product::{Product, ProductAction, ProductState};

/// What one family needs to back up a vector: the immediate reward and
/// discount of a base action, and the successor vector `θ*` at `(b', q')`.
pub(crate) trait Layer: Sync {
    fn reward(&self, product: &Product, q: usize, a: usize) -> Vec<f64>;

    fn discount(&self, product: &Product, q: usize) -> f64;

    /// Lower bound of the family's value; stands in for `θ*` when nothing
    /// applies.
    fn floor(&self) -> f64;

    fn continuation(&self, product: &Product, q: usize, b: &Belief)
        -> (Vec<f64>, Option<LabelSet>);
}

pub(crate) struct RewardLayer<'a> {
    pub fam: &'a AlphaSetFamily,
    pub floor: f64,
    /// Restricts `θ*` to vectors of allowed actions.
    pub allowed: Option<(&'a ProbFamily, f64)>,
}

impl Layer for RewardLayer<'_> {
    fn reward(&self, product: &Product, _q: usize, a: usize) -> Vec<f64> {
        product.model().reward_column(a)
    }

    fn discount(&self, product: &Product, _q: usize) -> f64 {
        product.model().discount()
    }

    fn floor(&self) -> f64 {
        self.floor
    }

    fn continuation(
        &self,
        product: &Product,
        q: usize,
        b: &Belief,
    ) -> (Vec<f64>, Option<LabelSet>) {
        let lbl = product.label(b);
        let pick = |q2: usize| match self.allowed {
            Some((p, thr)) => p
                .allowed_labeled(product, q2, b, lbl, thr)
                .unwrap_or_else(|_| product.actions_at(q2)),
            None => product.actions_at(q2),
        };
        match self.fam.best_vector(product, q, b, lbl, &pick) {
            Some((v, _)) => (v.theta.clone(), v.label),
            None => (vec![self.floor; b.dim()], None),
        }
    }
}

pub(crate) struct SurrogateLayer<'a> {
    pub fam: &'a AlphaSetFamily,
    pub gamma_b: f64,
}

impl Layer for SurrogateLayer<'_> {
    fn reward(&self, product: &Product, q: usize, _a: usize) -> Vec<f64> {
        let r = if product.automaton().is_accepting(q) {
            1.0 - self.gamma_b
        } else {
            0.0
        };
        vec![r; product.model().n_states()]
    }

    fn discount(&self, product: &Product, q: usize) -> f64 {
        if product.automaton().is_accepting(q) {
            self.gamma_b
        } else {
            1.0
        }
    }

    fn floor(&self) -> f64 {
        0.0
    }

    fn continuation(
        &self,
        product: &Product,
        q: usize,
        b: &Belief,
    ) -> (Vec<f64>, Option<LabelSet>) {
        let lbl = product.label(b);
        match self
            .fam
            .best_vector(product, q, b, lbl, &|q2| product.actions_at(q2))
        {
            Some((v, _)) => (v.theta.clone(), v.label),
            None => (vec![0.0; b.dim()], None),
        }
    }
}

pub(crate) struct ReachLayer<'a> {
    pub reach: &'a AlphaSetFamily,
    pub surrogate: &'a AlphaSetFamily,
    pub winning_threshold: f64,
}

impl Layer for ReachLayer<'_> {
    fn reward(&self, product: &Product, _q: usize, _a: usize) -> Vec<f64> {
        vec![0.0; product.model().n_states()]
    }

    fn discount(&self, _product: &Product, _q: usize) -> f64 {
        1.0
    }

    fn floor(&self) -> f64 {
        0.0
    }

    fn continuation(
        &self,
        product: &Product,
        q: usize,
        b: &Belief,
    ) -> (Vec<f64>, Option<LabelSet>) {
        let lbl = product.label(b);
        let winning = self
            .surrogate
            .eval_v_labeled(product, q, b, lbl)
            .is_ok_and(|v| v >= self.winning_threshold);
        if winning {
            return (vec![1.0; b.dim()], None);
        }
        match self
            .reach
            .best_vector(product, q, b, lbl, &|q2| product.actions_at(q2))
        {
            Some((v, _)) => (v.theta.clone(), v.label),
            None => (vec![0.0; b.dim()], None),
        }
    }
}

fn tag(product: &Product, q: usize, lbl: LabelSet) -> Option<LabelSet> {
    product.label_sensitive(q).then_some(lbl)
}

fn provenance(b: &Belief, generation: u64) -> Provenance {
    Provenance {
        generation,
        key: Some(b.key()),
    }
}

fn check_base(product: &Product, act: ProductAction) -> Result<usize> {
    match act {
        ProductAction::Base(a) if a < product.model().n_actions() => Ok(a),
        ProductAction::Base(a) => Err(crate::product::ProductError::UnknownAction(a).into()),
        ProductAction::Epsilon(_) => unreachable!("checked by caller"),
    }
}

/// `Σ_{s'} T(s, a, s') Ω(s', o) θ(s')` for every `s`.
fn project(product: &Product, a: usize, o: usize, theta: &[f64]) -> Vec<f64> {
    let model = product.model();
    let n = model.n_states();
    let h: Vec<f64> = (0..n)
        .map(|s2| model.observation_prob(s2, o) * theta[s2])
        .collect();
    (0..n)
        .map(|s| {
            model
                .transition_row(s, a)
                .iter()
                .zip(&h)
                .map(|(t, x)| t * x)
                .sum()
        })
        .collect()
}

/// Point-based backup at `(b, q)`. An ε-action copies the best vector of its
/// target state at `b`.
pub(crate) fn backup_with<L: Layer + ?Sized>(
    layer: &L,
    product: &Product,
    q: usize,
    act: ProductAction,
    b: &Belief,
    generation: u64,
) -> Result<AlphaVector> {
    if let ProductAction::Epsilon(e) = act {
        let to = super::epsilon_target(product, q, e)?;
        let (theta, label) = layer.continuation(product, to, b);
        return Ok(AlphaVector {
            theta,
            owner_q: q,
            owner_a: act,
            label,
            provenance: provenance(b, generation),
        });
    }
    let a = check_base(product, act)?;
    let model = product.model();
    let lbl = product.label(b);
    let q2 = product.automaton().step(q, lbl);
    let disc = layer.discount(product, q);
    let mut theta = layer.reward(product, q, a);
    let succ = model.successors(b, a);
    let floor = vec![layer.floor(); model.n_states()];
    for o in 0..model.n_observations() {
        let star = match succ.iter().find(|s| s.observation == o) {
            Some(s) => layer.continuation(product, q2, &s.belief).0,
            None => floor.clone(),
        };
        for (t, g) in theta.iter_mut().zip(project(product, a, o, &star)) {
            *t += disc * g;
        }
    }
    Ok(AlphaVector {
        theta,
        owner_q: q,
        owner_a: act,
        label: tag(product, q, lbl),
        provenance: provenance(b, generation),
    })
}

/// Backup from sampled successors `(b'_i, q'_i)` of `((b, q), a)`.
///
/// With `literal` unset, a successor branch seen with frequency `f` and
/// probability `p` contributes `θ*` projected back through its observations
/// with weight `min(f / p, 1)`, the rest of the branch going to the floor.
/// The result is a mixture of plan vectors, so it stays a lower bound away
/// from `b`, and it equals the exact backup once the frequencies match. With
/// `literal` set, the result is `r + γ/n Σ θ*_i`. Samples come with
/// multiplicities.
#[allow(clippy::too_many_arguments)]
pub(crate) fn empirical_with<L: Layer + ?Sized>(
    layer: &L,
    product: &Product,
    samples: &[(ProductState, u64)],
    q: usize,
    act: ProductAction,
    b: &Belief,
    generation: u64,
    literal: bool,
) -> Result<AlphaVector> {
    let total: u64 = samples.iter().map(|(_, c)| c).sum();
    if total == 0 {
        return Err(ValueError::InconsistentSamples("no samples".into()));
    }
    let origin = ProductState::new(b.clone(), q);
    let branches = product.successors(&origin, act)?;
    let mut counts = vec![0u64; branches.len()];
    for (i, (smp, count)) in samples.iter().enumerate() {
        let k = branches
            .iter()
            .position(|br| br.state == *smp)
            .ok_or_else(|| {
                ValueError::InconsistentSamples(format!(
                    "sample {i} {smp} is not a successor of {origin} under {}",
                    product.action_name(act)
                ))
            })?;
        counts[k] += count;
    }
    let n = product.model().n_states();
    let floor = vec![layer.floor(); n];
    let mut sum = vec![0.0; n];
    let mut eps_label = None;
    for (br, &count) in branches.iter().zip(&counts) {
        let freq = count as f64 / total as f64;
        match act {
            ProductAction::Base(a) if !literal => {
                let w = (freq / br.prob).min(1.0);
                let star = if w > 0.0 {
                    layer.continuation(product, br.state.q, &br.state.belief).0
                } else {
                    floor.clone()
                };
                let mixed: Vec<f64> = star
                    .iter()
                    .zip(&floor)
                    .map(|(x, f)| w * x + (1.0 - w) * f)
                    .collect();
                for &o in &br.observations {
                    for (x, y) in sum.iter_mut().zip(project(product, a, o, &mixed)) {
                        *x += y;
                    }
                }
            }
            _ if count > 0 => {
                let (star, star_label) = layer.continuation(product, br.state.q, &br.state.belief);
                eps_label = star_label;
                for (x, y) in sum.iter_mut().zip(&star) {
                    *x += freq * y;
                }
            }
            _ => {}
        }
    }
    let (mut theta, disc, label) = match act {
        ProductAction::Base(a) => {
            let lbl = product.label(b);
            (
                layer.reward(product, q, a),
                layer.discount(product, q),
                tag(product, q, lbl),
            )
        }
        ProductAction::Epsilon(_) => (vec![0.0; n], 1.0, eps_label),
    };
    for (t, s) in theta.iter_mut().zip(&sum) {
        *t += disc * s;
    }
    Ok(AlphaVector {
        theta,
        owner_q: q,
        owner_a: act,
        label,
        provenance: provenance(b, generation),
    })
}

fn reward_layer<'a>(fam: &'a AlphaSetFamily, product: &Product) -> RewardLayer<'a> {
    let m = product.model();
    RewardLayer {
        fam,
        floor: m.min_reward() / (1.0 - m.discount()),
        allowed: None,
    }
}

/// Exact point-based `Q_r` backup at `(b, q)` for action `a`.
pub fn backup_exact(
    fam: &AlphaSetFamily,
    product: &Product,
    q: usize,
    a: ProductAction,
    b: &Belief,
) -> Result<AlphaVector> {
    backup_with(&reward_layer(fam, product), product, q, a, b, 0)
}

/// `Q_r` backup from sampled successors; the vector is also added to
/// `Θ_{q,a}`.
pub fn backup_empirical(
    fam: &mut AlphaSetFamily,
    product: &Product,
    samples: &[ProductState],
    q: usize,
    a: ProductAction,
    b: &Belief,
) -> Result<AlphaVector> {
    let weighted: Vec<(ProductState, u64)> = samples.iter().map(|s| (s.clone(), 1)).collect();
    let v = empirical_with(
        &reward_layer(fam, product),
        product,
        &weighted,
        q,
        a,
        b,
        0,
        false,
    )?;
    fam.push(v.clone());
    Ok(v)
}

/// `r + (γ/n) Σ θ*_i`, the sample average of successor vectors taken as is.
/// It agrees with [`backup_empirical`] only at beliefs where every `θ*_i`
/// is evaluated at its own successor; kept for measuring the difference.
pub fn backup_empirical_literal(
    fam: &AlphaSetFamily,
    product: &Product,
    samples: &[ProductState],
    q: usize,
    a: ProductAction,
    b: &Belief,
) -> Result<AlphaVector> {
    let weighted: Vec<(ProductState, u64)> = samples.iter().map(|s| (s.clone(), 1)).collect();
    empirical_with(
        &reward_layer(fam, product),
        product,
        &weighted,
        q,
        a,
        b,
        0,
        true,
    )
}

/// Surrogate and reachability vectors of the probability family at
/// `(b, q)`.
pub fn backup_p(
    fam_p: &ProbFamily,
    product: &Product,
    q: usize,
    a: ProductAction,
    b: &Belief,
    gamma_b: f64,
) -> Result<(AlphaVector, AlphaVector)> {
    let s = backup_with(
        &SurrogateLayer {
            fam: &fam_p.surrogate,
            gamma_b,
        },
        product,
        q,
        a,
        b,
        0,
    )?;
    let r = backup_with(
        &ReachLayer {
            reach: &fam_p.reach,
            surrogate: &fam_p.surrogate,
            winning_threshold: fam_p.winning_threshold,
        },
        product,
        q,
        a,
        b,
        0,
    )?;
    Ok((s, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ldba::{template_automaton, TemplateKind};
    use crate::pomdp::model::tests::noisy_sensor;
    use crate::value::fixtures::observed_pair;
    use crate::value::Provenance;

    fn family_with(product: &Product, theta: Vec<f64>) -> AlphaSetFamily {
        let mut f = AlphaSetFamily::default();
        for a in 0..product.model().n_actions() {
            f.push(AlphaVector {
                theta: theta.clone(),
                owner_q: 0,
                owner_a: ProductAction::Base(a),
                label: None,
                provenance: Provenance::default(),
            });
        }
        f
    }

    fn sensor_product(gamma: f64) -> Product {
        let m = noisy_sensor();
        let m = crate::pomdp::Pomdp::from_dense(
            m.states().to_vec(),
            m.actions().to_vec(),
            m.observations().to_vec(),
            vec![vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]]],
            vec![vec![0.8, 0.2], vec![0.4, 0.6]],
            vec![0.5, 0.5],
            vec![vec![1.0], vec![0.0]],
            gamma,
        )
        .unwrap();
        Product::new(
            m,
            template_automaton(TemplateKind::Universal, &[]).unwrap(),
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn vanishing_discount_leaves_reward() {
        let p = sensor_product(1e-9);
        let f = family_with(&p, vec![5.0, -3.0]);
        let v = backup_exact(&f, &p, 0, ProductAction::Base(0), &Belief::uniform(2)).unwrap();
        assert!((v.theta[0] - 1.0).abs() < 1e-6 && v.theta[1].abs() < 1e-6);
    }

    #[test]
    fn zero_continuation_is_reward() {
        let p = observed_pair(0.9);
        let f = family_with(&p, vec![0.0, 0.0]);
        for a in 0..2 {
            let v = backup_exact(
                &f,
                &p,
                0,
                ProductAction::Base(a),
                &Belief::new(vec![0.3, 0.7]).unwrap(),
            )
            .unwrap();
            assert_eq!(v.theta, p.model().reward_column(a));
        }
    }

    #[test]
    fn matches_brute_force_sum() {
        let p = sensor_product(0.9);
        let m = p.model();
        let theta0 = vec![1.0, 0.0];
        let f = family_with(&p, theta0.clone());
        let b = Belief::new(vec![0.35, 0.65]).unwrap();
        let v = backup_exact(&f, &p, 0, ProductAction::Base(0), &b).unwrap();
        for s in 0..2 {
            let mut x = m.reward(s, 0);
            for o in 0..2 {
                for s2 in 0..2 {
                    x += 0.9 * m.observation_prob(s2, o) * m.transition(s, 0, s2) * theta0[s2];
                }
            }
            assert!((v.theta[s] - x).abs() < 1e-12);
        }
        assert!((v.theta[0] - 1.9).abs() < 1e-12);
    }

    #[test]
    fn literal_empirical_examples() {
        let p = sensor_product(0.9);
        let theta0 = vec![2.0, -1.0];
        let f = family_with(&p, theta0.clone());
        let b = Belief::new(vec![0.3, 0.7]).unwrap();
        let origin = ProductState::new(b.clone(), 0);
        let succ = p.successors(&origin, ProductAction::Base(0)).unwrap();
        let one = backup_empirical_literal(
            &f,
            &p,
            &[succ[0].state.clone()],
            0,
            ProductAction::Base(0),
            &b,
        )
        .unwrap();
        for s in 0..2 {
            assert!((one.theta[s] - (p.model().reward(s, 0) + 0.9 * theta0[s])).abs() < 1e-12);
        }
        let many = vec![succ[1].state.clone(); 5];
        let five = backup_empirical_literal(&f, &p, &many, 0, ProductAction::Base(0), &b).unwrap();
        for s in 0..2 {
            assert!((five.theta[s] - one.theta[s]).abs() < 1e-12);
        }
    }

    #[test]
    fn literal_average_of_two_argmax_vectors() {
        let p = sensor_product(0.9);
        let mut f = AlphaSetFamily::default();
        for theta in [vec![1.0, 0.0], vec![0.0, 1.0]] {
            f.push(AlphaVector {
                theta,
                owner_q: 0,
                owner_a: ProductAction::Base(0),
                label: None,
                provenance: Provenance::default(),
            });
        }
        let b = Belief::uniform(2);
        let succ = p
            .successors(&ProductState::new(b.clone(), 0), ProductAction::Base(0))
            .unwrap();
        // posteriors (2/3, 1/3) and (1/4, 3/4) pick different vectors
        let samples: Vec<ProductState> = succ.iter().map(|s| s.state.clone()).collect();
        let v = backup_empirical_literal(&f, &p, &samples, 0, ProductAction::Base(0), &b).unwrap();
        let expected = [1.0 + 0.45, 0.45];
        for s in 0..2 {
            assert!((v.theta[s] - expected[s]).abs() < 1e-12);
        }
        // one sample per branch: weight min(1/2 / p, 1), the rest at the floor
        let m = p.model();
        let floor = m.min_reward() / (1.0 - m.discount());
        let expected: f64 = m.belief_reward(&b, 0)
            + 0.9
                * succ
                    .iter()
                    .map(|x| {
                        let w = (0.5 / x.prob).min(1.0);
                        let best = x.state.belief.probs().iter().cloned().fold(0.0, f64::max);
                        x.prob * (w * best + (1.0 - w) * floor)
                    })
                    .sum::<f64>();
        let mut g = f.clone();
        let back = backup_empirical(&mut g, &p, &samples, 0, ProductAction::Base(0), &b).unwrap();
        assert!(
            (back.value(&b) - expected).abs() < 1e-12,
            "{} vs {expected}",
            back.value(&b)
        );
        assert_eq!(g.set(0, ProductAction::Base(0)).len(), 3);
    }

    #[test]
    fn stratified_samples_reproduce_exact_backup() {
        let p = sensor_product(0.9);
        let mut f = AlphaSetFamily::default();
        for theta in [vec![1.0, 0.2], vec![-0.5, 1.5]] {
            f.push(AlphaVector {
                theta,
                owner_q: 0,
                owner_a: ProductAction::Base(0),
                label: None,
                provenance: Provenance::default(),
            });
        }
        let b = Belief::new(vec![0.3, 0.7]).unwrap();
        let succ = p
            .successors(&ProductState::new(b.clone(), 0), ProductAction::Base(0))
            .unwrap();
        // likelihoods 0.52 and 0.48
        let mut samples = vec![succ[0].state.clone(); 52];
        samples.extend(vec![succ[1].state.clone(); 48]);
        let exact = backup_exact(&f, &p, 0, ProductAction::Base(0), &b).unwrap();
        let emp =
            backup_empirical(&mut f.clone(), &p, &samples, 0, ProductAction::Base(0), &b).unwrap();
        for s in 0..2 {
            assert!((exact.theta[s] - emp.theta[s]).abs() < 1e-9);
        }
    }

    #[test]
    fn foreign_samples_are_rejected() {
        let p = sensor_product(0.9);
        let mut f = family_with(&p, vec![0.0, 0.0]);
        let b = Belief::new(vec![0.3, 0.7]).unwrap();
        let stray = ProductState::new(Belief::new(vec![0.9, 0.1]).unwrap(), 0);
        assert!(matches!(
            backup_empirical(&mut f, &p, &[stray], 0, ProductAction::Base(0), &b),
            Err(ValueError::InconsistentSamples(_))
        ));
        assert!(matches!(
            backup_empirical(&mut f, &p, &[], 0, ProductAction::Base(0), &b),
            Err(ValueError::InconsistentSamples(_))
        ));
    }
}
