use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;

use log::{debug, info};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    record_transition, ActionChooser, Choice, EmpiricalModel, EpisodeStore, LearnError,
    LearnerConfig, Result, TransitionRecord,
};
use crate::logic::LabelSet;
use crate::pomdp::{HiddenState, RngSnapshot};
use crate::product::{Product, ProductAction, ProductState};
use crate::value::{
    empirical_with, prune_lp_labeled, prune_pointbased_labeled, safe_actions, witness_labels,
    AlphaSetFamily, AlphaVector, ProbFamily, PruneMode, ReachLayer, RewardLayer, RewardMode,
    SurrogateLayer, ValueFunctions, WitnessSet, FALLBACK_TOL,
};

/// One line of the metrics log. Residuals are the largest change of the
/// respective value at any stored point since the previous row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub step: u64,
    pub residual_r: f64,
    pub residual_p: f64,
    pub residual_reach: f64,
    pub vectors_r: usize,
    pub vectors_p: usize,
    /// Size of the safe set where the step's action was chosen.
    pub safe_actions: usize,
}

impl MetricsRow {
    pub const CSV_HEADER: &'static str =
        "step,residual_r,residual_p,residual_reach,vectors_r,vectors_p,safe_actions";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{:e},{:e},{:e},{},{},{}",
            self.step,
            self.residual_r,
            self.residual_p,
            self.residual_reach,
            self.vectors_r,
            self.vectors_p,
            self.safe_actions
        )
    }
}

pub fn write_metrics_csv(rows: &[MetricsRow], path: impl AsRef<Path>) -> std::io::Result<()> {
    let mut out = String::from(MetricsRow::CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    std::fs::write(path, out)
}

/// Counts of how actions were selected.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SafetyAudit {
    pub explore: u64,
    pub exploit: u64,
    /// Exploiting steps whose action was outside the safe set.
    pub exploit_unsafe: u64,
    pub fallback: u64,
}

impl SafetyAudit {
    /// Recounts from the store.
    pub fn from_records(records: &[TransitionRecord]) -> Self {
        let mut a = SafetyAudit::default();
        let mut last = None;
        for r in records {
            // extra samples of one step repeat its choice
            if last == Some(r.step) {
                continue;
            }
            last = Some(r.step);
            match r.choice {
                Choice::Explore => a.explore += 1,
                Choice::Exploit => {
                    a.exploit += 1;
                    if !r.safe {
                        a.exploit_unsafe += 1;
                    }
                }
                Choice::Fallback => a.fallback += 1,
            }
        }
        a
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnReport {
    pub steps: u64,
    pub converged: bool,
    pub residual_r: f64,
    pub residual_p: f64,
    pub residual_reach: f64,
    pub audit: SafetyAudit,
}

impl LearnReport {
    pub fn residual(&self) -> f64 {
        self.residual_r
            .max(self.residual_p)
            .max(self.residual_reach)
    }
}

#[derive(Debug, Clone)]
pub struct LearnOutcome {
    pub values: ValueFunctions,
    pub store: EpisodeStore,
    pub empirical: EmpiricalModel,
    pub report: LearnReport,
    pub metrics: Vec<MetricsRow>,
}

/// Everything besides the store needed to continue a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct Snapshot {
    step: u64,
    current: ProductState,
    eps_run: usize,
    control: RngSnapshot,
    hidden: usize,
    hidden_rng: RngSnapshot,
    values: ValueFunctions,
    previous: ValueFunctions,
    residuals: Option<[f64; 3]>,
    audit: SafetyAudit,
    converged: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Line {
    Record { record: TransitionRecord },
    Metrics { row: MetricsRow },
    Snapshot { state: Box<Snapshot> },
}

/// The learning loop: pick a safe action ε-greedily, simulate, record, back
/// up the three families at the visited point, then restart from a stored
/// point.
pub struct Learner<'a> {
    product: &'a Product,
    config: LearnerConfig,
    chooser: ActionChooser,
    floor: f64,
    step: u64,
    current: ProductState,
    eps_run: usize,
    control: ChaCha8Rng,
    hidden: HiddenState,
    values: ValueFunctions,
    previous: ValueFunctions,
    residuals: Option<[f64; 3]>,
    audit: SafetyAudit,
    converged: bool,
    all_accepting: bool,
    store: EpisodeStore,
    empirical: EmpiricalModel,
    metrics: Vec<MetricsRow>,
    witnesses: Option<(usize, WitnessSet, Vec<LabelSet>)>,
    sink: Option<BufWriter<File>>,
}

impl<'a> Learner<'a> {
    pub fn new(product: &'a Product, config: LearnerConfig) -> Result<Self> {
        config.validate()?;
        let model = product.model();
        let floor = model.min_reward() / (1.0 - model.discount());
        let all_accepting =
            (0..product.n_automaton_states()).all(|q| product.automaton().is_accepting(q));
        let mut prob = if all_accepting {
            ProbFamily::certain(product)
        } else {
            ProbFamily::initial(product)
        };
        prob.winning_threshold = config.winning_threshold;
        let values = ValueFunctions {
            reward: AlphaSetFamily::constant(product, floor),
            prob,
            safe_threshold: config.safe_threshold,
            constrained: config.reward_mode == RewardMode::Constrained,
        };
        let start = product.initial();
        let control = ChaCha8Rng::seed_from_u64(config.seed);
        let mut hidden_rng = ChaCha8Rng::seed_from_u64(config.seed);
        hidden_rng.set_stream(1);
        let hidden = HiddenState::from_belief(&start.belief, hidden_rng);
        Ok(Learner {
            product,
            chooser: ActionChooser {
                epsilon: config.epsilon,
                exploitation: config.exploitation,
                strict: config.strict_safety,
            },
            config,
            floor,
            step: 0,
            store: EpisodeStore::new(&start),
            current: start,
            eps_run: 0,
            control,
            hidden,
            previous: values.clone(),
            values,
            residuals: None,
            audit: SafetyAudit::default(),
            converged: false,
            all_accepting,
            empirical: EmpiricalModel::default(),
            metrics: Vec::new(),
            witnesses: None,
            sink: None,
        })
    }

    /// Starts a fresh checkpoint log at `path`.
    pub fn checkpoint_to(&mut self, path: impl AsRef<Path>) -> Result<()> {
        self.sink = Some(BufWriter::new(File::create(path)?));
        self.snapshot()
    }

    /// Continues the run logged at `path` from its last snapshot. Anything
    /// logged after that snapshot is dropped and regenerated. The random
    /// streams come from the snapshot, so `config.seed` is not used.
    pub fn resume(
        product: &'a Product,
        config: LearnerConfig,
        path: impl AsRef<Path>,
    ) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut learner = Learner::new(product, config)?;
        let mut records = Vec::new();
        let mut rows = Vec::new();
        let mut last: Option<(Box<Snapshot>, usize, usize, usize)> = None;
        let mut offset = 0;
        for (no, line) in text.split_inclusive('\n').enumerate() {
            let complete = line.ends_with('\n');
            let parsed = match serde_json::from_str::<Line>(line) {
                Ok(x) if complete => x,
                // a partly written last line is dropped
                _ if offset + line.len() == text.len() => break,
                Ok(_) => unreachable!(),
                Err(e) => {
                    return Err(LearnError::Checkpoint(format!(
                        "{} line {}: {e}",
                        path.display(),
                        no + 1
                    )));
                }
            };
            offset += line.len();
            match parsed {
                Line::Record { record } => records.push(record),
                Line::Metrics { row } => rows.push(row),
                Line::Snapshot { state } => last = Some((state, offset, records.len(), rows.len())),
            }
        }
        let (snap, end, nr, nm) = last.ok_or_else(|| {
            LearnError::Checkpoint(format!("{} holds no snapshot", path.display()))
        })?;
        for r in records.into_iter().take(nr) {
            record_transition(&mut learner.store, &mut learner.empirical, product, r)?;
        }
        rows.truncate(nm);
        learner.metrics = rows;
        learner.restore(*snap);
        let file = OpenOptions::new().write(true).open(path)?;
        file.set_len(end as u64)?;
        drop(file);
        learner.sink = Some(BufWriter::new(OpenOptions::new().append(true).open(path)?));
        info!(
            "resumed at step {} with {} records",
            learner.step,
            learner.store.len()
        );
        Ok(learner)
    }

    fn restore(&mut self, s: Snapshot) {
        self.step = s.step;
        self.current = s.current;
        self.eps_run = s.eps_run;
        self.control = s.control.restore();
        self.hidden = HiddenState::restore(s.hidden, &s.hidden_rng);
        self.values = s.values;
        self.previous = s.previous;
        self.residuals = s.residuals;
        self.audit = s.audit;
        self.converged = s.converged;
    }

    fn write(&mut self, line: &Line) -> Result<()> {
        if let Some(w) = self.sink.as_mut() {
            serde_json::to_writer(&mut *w, line)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    fn snapshot(&mut self) -> Result<()> {
        if self.sink.is_none() {
            return Ok(());
        }
        let (hidden, hidden_rng) = self.hidden.snapshot();
        let state = Snapshot {
            step: self.step,
            current: self.current.clone(),
            eps_run: self.eps_run,
            control: RngSnapshot::of(&self.control),
            hidden,
            hidden_rng,
            values: self.values.clone(),
            previous: self.previous.clone(),
            residuals: self.residuals,
            audit: self.audit.clone(),
            converged: self.converged,
        };
        self.write(&Line::Snapshot {
            state: Box::new(state),
        })?;
        self.sink.as_mut().unwrap().flush()?;
        Ok(())
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn values(&self) -> &ValueFunctions {
        &self.values
    }

    pub fn store(&self) -> &EpisodeStore {
        &self.store
    }

    /// One iteration of the loop.
    pub fn step(&mut self) -> Result<()> {
        let p = self.product;
        let t = self.step + 1;
        let ps = self.current.clone();
        let lbl = p.label(&ps.belief);
        let all = p.allowed_actions(&ps, self.eps_run);
        let thr = self.config.safe_threshold;
        let safe: Vec<ProductAction> = safe_actions(&self.values.prob, p, &ps, thr)?
            .into_iter()
            .filter(|a| all.contains(a))
            .collect();
        let (pool, fallback) = if !self.values.constrained {
            (all.clone(), Vec::new())
        } else if safe.is_empty() {
            (Vec::new(), self.fallback(&ps, lbl, &all)?)
        } else {
            (safe.clone(), Vec::new())
        };
        let values = &self.values;
        let mut score = |a: ProductAction| values.q_r(p, &ps, a).map_err(LearnError::from);
        let (act, choice) = self
            .chooser
            .choose(&pool, &fallback, &all, &mut score, &mut self.control)
            .map_err(|e| match e {
                LearnError::NoSafeAction { .. } => LearnError::NoSafeAction {
                    state: ps.to_string(),
                },
                e => e,
            })?;
        let in_safe = safe.contains(&act);
        match choice {
            Choice::Explore => self.audit.explore += 1,
            Choice::Exploit => {
                self.audit.exploit += 1;
                if !in_safe {
                    self.audit.exploit_unsafe += 1;
                }
            }
            Choice::Fallback => {
                self.audit.fallback += 1;
                debug!(
                    "step {t}: no safe action at {ps}, using {}",
                    p.action_name(act)
                );
            }
        }

        let mut next = None;
        for i in 0..self.config.samples_per_update {
            if i > 0 {
                self.hidden.resample(&ps.belief);
            }
            let (succ, o) = p.sample(&ps, act, &mut self.hidden)?;
            let record = TransitionRecord {
                step: t,
                source: ps.clone(),
                action: act,
                observation: o,
                successor: succ.clone(),
                choice,
                safe: in_safe,
            };
            self.write(&Line::Record {
                record: record.clone(),
            })?;
            record_transition(&mut self.store, &mut self.empirical, p, record)?;
            next = Some(succ);
        }
        if let ProductAction::Base(a) = act {
            self.backup(&ps, lbl, a, t)?;
        }
        self.step = t;

        if t.is_multiple_of(self.config.report_every) {
            self.report(safe.len())?;
        }

        let u: f64 = self.control.gen();
        if u < self.config.restart_prob {
            let i = self.control.gen_range(0..self.store.points().len());
            self.current = self.store.point_state(i);
            self.hidden.resample(&self.current.belief);
            self.eps_run = 0;
        } else {
            self.current = self.store.canonical(&next.unwrap());
            self.eps_run = if act.is_epsilon() {
                self.eps_run + 1
            } else {
                0
            };
        }
        if t.is_multiple_of(self.config.checkpoint_every) {
            self.snapshot()?;
        }
        Ok(())
    }

    /// The best-`Q_p` actions, narrowed to those with the best surrogate
    /// value. Before any winning region is found every `Q_p` is 0, and the
    /// surrogate is what tells the actions apart.
    fn fallback(
        &self,
        ps: &ProductState,
        lbl: LabelSet,
        all: &[ProductAction],
    ) -> Result<Vec<ProductAction>> {
        let p = self.product;
        let prob = &self.values.prob;
        let best: Vec<ProductAction> = prob
            .allowed_labeled(p, ps.q, &ps.belief, lbl, self.config.safe_threshold)?
            .into_iter()
            .filter(|a| all.contains(a))
            .collect();
        let mut scored = Vec::with_capacity(best.len());
        for a in best {
            scored.push((
                a,
                prob.surrogate.eval_q_labeled(p, ps.q, &ps.belief, lbl, a)?,
            ));
        }
        let top = scored.iter().map(|(_, v)| *v).fold(f64::MIN, f64::max);
        Ok(scored
            .into_iter()
            .filter(|(_, v)| *v >= top - FALLBACK_TOL)
            .map(|(a, _)| a)
            .collect())
    }

    /// Backs up `Θ'` (surrogate, then reachability) and `Θ` at `((b, q), a)`
    /// from every successor counted so far, replacing the previous vector
    /// taken at the same belief key.
    fn backup(&mut self, ps: &ProductState, lbl: LabelSet, a: usize, t: u64) -> Result<()> {
        let p = self.product;
        let act = ProductAction::Base(a);
        let (b, q) = (&ps.belief, ps.q);
        let q2 = p.automaton().step(q, lbl);
        let samples: Vec<(ProductState, u64)> = self
            .empirical
            .successors(&b.key(), a)
            .map(|(_, c)| (ProductState::new(c.belief.clone(), q2), c.count))
            .collect();

        if !self.all_accepting {
            let prob = &self.values.prob;
            let layer = SurrogateLayer {
                fam: &prob.surrogate,
                gamma_b: self.config.gamma_b,
            };
            let v = empirical_with(&layer, p, &samples, q, act, b, t, false)?;
            self.values.prob.surrogate.replace_or_push(v);
            self.prune(|vf| vf.prob.surrogate.set_mut(q, act));

            let prob = &self.values.prob;
            let layer = ReachLayer {
                reach: &prob.reach,
                surrogate: &prob.surrogate,
                winning_threshold: prob.winning_threshold,
            };
            let v = empirical_with(&layer, p, &samples, q, act, b, t, false)?;
            self.values.prob.reach.replace_or_push(v);
            self.prune(|vf| vf.prob.reach.set_mut(q, act));
        }

        let allowed = self
            .values
            .constrained
            .then_some((&self.values.prob, self.config.safe_threshold));
        let layer = RewardLayer {
            fam: &self.values.reward,
            floor: self.floor,
            allowed,
        };
        let v = empirical_with(&layer, p, &samples, q, act, b, t, false)?;
        self.values.reward.replace_or_push(v);
        self.prune(|vf| vf.reward.set_mut(q, act));
        Ok(())
    }

    fn prune(&mut self, pick: impl Fn(&mut ValueFunctions) -> &mut Vec<AlphaVector>) {
        let point_based = self.config.prune == PruneMode::PointBased;
        let cap = self.config.prune_cap;
        let len = pick(&mut self.values).len();
        if point_based || len > cap {
            let n = self.store.points().len();
            if self.witnesses.as_ref().is_none_or(|(k, _, _)| *k != n) {
                let w = WitnessSet::new((0..n).map(|i| self.store.point_state(i).belief));
                let labels = witness_labels(&w, self.product.labeler());
                self.witnesses = Some((n, w, labels));
            }
            let (_, w, labels) = self.witnesses.as_ref().unwrap();
            let set = pick(&mut self.values);
            *set = prune_pointbased_labeled(set, w, labels);
        } else {
            let set = pick(&mut self.values);
            *set = prune_lp_labeled(set);
        }
    }

    fn report(&mut self, safe: usize) -> Result<()> {
        let p = self.product;
        let mut res = [0.0f64; 3];
        for i in 0..self.store.points().len() {
            let ps = self.store.point_state(i);
            let now = [
                self.values.value_r(p, &ps)?,
                self.values.prob.surrogate.eval_v(p, &ps)?,
                self.values.prob.reach.eval_v(p, &ps)?,
            ];
            let before = [
                self.previous.value_r(p, &ps)?,
                self.previous.prob.surrogate.eval_v(p, &ps)?,
                self.previous.prob.reach.eval_v(p, &ps)?,
            ];
            for k in 0..3 {
                res[k] = res[k].max((now[k] - before[k]).abs());
            }
        }
        self.residuals = Some(res);
        self.previous = self.values.clone();
        let row = MetricsRow {
            step: self.step,
            residual_r: res[0],
            residual_p: res[1],
            residual_reach: res[2],
            vectors_r: self.values.reward.size(),
            vectors_p: self.values.prob.surrogate.size() + self.values.prob.reach.size(),
            safe_actions: safe,
        };
        debug!(
            "step {}: residuals {:e} {:e} {:e}",
            row.step, row.residual_r, row.residual_p, row.residual_reach
        );
        self.write(&Line::Metrics { row: row.clone() })?;
        self.metrics.push(row);
        // the winning test reads the surrogate against its threshold, so it
        // has to settle within that margin before reachability can be trusted
        let tol = self.config.tolerance;
        let surrogate_tol = tol.min(1.0 - self.config.winning_threshold);
        if self.step >= self.config.min_steps
            && res[0] < tol
            && res[1] < surrogate_tol
            && res[2] < tol
        {
            info!("converged after {} steps", self.step);
            self.converged = true;
        }
        Ok(())
    }

    fn outcome(self) -> LearnOutcome {
        let res = self.residuals.unwrap_or([f64::INFINITY; 3]);
        LearnOutcome {
            report: LearnReport {
                steps: self.step,
                converged: self.converged,
                residual_r: res[0],
                residual_p: res[1],
                residual_reach: res[2],
                audit: self.audit,
            },
            values: self.values,
            store: self.store,
            empirical: self.empirical,
            metrics: self.metrics,
        }
    }

    /// Steps until convergence or `max_steps`. Running out of steps returns
    /// `NonConvergence` carrying everything learned so far.
    pub fn run(mut self) -> Result<LearnOutcome> {
        while !self.converged && self.step < self.config.max_steps {
            self.step()?;
        }
        if !self.step.is_multiple_of(self.config.checkpoint_every) {
            self.snapshot()?;
        }
        if let Some(w) = self.sink.as_mut() {
            w.flush()?;
        }
        let out = self.outcome();
        if out.report.converged {
            Ok(out)
        } else {
            Err(LearnError::NonConvergence {
                steps: out.report.steps,
                residual: out.report.residual(),
                partial: Box::new(out),
            })
        }
    }
}

/// Runs the learning loop in memory.
pub fn learn(product: &Product, config: &LearnerConfig) -> Result<LearnOutcome> {
    Learner::new(product, config.clone())?.run()
}
