//! The subcommands. Each one reads a manifest, does its work and leaves its
//! artifacts in the output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde::Serialize;

use iltl_pomdp::learner::{evaluate_policy, write_metrics_csv, LearnError, Learner, SafetyAudit};
use iltl_pomdp::pomdp::HiddenState;
use iltl_pomdp::product::{Product, ProductAction};
use iltl_pomdp::value::{
    solve_pbvi, PhaseReport, PolicyFile, ValueError, ValueFile, ValueFunctions,
};

use crate::error::{CliError, Result};
use crate::manifest::{Inputs, RunManifest};

fn out_dir(m: &RunManifest) -> Result<PathBuf> {
    let out = m.out_dir();
    fs::create_dir_all(&out).map_err(|e| CliError::input(out.display(), e))?;
    Ok(out)
}

fn write(path: &Path, text: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::input(path.display(), e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::input(path.display(), e))?;
    write(path, text + "\n")
}

fn action_name(p: &Product, act: ProductAction) -> String {
    match act {
        ProductAction::Base(a) => p.model().actions()[a].clone(),
        ProductAction::Epsilon(e) => format!("eps:{}", p.automaton().epsilon_edges()[e].name),
    }
}

/// Checks every input and prints what was found. Problems with the model's
/// numbers, the automaton's structure or the proposition alphabet are
/// collected; unreadable files stop the check.
pub fn validate(m: &RunManifest) -> Result<()> {
    m.run_config()?;
    let inputs = Inputs::load(m)?;
    let model = &inputs.model;
    println!(
        "model: {} states, {} actions, {} observations",
        model.n_states(),
        model.n_actions(),
        model.n_observations()
    );
    let aut = &inputs.automaton;
    println!(
        "automaton: {} states, {} epsilon edges, propositions [{}]",
        aut.n_states(),
        aut.epsilon_edges().len(),
        aut.aps().join(", ")
    );
    if let Some(f) = &inputs.formula {
        println!("formula: {f}");
    }
    let mut problems: Vec<String> = inputs.violations.iter().map(|v| v.to_string()).collect();
    if problems.is_empty() {
        if let Err(e) = inputs.product() {
            problems.push(e.to_string());
        }
    }
    for p in &problems {
        println!("violation: {p}");
    }
    if problems.is_empty() {
        println!("ok");
        Ok(())
    } else {
        Err(CliError::Invalid(format!(
            "{} violation(s)",
            problems.len()
        )))
    }
}

#[derive(Debug, Serialize)]
struct SolveSummary {
    converged: bool,
    v_r: f64,
    v_p: f64,
    iterations: usize,
    residual: f64,
    belief_points: usize,
    vectors_r: usize,
    phases: Vec<PhaseReport>,
}

fn write_values(
    out: &Path,
    product: &Product,
    values: &ValueFunctions,
    file: ValueFile,
) -> Result<()> {
    write(&out.join("values.json"), file.to_json_string() + "\n")?;
    write(
        &out.join("policy.json"),
        PolicyFile::new(product, values).to_json_string() + "\n",
    )
}

pub fn solve(m: &RunManifest) -> Result<()> {
    let config = m.run_config()?;
    let product = Inputs::load(m)?.product()?;
    let out = out_dir(m)?;
    let beliefs = config.beliefs.points(product.model(), m.seed(&config));
    info!("solving over {} belief points", beliefs.len());
    let (solution, failure) = match solve_pbvi(&product, &beliefs, &config.solve) {
        Ok(s) => (s, None),
        Err(ValueError::NonConvergence {
            phase,
            sweeps,
            residual,
            partial,
        }) => (
            *partial,
            Some(CliError::NotConverged(format!(
                "{phase} phase did not converge after {sweeps} sweeps (residual {residual:e})"
            ))),
        ),
        Err(e) => return Err(e.into()),
    };
    let values = &solution.values;
    let init = product.initial();
    let summary = SolveSummary {
        converged: failure.is_none(),
        v_r: values.value_r(&product, &init)?,
        v_p: values.value_p(&product, &init)?,
        iterations: solution.report.sweeps(),
        residual: solution.report.residual(),
        belief_points: beliefs.len(),
        vectors_r: values.reward.size(),
        phases: solution.report.phases.clone(),
    };
    write_values(
        &out,
        &product,
        values,
        ValueFile::new(values, Some(solution.report.clone())),
    )?;
    write_json(&out.join("summary.json"), &summary)?;
    println!(
        "V_r = {:.6}  V_p = {:.6}  sweeps = {}  residual = {:e}",
        summary.v_r, summary.v_p, summary.iterations, summary.residual
    );
    failure.map_or(Ok(()), Err)
}

#[derive(Debug, Serialize)]
struct LearnSummary {
    converged: bool,
    steps: u64,
    v_r: f64,
    v_p: f64,
    residual_r: f64,
    residual_p: f64,
    residual_reach: f64,
    points: usize,
    records: usize,
    audit: SafetyAudit,
}

/// `resume`: `Some(None)` continues from the checkpoint in the output
/// directory, `Some(Some(path))` from another log, which is copied there
/// first.
pub fn learn(m: &RunManifest, resume: Option<Option<PathBuf>>) -> Result<()> {
    let config = m.run_config()?;
    let product = Inputs::load(m)?.product()?;
    let out = out_dir(m)?;
    let checkpoint = out.join("checkpoint.jsonl");
    let learner = match resume {
        Some(from) => {
            if let Some(from) = from.filter(|p| *p != checkpoint) {
                fs::copy(&from, &checkpoint).map_err(|e| CliError::input(from.display(), e))?;
            }
            if !checkpoint.exists() {
                return Err(CliError::Input(format!(
                    "no checkpoint at {}",
                    checkpoint.display()
                )));
            }
            Learner::resume(&product, config.learn.clone(), &checkpoint)?
        }
        None => {
            let mut l = Learner::new(&product, config.learn.clone())?;
            l.checkpoint_to(&checkpoint)?;
            l
        }
    };
    let (outcome, failure) = match learner.run() {
        Ok(o) => (o, None),
        Err(LearnError::NonConvergence {
            steps,
            residual,
            partial,
        }) => (
            *partial,
            Some(CliError::NotConverged(format!(
                "learning did not converge in {steps} steps (residual {residual:e})"
            ))),
        ),
        Err(e) => return Err(e.into()),
    };
    let values = &outcome.values;
    let init = product.initial();
    let report = &outcome.report;
    let summary = LearnSummary {
        converged: report.converged,
        steps: report.steps,
        v_r: values.value_r(&product, &init)?,
        v_p: values.value_p(&product, &init)?,
        residual_r: report.residual_r,
        residual_p: report.residual_p,
        residual_reach: report.residual_reach,
        points: outcome.store.points().len(),
        records: outcome.store.len(),
        audit: report.audit.clone(),
    };
    write_values(&out, &product, values, ValueFile::new(values, None))?;
    let metrics = out.join("metrics.csv");
    write_metrics_csv(&outcome.metrics, &metrics)
        .map_err(|e| CliError::input(metrics.display(), e))?;
    write_json(&out.join("summary.json"), &summary)?;
    println!(
        "V_r = {:.6}  V_p = {:.6}  steps = {}  residual = {:e}",
        summary.v_r,
        summary.v_p,
        summary.steps,
        report.residual()
    );
    failure.map_or(Ok(()), Err)
}

fn load_policy(
    m: &RunManifest,
    policy: Option<PathBuf>,
    product: &Product,
) -> Result<ValueFunctions> {
    let path = policy.unwrap_or_else(|| m.out_dir().join("policy.json"));
    let file = PolicyFile::load(&path).map_err(|e| CliError::input(path.display(), e))?;
    Ok(file.into_values(product)?)
}

#[derive(Debug, Serialize)]
struct EvaluationSummary {
    runs: usize,
    horizon: usize,
    window: usize,
    mean_discounted_reward: f64,
    window_rate: f64,
    unsafe_steps: usize,
}

pub struct EvaluateArgs {
    pub policy: Option<PathBuf>,
    pub runs: Option<usize>,
    pub horizon: Option<usize>,
    pub window: Option<usize>,
}

pub fn evaluate(m: &RunManifest, args: EvaluateArgs) -> Result<()> {
    let config = m.run_config()?;
    let product = Inputs::load(m)?.product()?;
    let values = load_policy(m, args.policy, &product)?;
    let out = out_dir(m)?;
    let runs = args.runs.unwrap_or(config.evaluate.runs);
    let horizon = args.horizon.unwrap_or(config.evaluate.horizon);
    let window = args.window.unwrap_or(config.evaluate.window);
    let report = evaluate_policy(&product, &values, runs, horizon, window, m.seed(&config))?;
    write(&out.join("evaluation.csv"), report.to_csv())?;
    let summary = EvaluationSummary {
        runs: report.runs.len(),
        horizon,
        window,
        mean_discounted_reward: report.mean_discounted_reward,
        window_rate: report.window_rate,
        unsafe_steps: report.runs.iter().map(|r| r.unsafe_steps).sum(),
    };
    write_json(&out.join("evaluation.json"), &summary)?;
    println!(
        "{} runs  mean discounted reward = {:.6}  window rate = {:.4}",
        summary.runs, summary.mean_discounted_reward, summary.window_rate
    );
    Ok(())
}

/// One episode under the policy, written step by step to `trace.csv`.
pub fn simulate(m: &RunManifest, policy: Option<PathBuf>, steps: Option<usize>) -> Result<()> {
    let config = m.run_config()?;
    let product = Inputs::load(m)?.product()?;
    let values = load_policy(m, policy, &product)?;
    let out = out_dir(m)?;
    let horizon = steps.unwrap_or(config.evaluate.horizon);
    let model = product.model();
    let mut hidden = HiddenState::new(model, m.seed(&config));
    let mut ps = product.initial();
    let mut csv = String::from("t,state,action,observation,q,accepting,reward,belief\n");
    let (mut t, mut eps_run, mut total, mut discount) = (0, 0, 0.0, 1.0);
    while t < horizon {
        let mut act = match values.extract_policy(&product, &ps) {
            Ok(a) => a,
            Err(ValueError::NoSafeAction { .. }) => values.policy_action(&product, &ps)?.0,
            Err(e) => return Err(e.into()),
        };
        if act.is_epsilon() && eps_run >= product.n_automaton_states() {
            let base: Vec<ProductAction> =
                (0..model.n_actions()).map(ProductAction::Base).collect();
            act = values.reward.argmax_among(&product, &ps, &base)?.0;
        }
        let state = hidden.current();
        let reward = match act {
            ProductAction::Base(a) => model.reward(state, a),
            ProductAction::Epsilon(_) => 0.0,
        };
        let (next, obs) = product.sample(&ps, act, &mut hidden)?;
        let belief: Vec<String> = ps.belief.probs().iter().map(|x| x.to_string()).collect();
        writeln!(
            csv,
            "{t},{},{},{},{},{},{reward},{}",
            model.states()[state],
            action_name(&product, act),
            obs.map_or(String::new(), |o| model.observations()[o].clone()),
            product.automaton().state_name(ps.q),
            product.is_buchi(&ps),
            belief.join(";")
        )
        .expect("writing to a string");
        if act.is_epsilon() {
            eps_run += 1;
        } else {
            total += discount * reward;
            discount *= model.discount();
            t += 1;
            eps_run = 0;
        }
        ps = next;
    }
    write(&out.join("trace.csv"), csv)?;
    println!("{horizon} steps  discounted reward = {total:.6}  final state {ps}");
    Ok(())
}
