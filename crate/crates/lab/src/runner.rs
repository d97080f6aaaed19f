//! Evaluation of a policy library over a scenario.
//!
//! Work is split into one task per (lambda, horizon, policy) and run on a
//! rayon pool; results are merged in a fixed order, so output bytes do not
//! depend on scheduling.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use adl_core::instability::{episode_diagnostics, perturbation_probe, DiagnosticsReport};
use adl_core::metrics::{
    best_fixed_allocation, decomposition_gap, empirical_breakdown, instance_bound, path_variation,
    round_loss_surrogate_with, tracking_metrics, Burden, DecompositionInputs, EpisodeMetrics, LossWeights,
    SurrogateRound,
};
use adl_core::model::{validate_action, Tolerances, WinnerId};
use adl_core::policies::{minmax_allocate, reachable_capacity, solve_minmax_ilp, PolicyInstance, PolicyKind, PolicySpec, RoundInputs};
use adl_core::scenario::Scenario;
use adl_core::severity::{run_slope_ogd, scalar_benchmark, theta_needed, SlopeEstimator};
use adl_core::{AdlError, RoundState};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::csv_io::fmt_num;
use crate::error::{LabError, Result};

pub const RESULT_COLUMNS: [&str; 15] = [
    "policy",
    "round",
    "delta_horizon",
    "H",
    "B_needed",
    "tracking",
    "overshoot",
    "undershoot",
    "fairness",
    "m",
    "m_ilp",
    "loss_total",
    "lambda",
    "deficit",
    "theta_needed",
];

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "ADL_LAB_THREADS";

/// One results row; loss columns recompute from `H`, `B_needed`, `m`, `m_ilp`, `lambda`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub policy: String,
    pub round: u64,
    pub delta_horizon: f64,
    pub executed: f64,
    pub b_needed: f64,
    pub tracking: f64,
    pub overshoot: f64,
    pub undershoot: f64,
    pub fairness: f64,
    pub m: f64,
    pub m_ilp: f64,
    pub loss_total: f64,
    pub lambda: f64,
    pub deficit: f64,
    pub theta_needed: f64,
}

impl ResultRow {
    #[allow(clippy::too_many_arguments)]
    pub fn new(policy: &str, state: &RoundState, delta: f64, executed: f64, b: f64, m: f64, m_ilp: f64, lambda: f64) -> Self {
        let e = empirical_breakdown(executed, b, m, m_ilp, lambda);
        ResultRow {
            policy: policy.to_string(),
            round: state.round_id(),
            delta_horizon: delta,
            executed,
            b_needed: b,
            tracking: e.tracking,
            overshoot: (executed - b).max(0.0),
            undershoot: (b - executed).max(0.0),
            fairness: e.fairness,
            m,
            m_ilp,
            loss_total: e.total,
            lambda,
            deficit: state.deficit(),
            theta_needed: theta_needed(b, state.deficit(), state.epsilon()),
        }
    }

    pub fn record(&self) -> Vec<String> {
        let mut out = vec![self.policy.clone(), self.round.to_string()];
        out.extend(
            [
                self.delta_horizon,
                self.executed,
                self.b_needed,
                self.tracking,
                self.overshoot,
                self.undershoot,
                self.fairness,
                self.m,
                self.m_ilp,
                self.loss_total,
                self.lambda,
                self.deficit,
                self.theta_needed,
            ]
            .map(fmt_num),
        );
        out
    }
}

/// Per-round benchmark series at one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Benchmarks {
    pub b_needed: Vec<f64>,
    pub b_needed_hat: Vec<f64>,
}

/// Benchmarks at `delta`. A missing ex ante value comes from the online
/// slope estimator on `alpha_true Q^2` when slopes are recorded, else from
/// the previous round's ex post value.
pub fn benchmarks_at(scenario: &Scenario, delta: f64) -> Result<Benchmarks> {
    let mut rows = Vec::with_capacity(scenario.horizon());
    for (state, truth) in scenario.rounds().iter().zip(scenario.truth()) {
        let b = truth.benchmark(delta).ok_or_else(|| {
            LabError::Config(format!("round {} has no benchmark at horizon {}", state.round_id(), fmt_num(delta)))
        })?;
        rows.push(*b);
    }
    let b_needed: Vec<f64> = rows.iter().map(|b| b.b_needed).collect();
    let slopes: Option<Vec<f64>> = rows.iter().map(|b| b.alpha_true).collect();
    let scales: Option<Vec<f64>> = rows.iter().map(|b| b.q_scale).collect();
    let estimated: Option<Vec<f64>> = match (slopes, scales) {
        (Some(a), Some(q)) => {
            let a_max = a.iter().copied().fold(0.0, f64::max);
            if a_max > 0.0 {
                let est = SlopeEstimator::new(0.0, a_max / 4.0, a_max)?;
                Some(run_slope_ogd(est, &a).iter().zip(&q).map(|(a, q)| scalar_benchmark(*a, *q)).collect())
            } else {
                Some(vec![0.0; a.len()])
            }
        }
        _ => None,
    };
    let b_needed_hat = rows
        .iter()
        .enumerate()
        .map(|(t, b)| {
            b.b_needed_hat.unwrap_or_else(|| match &estimated {
                Some(e) => e[t],
                None if t > 0 => b_needed[t - 1],
                None => 0.0,
            })
        })
        .collect();
    Ok(Benchmarks { b_needed, b_needed_hat })
}

/// Concentration of the lot-grid (or continuous) min-max allocation at `B`
/// clamped to the reachable grid capacity.
pub fn m_ilp_series(scenario: &Scenario, b_needed: &[f64], burden: Burden) -> Result<Vec<f64>> {
    scenario
        .rounds()
        .iter()
        .zip(b_needed)
        .map(|(state, &b)| {
            if state.is_empty() {
                return Ok(0.0);
            }
            let budget = b.min(reachable_capacity(&PolicyKind::MinMaxIlp, state));
            let ctx = |e: AdlError| LabError::model(format!("round {}: min-max reference", state.round_id()), e);
            let x = if state.winners().iter().all(|w| w.lot_size.is_some()) {
                match solve_minmax_ilp(state, budget) {
                    Ok(sol) => sol.action.allocation,
                    Err(AdlError::GridInfeasible { .. }) => minmax_allocate(state, budget).map_err(ctx)?.action.allocation,
                    Err(e) => return Err(ctx(e)),
                }
            } else {
                minmax_allocate(state, budget).map_err(ctx)?.action.allocation
            };
            Ok(burden.concentration(&x, &state.capacities(), state.epsilon()))
        })
        .collect()
}

/// One policy's pass over an episode at fixed (lambda, horizon).
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyRun {
    pub spec: PolicySpec,
    pub rows: Vec<ResultRow>,
    pub allocations: Vec<Vec<f64>>,
    /// Surrogate loss against `B_needed` and against `B_needed_hat`.
    pub surrogate: Vec<f64>,
    pub surrogate_hat: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct EpisodeSettings {
    pub weights: LossWeights,
    pub burden: Burden,
    pub static_regret: bool,
}

impl EpisodeSettings {
    pub fn new(weights: LossWeights, burden: Burden) -> Self {
        EpisodeSettings { weights, burden, static_regret: true }
    }
}

pub fn run_policy(
    scenario: &Scenario,
    spec: &PolicySpec,
    settings: &EpisodeSettings,
    delta: f64,
    bench: &Benchmarks,
    m_ilp: &[f64],
) -> Result<PolicyRun> {
    let w = &settings.weights;
    let mut policy = PolicyInstance::new(spec.clone(), *w).map_err(|e| LabError::model(format!("policy {}", spec.name), e))?;
    let recorded = matches!(spec.kind, PolicyKind::Production | PolicyKind::Comparator);
    let t = scenario.horizon();
    let mut run = PolicyRun {
        spec: spec.clone(),
        rows: Vec::with_capacity(t),
        allocations: Vec::with_capacity(t),
        surrogate: Vec::with_capacity(t),
        surrogate_hat: Vec::with_capacity(t),
    };
    let removal = scenario.removes_closed_winners();
    let tol = Tolerances::default();
    let mut closed: BTreeSet<WinnerId> = BTreeSet::new();
    for (k, (full, truth)) in scenario.rounds().iter().zip(scenario.truth()).enumerate() {
        let (b, b_hat) = (bench.b_needed[k], bench.b_needed_hat[k]);
        let ctx = |e: AdlError| LabError::model(format!("policy {}, round {}", spec.name, full.round_id()), e);
        let keep: Vec<usize> = (0..full.len()).filter(|&i| !closed.contains(&full.winners()[i].id)).collect();
        let restricted = keep.len() < full.len();
        let pick = |v: &Option<Vec<f64>>| -> Option<Vec<f64>> {
            v.as_ref().map(|v| if restricted { keep.iter().map(|&i| v[i]).collect() } else { v.clone() })
        };
        let (scores, production, comparator) = (pick(&truth.scores), pick(&truth.production), pick(&truth.comparator));
        let sub;
        let state = if restricted {
            sub = full.with_winners(keep.iter().map(|&i| full.winners()[i].clone()).collect()).map_err(ctx)?;
            &sub
        } else {
            full
        };
        let inputs = RoundInputs {
            b_needed: b,
            b_needed_hat: b_hat,
            scores: scores.as_deref(),
            production: production.as_deref(),
            comparator: comparator.as_deref(),
        };
        let mut action = policy.act(state, &inputs).map_err(ctx)?;
        if !recorded {
            let report = validate_action(state, &action);
            if !report.is_ok() {
                return Err(LabError::Internal(format!(
                    "policy {}, round {}: infeasible action {:?}",
                    spec.name,
                    state.round_id(),
                    report.violations
                )));
            }
        }
        policy.observe(state, b);
        if removal {
            for (w, &x) in state.winners().iter().zip(&action.allocation) {
                if x >= w.capacity - tol.boundary(w.capacity) {
                    closed.insert(w.id.clone());
                }
            }
        }
        if restricted {
            let mut x = vec![0.0; full.len()];
            for (&i, &v) in keep.iter().zip(&action.allocation) {
                x[i] = v;
            }
            action.allocation = x;
        }
        let state = full;
        let caps = state.capacities();
        let executed = action.executed();
        let m = settings.burden.concentration(&action.allocation, &caps, state.epsilon());
        run.rows.push(ResultRow::new(&spec.name, state, delta, executed, b, m, m_ilp[k], w.lambda_empirical));
        let sur = |target: f64| round_loss_surrogate_with(&action.allocation, &caps, target, state.epsilon(), w, settings.burden).total;
        run.surrogate.push(sur(b));
        run.surrogate_hat.push(sur(b_hat));
        run.allocations.push(action.allocation);
    }
    Ok(run)
}

/// Largest queue jump over the episode, for score-driven stateless rules.
fn probe_jump(scenario: &Scenario, spec: &PolicySpec, allocations: &[Vec<f64>]) -> Option<f64> {
    if !matches!(spec.kind, PolicyKind::Queue { .. } | PolicyKind::ProRata | PolicyKind::IntegerProRata { .. } | PolicyKind::MinMaxIlp) {
        return None;
    }
    let mut best: Option<f64> = None;
    for ((state, truth), x) in scenario.rounds().iter().zip(scenario.truth()).zip(allocations) {
        let budget: f64 = x.iter().sum();
        if budget <= 0.0 {
            continue;
        }
        let zeros = vec![0.0; state.len()];
        let base = truth.scores.as_deref().unwrap_or(&zeros);
        if let Ok(j) = perturbation_probe(state, budget, base, 1e-9, &spec.kind) {
            best = Some(best.map_or(j, |b: f64| b.max(j)));
        }
    }
    best
}

fn constant_winner_set(scenario: &Scenario) -> bool {
    let first = match scenario.rounds().first() {
        Some(r) => r,
        None => return false,
    };
    !first.is_empty()
        && scenario.rounds().iter().all(|r| {
            r.len() == first.len() && r.winners().iter().zip(first.winners()).all(|(a, b)| a.id == b.id)
        })
}

/// Everything computed for one (lambda, horizon) group.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutcome {
    pub lambda: f64,
    pub delta_horizon: f64,
    pub runs: Vec<PolicyRun>,
    pub metrics: Vec<EpisodeMetrics>,
    pub diagnostics: Vec<DiagnosticsReport>,
}

/// Episode metrics for a set of runs sharing lambda and horizon.
pub fn summarize(
    scenario: &Scenario,
    runs: Vec<PolicyRun>,
    settings: &EpisodeSettings,
    lambda: f64,
    delta: f64,
    bench: &Benchmarks,
) -> Result<EpisodeOutcome> {
    let deficits: Vec<f64> = scenario.rounds().iter().map(|r| r.deficit()).collect();
    let thetas: Vec<f64> = scenario
        .rounds()
        .iter()
        .zip(&bench.b_needed)
        .map(|(r, &b)| theta_needed(b, r.deficit(), r.epsilon()))
        .collect();
    let p_theta = path_variation(&thetas);
    let envelope = instance_bound(p_theta, &deficits);

    let static_best = if settings.static_regret && constant_winner_set(scenario) {
        let rounds: Vec<SurrogateRound> = scenario
            .rounds()
            .iter()
            .zip(&bench.b_needed)
            .map(|(r, &b)| SurrogateRound { capacities: r.capacities(), target: b, epsilon: r.epsilon() })
            .collect();
        Some(best_fixed_allocation(&rounds, &settings.weights, settings.burden)?.loss)
    } else {
        None
    };
    let comparator = runs.iter().find(|r| matches!(r.spec.kind, PolicyKind::Comparator));
    let comparator_total: Option<f64> = comparator.map(|c| c.surrogate.iter().sum());

    let objectives: Vec<f64> = runs.iter().map(|r| r.rows.iter().map(|x| x.loss_total).sum()).collect();
    let best_objective = objectives.iter().copied().fold(f64::INFINITY, f64::min);
    let trackings: Vec<f64> = runs.iter().map(|r| r.rows.iter().map(|x| x.tracking).sum()).collect();
    let best_tracking = trackings.iter().copied().fold(f64::INFINITY, f64::min);
    let library: Vec<Vec<f64>> = runs.iter().map(|r| r.surrogate.clone()).collect();
    let library_hat: Vec<Vec<f64>> = runs.iter().map(|r| r.surrogate_hat.clone()).collect();

    let mut metrics = Vec::with_capacity(runs.len());
    let mut diagnostics = Vec::with_capacity(runs.len());
    for (k, run) in runs.iter().enumerate() {
        let executed: Vec<f64> = run.rows.iter().map(|r| r.executed).collect();
        let tm = tracking_metrics(&executed, &bench.b_needed)?;
        let surrogate: f64 = run.surrogate.iter().sum();
        let slack = decomposition_gap(&DecompositionInputs {
            policy_loss: &run.surrogate,
            policy_loss_hat: &run.surrogate_hat,
            library_loss: &library,
            library_loss_hat: &library_hat,
            b_needed: &bench.b_needed,
            b_needed_hat: &bench.b_needed_hat,
            lambda_track: settings.weights.lambda_track,
        })
        .map_err(|e| match e {
            AdlError::DecompositionViolated { slack } => {
                LabError::Internal(format!("policy {}: decomposition slack {slack}", run.spec.name))
            }
            other => LabError::model(format!("policy {}", run.spec.name), other),
        })?;
        let objective = objectives[k];
        metrics.push(EpisodeMetrics {
            policy: run.spec.name.clone(),
            delta_horizon: delta,
            lambda,
            objective,
            tracking: tm.total_tracking,
            fairness: run.rows.iter().map(|r| r.fairness).sum(),
            overshoot: tm.total_overshoot,
            undershoot: tm.total_undershoot,
            surrogate_loss: Some(surrogate),
            static_regret: static_best.map(|s| surrogate - s),
            dynamic_regret: comparator_total.map(|c| surrogate - c),
            policy_class_regret: objective - best_objective,
            tracking_regret: trackings[k] - best_tracking,
            failure: tm.total_undershoot,
            p_theta,
            instance_bound: envelope,
            bound_ratio: (envelope > 0.0).then(|| objective / envelope),
            decomposition_slack: Some(slack),
        });
        let slopes: Option<Vec<Vec<f64>>> = scenario.truth().iter().map(|t| t.slopes.clone()).collect();
        let mut diag = episode_diagnostics(scenario.rounds(), &run.allocations, slopes.as_deref())?;
        diag.perturbation_jump = probe_jump(scenario, &run.spec, &run.allocations);
        diagnostics.push(diag);
    }
    Ok(EpisodeOutcome { lambda, delta_horizon: delta, runs, metrics, diagnostics })
}

/// Runs every policy at one (lambda, horizon) and summarizes.
pub fn run_episode(
    scenario: &Scenario,
    policies: &[PolicySpec],
    settings: &EpisodeSettings,
    lambda: f64,
    delta: f64,
) -> Result<EpisodeOutcome> {
    let bench = benchmarks_at(scenario, delta)?;
    let m_ilp = m_ilp_series(scenario, &bench.b_needed, settings.burden)?;
    let runs = policies
        .iter()
        .map(|p| run_policy(scenario, p, settings, delta, &bench, &m_ilp))
        .collect::<Result<Vec<_>>>()?;
    summarize(scenario, runs, settings, lambda, delta, &bench)
}

/// All outcomes of a run, ordered by lambda then horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub outcomes: Vec<EpisodeOutcome>,
}

impl RunOutput {
    /// Rows for one lambda, sorted by (policy, round, horizon).
    pub fn rows_for(&self, lambda: f64) -> Vec<&ResultRow> {
        let mut rows: Vec<&ResultRow> = self
            .outcomes
            .iter()
            .filter(|o| o.lambda == lambda)
            .flat_map(|o| o.runs.iter().flat_map(|r| r.rows.iter()))
            .collect();
        rows.sort_by(|a, b| {
            a.policy.cmp(&b.policy).then(a.round.cmp(&b.round)).then(a.delta_horizon.total_cmp(&b.delta_horizon))
        });
        rows
    }

    pub fn metrics(&self, policy: &str, lambda: f64, delta: f64) -> Option<&EpisodeMetrics> {
        self.outcomes
            .iter()
            .filter(|o| o.lambda == lambda && o.delta_horizon == delta)
            .flat_map(|o| o.metrics.iter())
            .find(|m| m.policy == policy)
    }
}

fn pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().map_err(|_| LabError::Config(format!("{THREADS_ENV}=`{v}` is not a count")))?;
        builder = builder.num_threads(n.max(1));
    }
    builder.build().map_err(|e| LabError::Internal(format!("thread pool: {e}")))
}

/// Evaluates `config` on `scenario` without touching the file system.
pub fn evaluate_scenario(config: &RunConfig, scenario: &Scenario) -> Result<RunOutput> {
    config.validate()?;
    let deltas = match &config.delta {
        Some(d) => d.clone(),
        None => scenario.delta_horizons(),
    };
    if deltas.is_empty() {
        return Err(LabError::Config("scenario has no benchmarks; supply benchmarks.csv".into()));
    }
    let groups: Vec<(f64, f64)> = config.lambda_fair.iter().flat_map(|&l| deltas.iter().map(move |&d| (l, d))).collect();
    let pool = pool()?;
    pool.install(|| {
        let prepared = deltas
            .par_iter()
            .map(|&d| {
                let bench = benchmarks_at(scenario, d)?;
                let m = m_ilp_series(scenario, &bench.b_needed, config.burden)?;
                Ok((bench, m))
            })
            .collect::<Result<Vec<_>>>()?;
        let tasks: Vec<(usize, usize)> =
            (0..groups.len()).flat_map(|g| (0..config.policies.len()).map(move |p| (g, p))).collect();
        let runs = tasks
            .par_iter()
            .map(|&(g, p)| {
                let (lambda, delta) = groups[g];
                let (bench, m_ilp) = &prepared[g % deltas.len()];
                let settings = EpisodeSettings {
                    weights: config.weights_for(lambda),
                    burden: config.burden,
                    static_regret: config.static_regret,
                };
                run_policy(scenario, &config.policies[p], &settings, delta, bench, m_ilp)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut runs = runs.into_iter();
        let per_group: Vec<Vec<PolicyRun>> =
            groups.iter().map(|_| runs.by_ref().take(config.policies.len()).collect()).collect();
        let outcomes = per_group
            .into_par_iter()
            .enumerate()
            .map(|(g, group)| {
                let (lambda, delta) = groups[g];
                let settings = EpisodeSettings {
                    weights: config.weights_for(lambda),
                    burden: config.burden,
                    static_regret: config.static_regret,
                };
                summarize(scenario, group, &settings, lambda, delta, &prepared[g % deltas.len()].0)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RunOutput { outcomes })
    })
}

pub fn results_file(out: &Path, lambda: f64) -> PathBuf {
    out.join(format!("results_lambda_{}.csv", fmt_num(lambda)))
}

pub fn summary_file(out: &Path, lambda: f64) -> PathBuf {
    out.join(format!("summary_lambda_{}.json", fmt_num(lambda)))
}

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";

const DIAGNOSTIC_COLUMNS: [&str; 9] = [
    "lambda",
    "policy",
    "delta_horizon",
    "inversion_rate",
    "pooled_inversion_rate",
    "rank_stability",
    "perturbation_jump",
    "effective_slope_variation",
    "effective_slope_path",
];

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| LabError::File { path: path.into(), message: e.to_string() })?;
    let fail = |e: csv::Error| LabError::File { path: path.into(), message: e.to_string() };
    w.write_record(header).map_err(fail)?;
    for r in rows {
        w.write_record(&r).map_err(fail)?;
    }
    w.flush().map_err(|e| LabError::io(path, e))
}

#[derive(Serialize)]
struct Summary<'a> {
    lambda: f64,
    scenario: &'a str,
    episodes: Vec<&'a EpisodeMetrics>,
}

/// Writes results, summaries and diagnostics under `out`.
pub fn write_outputs(output: &RunOutput, scenario: &Scenario, config: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out).map_err(|e| LabError::io(out, e))?;
    let mut written = Vec::new();
    for &lambda in &config.lambda_fair {
        let path = results_file(out, lambda);
        write_rows(&path, &RESULT_COLUMNS, output.rows_for(lambda).into_iter().map(ResultRow::record))?;
        written.push(path);
        let mut episodes: Vec<&EpisodeMetrics> =
            output.outcomes.iter().filter(|o| o.lambda == lambda).flat_map(|o| o.metrics.iter()).collect();
        episodes.sort_by(|a, b| a.policy.cmp(&b.policy).then(a.delta_horizon.total_cmp(&b.delta_horizon)));
        let summary = Summary { lambda, scenario: &scenario.metadata().name, episodes };
        let path = summary_file(out, lambda);
        let json = serde_json::to_string_pretty(&summary).map_err(|e| LabError::Internal(e.to_string()))?;
        fs::write(&path, json + "\n").map_err(|e| LabError::io(&path, e))?;
        written.push(path);
    }
    let path = out.join(DIAGNOSTICS_FILE);
    write_rows(&path, &DIAGNOSTIC_COLUMNS, diagnostic_records(output))?;
    written.push(path);
    Ok(written)
}

pub fn diagnostic_records(output: &RunOutput) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for o in &output.outcomes {
        for (run, d) in o.runs.iter().zip(&o.diagnostics) {
            rows.push(vec![
                fmt_num(o.lambda),
                run.spec.name.clone(),
                fmt_num(o.delta_horizon),
                fmt_num(d.inversion_rate),
                fmt_num(d.pooled_inversion_rate),
                d.rank_stability.map(fmt_num).unwrap_or_default(),
                d.perturbation_jump.map(fmt_num).unwrap_or_default(),
                fmt_num(d.effective_slope_variation),
                d.effective_slope_path.iter().map(|v| fmt_num(*v)).collect::<Vec<_>>().join(";"),
            ]);
        }
    }
    rows
}

/// Loads the scenario, evaluates and writes outputs to `config.out`.
pub fn evaluate(config: &RunConfig) -> Result<(RunOutput, Vec<PathBuf>)> {
    let scenario = config.scenario.load(config.seed)?;
    let output = evaluate_scenario(config, &scenario)?;
    let files = write_outputs(&output, &scenario, config, &config.out)?;
    Ok((output, files))
}
