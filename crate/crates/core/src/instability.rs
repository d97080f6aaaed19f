//! Queue-instability diagnostics.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::metrics::path_variation;
use crate::model::{RoundState, WinnerId};
use crate::policies::{allocate, queue_allocate, PolicyKind, RoundInputs, ScoredWinners};
use crate::scenario::gen_churn_instance;
use crate::{num, AdlError, Result};

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiagnosticsReport {
    /// Mean of per-round inversion rates.
    pub inversion_rate: f64,
    /// Inversions over all adjacent pairs in the episode.
    pub pooled_inversion_rate: f64,
    /// Mean adjacent-round Spearman correlation over the rounds where it is defined.
    pub rank_stability: Option<f64>,
    pub perturbation_jump: Option<f64>,
    pub effective_slope_path: Vec<f64>,
    pub effective_slope_variation: f64,
}

/// `(violations, adjacent pairs)` after sorting by capacity descending.
pub fn inversion_counts(capacities: &[f64], x: &[f64]) -> (usize, usize) {
    let n = capacities.len();
    if n <= 1 {
        return (0, 0);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| capacities[b].total_cmp(&capacities[a]).then(a.cmp(&b)));
    let tol = 1e-9 * capacities.iter().copied().fold(0.0, f64::max);
    let violations = order
        .windows(2)
        .filter(|w| {
            let (a, b) = (w[0], w[1]);
            capacities[a] > capacities[b] && capacities[a] - x[a] < capacities[b] - x[b] - tol
        })
        .count();
    (violations, n - 1)
}

/// Fraction of capacity-adjacent pairs whose residual order flips.
pub fn monotonicity_violations(capacities: &[f64], x: &[f64]) -> f64 {
    match inversion_counts(capacities, x) {
        (_, 0) => 0.0,
        (v, p) => v as f64 / p as f64,
    }
}

/// Normalized burdens `x_i / (u_i + eps)` keyed by winner id.
pub fn burden_map(state: &RoundState, x: &[f64]) -> BTreeMap<WinnerId, f64> {
    state
        .winners()
        .iter()
        .zip(x)
        .map(|(w, &xi)| (w.id.clone(), xi / (w.capacity + state.epsilon())))
        .collect()
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman correlation (average ranks) over the shared ids. `None` when
/// fewer than three ids are shared or either side is rank-constant.
pub fn rank_stability(prev: &BTreeMap<WinnerId, f64>, curr: &BTreeMap<WinnerId, f64>) -> Option<f64> {
    let (a, b): (Vec<f64>, Vec<f64>) = prev.iter().filter_map(|(id, &p)| curr.get(id).map(|&c| (p, c))).unzip();
    if a.len() < 3 {
        return None;
    }
    let (ra, rb) = (average_ranks(&a), average_ranks(&b));
    let n = ra.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return None;
    }
    Some(num::clamp(cov / num::sqrt(va * vb), -1.0, 1.0))
}

/// Swaps the lead between the two highest-scored winners with `u_i >= B`
/// by a margin `delta` and returns `||pi(s) - pi(s')||_1`. Every other
/// winner is pushed below both.
pub fn perturbation_probe(
    state: &RoundState,
    budget: f64,
    base_scores: &[f64],
    delta: f64,
    kind: &PolicyKind,
) -> Result<f64> {
    if base_scores.len() != state.len() {
        return Err(AdlError::LengthMismatch { left: base_scores.len(), right: state.len() });
    }
    let mut eligible: Vec<usize> = (0..state.len()).filter(|&i| state.winners()[i].capacity >= budget).collect();
    eligible.sort_by(|&a, &b| base_scores[b].total_cmp(&base_scores[a]).then(a.cmp(&b)));
    let (i, j) = match eligible[..] {
        [i, j, ..] => (i, j),
        _ => return Err(AdlError::NoJumpWitness),
    };
    let top = base_scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s: Vec<f64> = base_scores.iter().map(|&b| -1.0 - (top - b)).collect();
    s[i] = delta;
    s[j] = 0.0;
    let mut swapped = s.clone();
    swapped[i] = 0.0;
    swapped[j] = delta;
    let run = |scores: Vec<f64>| -> Result<Vec<f64>> {
        match kind {
            PolicyKind::Queue { .. } => Ok(queue_allocate(state, budget, &ScoredWinners::new(scores)?)?.allocation),
            other => {
                let inputs = RoundInputs { scores: Some(&scores), ..RoundInputs::default() };
                Ok(allocate(other, state, budget, &inputs)?.allocation)
            }
        }
    };
    let (a, b) = (run(s)?, run(swapped)?);
    Ok(num::sum(a.iter().zip(&b).map(|(p, q)| num::abs(p - q))))
}

/// `sum alpha_i q_i^2 / sum q_i^2`.
pub fn effective_slope(alphas: &[f64], quantities: &[f64]) -> Result<f64> {
    if alphas.len() != quantities.len() {
        return Err(AdlError::LengthMismatch { left: alphas.len(), right: quantities.len() });
    }
    let weight = num::sum(quantities.iter().map(|q| q * q));
    if weight == 0.0 {
        return Err(AdlError::NoExecution);
    }
    Ok(num::sum(alphas.iter().zip(quantities).map(|(a, q)| a * q * q)) / weight)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChurnOutcome {
    pub slope_path: Vec<f64>,
    pub variation: f64,
    /// Winners still active after each round.
    pub survivors: Vec<usize>,
}

/// Runs `kind` on the churn instance, dropping every winner whose haircut
/// reaches its capacity. Executed quantities are taken proportional to haircuts.
pub fn churn_experiment(horizon: usize, alpha_min: f64, alpha_max: f64, kind: &PolicyKind) -> Result<ChurnOutcome> {
    let scenario = gen_churn_instance(horizon, alpha_min, alpha_max)?;
    let template = &scenario.rounds()[0];
    let truth = &scenario.truth()[0];
    let slopes = truth.slopes.as_deref().ok_or(AdlError::DegenerateSlopes)?;
    let scores = truth.scores.as_deref();
    let mut alive: Vec<usize> = (0..template.len()).collect();
    let mut slope_path = Vec::with_capacity(horizon);
    let mut survivors = Vec::with_capacity(horizon);
    for (round, state_t) in scenario.rounds().iter().enumerate() {
        let winners = alive.iter().map(|&i| state_t.winners()[i].clone()).collect();
        let state = state_t.with_winners(winners)?;
        let round_scores: Option<Vec<f64>> = scores.map(|s| alive.iter().map(|&i| s[i]).collect());
        let b = scenario.truth()[round].benchmarks.first().map_or(1.0, |bm| bm.b_needed);
        let budget = num::clamp(b, 0.0, state.total_capacity());
        let inputs = RoundInputs { b_needed: b, b_needed_hat: b, scores: round_scores.as_deref(), ..RoundInputs::default() };
        let x = allocate(kind, &state, budget, &inputs)?.allocation;
        let alphas: Vec<f64> = alive.iter().map(|&i| slopes[i]).collect();
        slope_path.push(effective_slope(&alphas, &x)?);
        let tol = crate::model::Tolerances::default();
        alive = alive
            .iter()
            .zip(&x)
            .zip(state.winners())
            .filter(|((_, &xi), w)| xi < w.capacity - tol.boundary(w.capacity))
            .map(|((&i, _), _)| i)
            .collect();
        survivors.push(alive.len());
    }
    let variation = path_variation(&slope_path);
    Ok(ChurnOutcome { slope_path, variation, survivors })
}

/// Episode-level diagnostics for one policy's allocations. `slopes`, when
/// given, holds per-winner slopes aligned with each round.
pub fn episode_diagnostics(states: &[RoundState], allocations: &[Vec<f64>], slopes: Option<&[Vec<f64>]>) -> Result<DiagnosticsReport> {
    if states.len() != allocations.len() {
        return Err(AdlError::LengthMismatch { left: states.len(), right: allocations.len() });
    }
    let mut rates = Vec::with_capacity(states.len());
    let (mut violations, mut pairs) = (0usize, 0usize);
    let mut correlations = Vec::new();
    let mut prev: Option<BTreeMap<WinnerId, f64>> = None;
    let mut slope_path = Vec::new();
    for (t, (state, x)) in states.iter().zip(allocations).enumerate() {
        let caps = state.capacities();
        let (v, p) = inversion_counts(&caps, x);
        violations += v;
        pairs += p;
        rates.push(if p == 0 { 0.0 } else { v as f64 / p as f64 });
        let burdens = burden_map(state, x);
        if let Some(c) = prev.as_ref().and_then(|p| rank_stability(p, &burdens)) {
            correlations.push(c);
        }
        prev = Some(burdens);
        if let Some(alphas) = slopes.map(|s| &s[t]) {
            match effective_slope(alphas, x) {
                Ok(a) => slope_path.push(a),
                Err(AdlError::NoExecution) => {}
                Err(e) => return Err(e),
            }
        }
    }
    let mean = |v: &[f64]| if v.is_empty() { None } else { Some(num::sum(v.iter().copied()) / v.len() as f64) };
    Ok(DiagnosticsReport {
        inversion_rate: mean(&rates).unwrap_or(0.0),
        pooled_inversion_rate: if pairs == 0 { 0.0 } else { violations as f64 / pairs as f64 },
        rank_stability: mean(&correlations),
        perturbation_jump: None,
        effective_slope_variation: path_variation(&slope_path),
        effective_slope_path: slope_path,
    })
}
