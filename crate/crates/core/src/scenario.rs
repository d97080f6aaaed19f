//! Scenarios: ordered rounds plus optional ground truth, and the
//! deterministic adversarial generators.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::model::{indexed_id, RoundState, WinnerAccount, DEFAULT_EPSILON};
use crate::{AdlError, Result};

/// Benchmark values for one round at one markout horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Benchmark {
    pub delta_horizon: f64,
    pub b_needed: f64,
    pub b_needed_hat: Option<f64>,
    pub alpha_true: Option<f64>,
    pub q_scale: Option<f64>,
}

impl Benchmark {
    pub fn exact(delta_horizon: f64, b_needed: f64) -> Self {
        Benchmark { delta_horizon, b_needed, b_needed_hat: Some(b_needed), alpha_true: None, q_scale: None }
    }
}

/// Per-round ground truth. Per-winner vectors align with the round's winners.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RoundTruth {
    pub scores: Option<Vec<f64>>,
    pub production: Option<Vec<f64>>,
    pub comparator: Option<Vec<f64>>,
    pub slopes: Option<Vec<f64>>,
    /// Sorted by `delta_horizon`, one entry per horizon.
    pub benchmarks: Vec<Benchmark>,
}

impl RoundTruth {
    pub fn benchmark(&self, delta_horizon: f64) -> Option<&Benchmark> {
        self.benchmarks.iter().find(|b| b.delta_horizon == delta_horizon)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Metadata {
    pub name: String,
    pub seed: Option<u64>,
    pub params: BTreeMap<String, String>,
}

impl Metadata {
    pub fn named(name: impl Into<String>) -> Self {
        Metadata { name: name.into(), ..Metadata::default() }
    }

    pub fn with_param(mut self, key: &str, value: impl core::fmt::Display) -> Self {
        self.params.insert(key.into(), format!("{value}"));
        self
    }
}

/// Metadata key that switches on the churn removal rule; value [`REMOVAL_CLOSED`].
pub const REMOVAL_PARAM: &str = "removal";
/// Winners whose haircut reaches capacity leave all later rounds.
pub const REMOVAL_CLOSED: &str = "closed";

/// Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    rounds: Vec<RoundState>,
    truth: Vec<RoundTruth>,
    metadata: Metadata,
}

impl Scenario {
    /// Checks strictly increasing round ids and 1:1 alignment of the truth
    /// series. An empty `truth` is replaced by blank entries.
    pub fn new(rounds: Vec<RoundState>, mut truth: Vec<RoundTruth>, metadata: Metadata) -> Result<Self> {
        if truth.is_empty() {
            truth = alloc::vec![RoundTruth::default(); rounds.len()];
        }
        if truth.len() != rounds.len() {
            return Err(AdlError::LengthMismatch { left: rounds.len(), right: truth.len() });
        }
        for pair in rounds.windows(2) {
            if pair[1].round_id() <= pair[0].round_id() {
                return Err(AdlError::InvalidState(format!(
                    "round ids must strictly increase ({} then {})",
                    pair[0].round_id(),
                    pair[1].round_id()
                )));
            }
        }
        for (state, t) in rounds.iter().zip(&truth) {
            for (what, v) in [("score", &t.scores), ("production", &t.production), ("comparator", &t.comparator), ("slope", &t.slopes)] {
                if let Some(v) = v {
                    if v.len() != state.len() {
                        return Err(AdlError::InvalidState(format!(
                            "round {}: {what} vector has {} entries for {} winners",
                            state.round_id(),
                            v.len(),
                            state.len()
                        )));
                    }
                }
            }
            for pair in t.benchmarks.windows(2) {
                if !(pair[0].delta_horizon < pair[1].delta_horizon) {
                    return Err(AdlError::InvalidState(format!(
                        "round {}: benchmarks must have distinct increasing horizons",
                        state.round_id()
                    )));
                }
            }
            if t.benchmarks.iter().any(|b| !(b.b_needed >= 0.0) || b.b_needed_hat.is_some_and(|h| !(h >= 0.0))) {
                return Err(AdlError::InvalidState(format!("round {}: negative benchmark", state.round_id())));
            }
        }
        Ok(Scenario { rounds, truth, metadata })
    }

    pub fn rounds(&self) -> &[RoundState] {
        &self.rounds
    }

    pub fn truth(&self) -> &[RoundTruth] {
        &self.truth
    }

    pub fn metadata(&self) -> &Metadata {
        &self.metadata
    }

    pub fn horizon(&self) -> usize {
        self.rounds.len()
    }

    /// Whether fully closed winners drop out of later rounds.
    pub fn removes_closed_winners(&self) -> bool {
        self.metadata.params.get(REMOVAL_PARAM).is_some_and(|v| v == REMOVAL_CLOSED)
    }

    /// Markout horizons present in any round, ascending.
    pub fn delta_horizons(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.truth.iter().flat_map(|t| t.benchmarks.iter().map(|b| b.delta_horizon)).collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

/// Two winners with capacities `(1, M)` on odd rounds and `(M, 1)` on even
/// ones, unit budget, and the comparator path that always loads the larger account.
pub fn gen_alternating_capacity(horizon: usize, m: f64) -> Result<Scenario> {
    if horizon == 0 || horizon % 2 == 1 {
        return Err(AdlError::RequiresEvenHorizon(horizon));
    }
    if !(m > 1.0 && m.is_finite()) {
        return Err(AdlError::InvalidParameter(format!("M = {m} must exceed 1")));
    }
    let mut rounds = Vec::with_capacity(horizon);
    let mut truth = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let odd = t % 2 == 1;
        let caps = if odd { [1.0, m] } else { [m, 1.0] };
        rounds.push(RoundState::from_capacities(t as u64, 1.0, &caps)?);
        truth.push(RoundTruth {
            scores: Some(alloc::vec![1.0, 0.0]),
            comparator: Some(if odd { alloc::vec![0.0, 1.0] } else { alloc::vec![1.0, 0.0] }),
            benchmarks: alloc::vec![Benchmark::exact(0.0, 1.0)],
            ..RoundTruth::default()
        });
    }
    let meta = Metadata::named("alternating_capacity").with_param("T", horizon).with_param("M", m);
    Scenario::new(rounds, truth, meta)
}

/// `2T` unit-capacity winners with slopes alternating `alpha_min, alpha_max`
/// along the id order; unit budget every round. Scores rank by id.
pub fn gen_churn_instance(horizon: usize, alpha_min: f64, alpha_max: f64) -> Result<Scenario> {
    if horizon < 2 {
        return Err(AdlError::InvalidParameter(format!("churn horizon {horizon} must be at least 2")));
    }
    if !(alpha_min >= 0.0 && alpha_min < alpha_max) {
        return Err(AdlError::DegenerateSlopes);
    }
    let n = 2 * horizon;
    let winners: Vec<WinnerAccount> =
        (0..n).map(|i| WinnerAccount::new(indexed_id(i), 1.0, None)).collect::<Result<_>>()?;
    let slopes: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { alpha_min } else { alpha_max }).collect();
    let scores: Vec<f64> = (0..n).map(|i| (n - i) as f64).collect();
    let mut rounds = Vec::with_capacity(horizon);
    let mut truth = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        rounds.push(RoundState::new(t as u64, 1.0, winners.clone(), BTreeMap::new(), DEFAULT_EPSILON)?);
        truth.push(RoundTruth {
            scores: Some(scores.clone()),
            slopes: Some(slopes.clone()),
            benchmarks: alloc::vec![Benchmark::exact(0.0, 1.0)],
            ..RoundTruth::default()
        });
    }
    let meta = Metadata::named("churn")
        .with_param("T", horizon)
        .with_param("alpha_min", alpha_min)
        .with_param("alpha_max", alpha_max)
        .with_param(REMOVAL_PARAM, REMOVAL_CLOSED);
    Scenario::new(rounds, truth, meta)
}
