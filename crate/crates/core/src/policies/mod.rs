//! Allocation policies behind one interface.
//!
//! Stateless rules (queue, pro-rata, lot-grid rules) map a round and a budget
//! to an allocation. [`PolicyInstance`] adds the per-episode state: the
//! severity controller that picks the budget and the mirror-descent iterate.

mod lots;
mod mirror;
mod prorata;
mod queue;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

pub use lots::{integer_pro_rata, solve_minmax_ilp, IlpSolution, EXACT_SEARCH_LIMIT};
pub use mirror::{vector_md_step, InitRule, VectorMirrorDescent};
pub use prorata::{minmax_allocate, pro_rata_allocate, MinMaxSolution};
pub use queue::{queue_allocate, queue_fill, ScoredWinners};

use crate::metrics::LossWeights;
use crate::model::{Action, RoundState};
use crate::num::clamp;
use crate::severity::{theta_needed, SeverityController};
use crate::{AdlError, Result};

/// Where queue scores come from.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ScoreSource {
    /// Per-round score supplied with the scenario.
    #[default]
    Explicit,
    /// Serve the largest capacity first.
    Capacity,
    /// Fixed order: winner ids ascending.
    IdOrder,
    /// Round context value `"<key>.<winner id>"`.
    Context(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RoundingRule {
    #[default]
    LargestRemainder,
}

/// How a policy picks the round budget `B_t`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BudgetRule {
    /// Ex ante benchmark, known at round start.
    #[default]
    NeededHat,
    /// Ex post benchmark (reference policies only).
    Needed,
    /// Socialize the whole deficit.
    FullDeficit,
    /// Online severity `theta` tracked by projected OGD; `eta = None` uses
    /// the adaptive step `1/sqrt(sum D^2 + 1)`.
    ThetaOgd { eta: Option<f64> },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum PolicyKind {
    Queue {
        #[cfg_attr(feature = "serde", serde(default))]
        score: ScoreSource,
    },
    ProRata,
    IntegerProRata {
        #[cfg_attr(feature = "serde", serde(default))]
        rounding: RoundingRule,
    },
    MinMaxIlp,
    VectorMd {
        eta: f64,
        #[cfg_attr(feature = "serde", serde(default))]
        init: InitRule,
    },
    /// Replays recorded production haircuts.
    Production,
    /// Replays the scenario's comparator allocations.
    Comparator,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PolicySpec {
    pub name: String,
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub kind: PolicyKind,
    #[cfg_attr(feature = "serde", serde(default))]
    pub budget: Option<BudgetRule>,
}

impl PolicySpec {
    pub fn new(name: impl Into<String>, kind: PolicyKind) -> Self {
        PolicySpec { name: name.into(), kind, budget: None }
    }

    pub fn with_budget(mut self, rule: BudgetRule) -> Self {
        self.budget = Some(rule);
        self
    }

    /// Budget rule, defaulting to the ex post benchmark for reference
    /// policies and the ex ante one for deployable policies.
    pub fn budget_rule(&self) -> BudgetRule {
        self.budget.unwrap_or(match self.kind {
            PolicyKind::ProRata | PolicyKind::MinMaxIlp => BudgetRule::Needed,
            _ => BudgetRule::NeededHat,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if let PolicyKind::VectorMd { eta, .. } = self.kind {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(AdlError::InvalidParameter(format!("policy {}: eta must be positive", self.name)));
            }
        }
        if let Some(BudgetRule::ThetaOgd { eta: Some(eta) }) = self.budget {
            if !(eta > 0.0) {
                return Err(AdlError::InvalidParameter(format!("policy {}: severity eta must be positive", self.name)));
            }
        }
        Ok(())
    }
}

/// Per-round inputs beyond the round state.
#[derive(Debug, Clone, Copy, Default)]
pub struct RoundInputs<'a> {
    pub b_needed: f64,
    pub b_needed_hat: f64,
    pub scores: Option<&'a [f64]>,
    pub production: Option<&'a [f64]>,
    pub comparator: Option<&'a [f64]>,
}

/// Builds the queue ranking for a round.
pub fn score_winners(source: &ScoreSource, state: &RoundState, explicit: Option<&[f64]>) -> Result<ScoredWinners> {
    match source {
        ScoreSource::Explicit => {
            let scores = explicit.ok_or_else(|| {
                AdlError::InvalidParameter(format!("round {}: queue needs explicit scores", state.round_id()))
            })?;
            if scores.len() != state.len() {
                return Err(AdlError::LengthMismatch { left: scores.len(), right: state.len() });
            }
            ScoredWinners::new(scores.to_vec())
        }
        ScoreSource::Capacity => ScoredWinners::new(state.capacities()),
        ScoreSource::IdOrder => Ok(ScoredWinners::id_order(state.len())),
        ScoreSource::Context(key) => {
            let scores = state
                .winners()
                .iter()
                .map(|w| {
                    let k = format!("{key}.{}", w.id);
                    state.context().get(&k).copied().ok_or_else(|| {
                        AdlError::InvalidParameter(format!("round {}: missing context {k}", state.round_id()))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            ScoredWinners::new(scores)
        }
    }
}

/// Stateless allocation of `budget` for the budget-taking policy kinds.
pub fn allocate(kind: &PolicyKind, state: &RoundState, budget: f64, inputs: &RoundInputs<'_>) -> Result<Action> {
    match kind {
        PolicyKind::Queue { score } => queue_allocate(state, budget, &score_winners(score, state, inputs.scores)?),
        PolicyKind::ProRata => pro_rata_allocate(state, budget),
        PolicyKind::IntegerProRata { .. } => {
            if state.winners().iter().all(|w| w.lot_size.is_some()) {
                integer_pro_rata(state, budget)
            } else {
                pro_rata_allocate(state, budget)
            }
        }
        PolicyKind::MinMaxIlp => {
            if state.winners().iter().all(|w| w.lot_size.is_some()) {
                Ok(solve_minmax_ilp(state, budget)?.action)
            } else {
                Ok(minmax_allocate(state, budget)?.action)
            }
        }
        PolicyKind::VectorMd { .. } | PolicyKind::Production | PolicyKind::Comparator => Err(
            AdlError::InvalidParameter(String::from("policy is stateful or recorded; use PolicyInstance")),
        ),
    }
}

/// Largest budget the kind can execute: the sum of grid tops for lot-grid
/// rules on fully gridded rounds, otherwise total capacity.
pub fn reachable_capacity(kind: &PolicyKind, state: &RoundState) -> f64 {
    let gridded = matches!(kind, PolicyKind::IntegerProRata { .. } | PolicyKind::MinMaxIlp)
        && state.winners().iter().all(|w| w.lot_size.is_some());
    if gridded {
        crate::num::sum(state.winners().iter().filter_map(|w| w.grid_max()))
    } else {
        state.total_capacity()
    }
}

#[derive(Debug, Clone)]
struct ThetaState {
    controller: SeverityController,
    fixed_eta: Option<f64>,
    deficit_sq: f64,
}

/// A policy running through one episode.
#[derive(Debug, Clone)]
pub struct PolicyInstance {
    spec: PolicySpec,
    weights: LossWeights,
    md: Option<VectorMirrorDescent>,
    theta: Option<ThetaState>,
}

impl PolicyInstance {
    pub fn new(spec: PolicySpec, weights: LossWeights) -> Result<Self> {
        spec.validate()?;
        let md = match spec.kind {
            PolicyKind::VectorMd { eta, init } => Some(VectorMirrorDescent::new(eta, init)?),
            _ => None,
        };
        let theta = match spec.budget_rule() {
            BudgetRule::ThetaOgd { eta } => Some(ThetaState {
                controller: SeverityController::new(0.0, eta.unwrap_or(1.0))?,
                fixed_eta: eta,
                deficit_sq: 0.0,
            }),
            _ => None,
        };
        Ok(PolicyInstance { spec, weights, md, theta })
    }

    pub fn spec(&self) -> &PolicySpec {
        &self.spec
    }

    fn budget_value(&self, state: &RoundState, inputs: &RoundInputs<'_>) -> f64 {
        match self.spec.budget_rule() {
            BudgetRule::NeededHat => inputs.b_needed_hat,
            BudgetRule::Needed => inputs.b_needed,
            BudgetRule::FullDeficit => state.deficit(),
            BudgetRule::ThetaOgd { .. } => {
                let theta = self.theta.as_ref().map_or(0.0, |t| t.controller.theta());
                theta * state.deficit()
            }
        }
    }

    /// The action for this round, using only what the policy's information
    /// set allows.
    pub fn act(&mut self, state: &RoundState, inputs: &RoundInputs<'_>) -> Result<Action> {
        let recorded = |values: Option<&[f64]>, what: &str| -> Result<Action> {
            let x = values.ok_or_else(|| {
                AdlError::InvalidParameter(format!("round {}: no recorded {what} haircuts", state.round_id()))
            })?;
            if x.len() != state.len() {
                return Err(AdlError::LengthMismatch { left: x.len(), right: state.len() });
            }
            Ok(Action::from_allocation(state, x.to_vec()))
        };
        match &self.spec.kind {
            PolicyKind::Production => recorded(inputs.production, "production"),
            PolicyKind::Comparator => recorded(inputs.comparator, "comparator"),
            PolicyKind::VectorMd { .. } => {
                let target = self.budget_value(state, inputs);
                let weights = self.weights;
                self.md.as_mut().expect("md state").act(state, target, &weights)
            }
            kind => {
                let budget = clamp(self.budget_value(state, inputs), 0.0, reachable_capacity(kind, state));
                allocate(kind, state, budget, inputs)
            }
        }
    }

    /// Reveals the ex post benchmark after the round (advances the severity controller).
    pub fn observe(&mut self, state: &RoundState, b_needed: f64) {
        if let Some(theta) = self.theta.as_mut() {
            let d = state.deficit();
            theta.deficit_sq += d * d;
            let eta = theta.fixed_eta.unwrap_or_else(|| 1.0 / libm::sqrt(theta.deficit_sq + 1.0));
            theta.controller = theta.controller.with_step(eta).step(d, theta_needed(b_needed, d, state.epsilon()));
        }
    }
}
