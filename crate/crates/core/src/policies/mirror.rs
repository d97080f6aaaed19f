//! Euclidean mirror descent (projected subgradient) on the surrogate loss.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::metrics::{surrogate_subgradient, LossWeights};
use crate::model::{project_capped_simplex, Action, RoundState, WinnerId};
use crate::num::clamp;
use crate::{AdlError, Result};

/// One projected subgradient step from `prev` (aligned with `state`'s winners).
///
/// `prev` is first re-projected onto the round's polytope at budget
/// `clip(sum prev, 0, U)`. With `budget = None` the new budget is
/// `clip(sum(x - eta g), 0, U)`, so the iterate sets severity as well as
/// shape; `Some(b)` holds the budget fixed.
pub fn vector_md_step(
    prev: &[f64],
    state: &RoundState,
    target: f64,
    weights: &LossWeights,
    eta: f64,
    budget: Option<f64>,
) -> Result<Action> {
    if prev.len() != state.len() {
        return Err(AdlError::LengthMismatch { left: prev.len(), right: state.len() });
    }
    if !(eta >= 0.0) {
        return Err(AdlError::InvalidParameter(alloc::format!("step size {eta} must be non-negative")));
    }
    let capacities = state.capacities();
    let total = state.total_capacity();
    let start_budget = clamp(prev.iter().sum(), 0.0, total);
    let x = project_capped_simplex(prev, start_budget, &capacities)?;
    let g = surrogate_subgradient(&x, &capacities, target, state.epsilon(), weights);
    let moved: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - eta * gi).collect();
    let next_budget = match budget {
        Some(b) => b,
        None => clamp(crate::num::sum(moved.iter().copied()), 0.0, total),
    };
    let next = project_capped_simplex(&moved, next_budget, &capacities)?;
    Ok(Action::with_budget(state, next_budget, next))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum InitRule {
    /// Start every account at zero haircut.
    #[default]
    Zero,
    /// Start the first round at pro-rata of the tracking target.
    ProRataTarget,
}

/// Per-episode mirror-descent state carried by winner id. Accounts that
/// appear mid-episode start at zero; departed accounts are dropped.
#[derive(Debug, Clone)]
pub struct VectorMirrorDescent {
    eta: f64,
    init: InitRule,
    iterate: Option<BTreeMap<WinnerId, f64>>,
}

impl VectorMirrorDescent {
    pub fn new(eta: f64, init: InitRule) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(AdlError::InvalidParameter(alloc::format!("mirror-descent step {eta} must be positive")));
        }
        Ok(VectorMirrorDescent { eta, init, iterate: None })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Acts on `state` using only round-start information (`target` is the ex ante benchmark).
    pub fn act(&mut self, state: &RoundState, target: f64, weights: &LossWeights) -> Result<Action> {
        let prev: Vec<f64> = match &self.iterate {
            Some(map) => state.winners().iter().map(|w| map.get(&w.id).copied().unwrap_or(0.0)).collect(),
            None => match self.init {
                InitRule::Zero => alloc::vec![0.0; state.len()],
                InitRule::ProRataTarget => {
                    let total = state.total_capacity();
                    let b = clamp(target, 0.0, total);
                    if total > 0.0 {
                        state.winners().iter().map(|w| w.capacity / total * b).collect()
                    } else {
                        alloc::vec![0.0; state.len()]
                    }
                }
            },
        };
        let action = vector_md_step(&prev, state, target, weights, self.eta, None)?;
        self.iterate = Some(
            state
                .winners()
                .iter()
                .zip(&action.allocation)
                .map(|(w, &x)| (w.id.clone(), x))
                .collect(),
        );
        Ok(action)
    }
}
