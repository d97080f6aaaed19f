use alloc::vec::Vec;

use crate::model::{Action, RoundState, Tolerances};
use crate::{AdlError, Result};

/// Scores aligned with a round's winners plus the induced ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredWinners {
    scores: Vec<f64>,
    permutation: Vec<usize>,
}

impl ScoredWinners {
    /// Ranks by score descending; equal scores fall back to winner order
    /// (ids ascending), which makes the ranking strict.
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if scores.iter().any(|s| s.is_nan()) {
            return Err(AdlError::InvalidParameter("score is NaN".into()));
        }
        let mut permutation: Vec<usize> = (0..scores.len()).collect();
        permutation.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        Ok(ScoredWinners { scores, permutation })
    }

    /// Ranking that serves winners in id order.
    pub fn id_order(n: usize) -> Self {
        ScoredWinners { scores: (0..n).map(|i| -(i as f64)).collect(), permutation: (0..n).collect() }
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// `permutation[j]` is the winner index served `j`-th.
    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }
}

/// Greedy fill in permutation order: `x_{s(j)} = min(u_{s(j)}, B - filled)`.
pub fn queue_fill(capacities: &[f64], budget: f64, permutation: &[usize]) -> Vec<f64> {
    let mut x = alloc::vec![0.0; capacities.len()];
    let mut remaining = budget;
    for &i in permutation {
        if remaining <= 0.0 {
            break;
        }
        let take = capacities[i].min(remaining);
        x[i] = take;
        remaining -= take;
    }
    x
}

/// Queue allocation of budget `budget` under `scores`.
pub fn queue_allocate(state: &RoundState, budget: f64, scores: &ScoredWinners) -> Result<Action> {
    let capacities = state.capacities();
    if scores.permutation.len() != capacities.len() {
        return Err(AdlError::LengthMismatch { left: scores.permutation.len(), right: capacities.len() });
    }
    let total = state.total_capacity();
    if budget < 0.0 || budget.is_nan() {
        return Err(AdlError::InvalidParameter(alloc::format!("budget {budget} is negative")));
    }
    if budget > total + Tolerances::default().budget(total) {
        return Err(AdlError::BudgetExceedsCapacity { budget, total_capacity: total });
    }
    let x = queue_fill(&capacities, budget.min(total), &scores.permutation);
    Ok(Action::with_budget(state, budget.min(total), x))
}
