use alloc::vec::Vec;

use crate::model::{Action, RoundState, Tolerances};
use crate::{AdlError, Result};

fn check_budget(state: &RoundState, budget: f64) -> Result<f64> {
    let total = state.total_capacity();
    if budget < 0.0 || budget.is_nan() {
        return Err(AdlError::InvalidParameter(alloc::format!("budget {budget} is negative")));
    }
    if total <= 0.0 {
        return if budget > 0.0 { Err(AdlError::NoCapacity) } else { Ok(0.0) };
    }
    if budget > total + Tolerances::default().budget(total) {
        return Err(AdlError::BudgetExceedsCapacity { budget, total_capacity: total });
    }
    Ok(total)
}

/// `x_i = (u_i / U) B`, clamped to `u_i` against rounding when `B` is near `U`.
pub fn pro_rata_allocate(state: &RoundState, budget: f64) -> Result<Action> {
    let total = check_budget(state, budget)?;
    if total == 0.0 {
        return Ok(Action::with_budget(state, 0.0, alloc::vec![0.0; state.len()]));
    }
    let budget = budget.min(total);
    let x: Vec<f64> = state.winners().iter().map(|w| (w.capacity / total * budget).min(w.capacity)).collect();
    Ok(Action::with_budget(state, budget, x))
}

/// Continuous min-max burden solution with its dual certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxSolution {
    pub action: Action,
    /// Optimal worst burden `max_i x_i / u_i`.
    pub worst_burden: f64,
    /// Shadow price of the budget constraint, `1 / U`.
    pub dual_price: f64,
    /// Dual objective `y B`; equals `worst_burden` at the optimum.
    pub dual_value: f64,
}

/// Minimizes `max_i x_i / u_i` over the capped simplex; the optimizer is pro-rata.
/// Zero-capacity winners are excluded from the burden.
pub fn minmax_allocate(state: &RoundState, budget: f64) -> Result<MinMaxSolution> {
    let action = pro_rata_allocate(state, budget)?;
    let total = state.total_capacity();
    if total == 0.0 {
        return Ok(MinMaxSolution { action, worst_burden: 0.0, dual_price: 0.0, dual_value: 0.0 });
    }
    let dual_price = 1.0 / total;
    Ok(MinMaxSolution {
        worst_burden: action.budget / total,
        dual_value: dual_price * action.budget,
        dual_price,
        action,
    })
}
