//! Lot-grid allocation: the exact min-max burden integer program and the
//! deployable largest-remainder rounding of pro-rata.

use alloc::vec::Vec;

use crate::model::{grid_floor, Action, RoundState, Tolerances};
use crate::num;
use crate::{AdlError, Result};

/// Enumerate exactly when the product of grid sizes is at most this.
pub const EXACT_SEARCH_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct IlpSolution {
    pub action: Action,
    /// `max_i x_i / (u_i + eps)`.
    pub worst_burden: f64,
    /// False when the instance was too large for exhaustive search.
    pub exact: bool,
    /// `|sum x - B|` of the returned allocation.
    pub residual: f64,
    /// True when `residual` is within the budget tolerance.
    pub budget_reached: bool,
}

struct Grid {
    lots: Vec<f64>,
    max_steps: Vec<u64>,
}

fn grids(state: &RoundState) -> Result<Grid> {
    let mut lots = Vec::with_capacity(state.len());
    let mut max_steps = Vec::with_capacity(state.len());
    for w in state.winners() {
        let lot = w.lot_size.ok_or_else(|| AdlError::MissingLotGrid(w.id.0.clone()))?;
        let top = grid_floor(w.capacity, lot, w.capacity);
        lots.push(lot);
        max_steps.push(libm::round(top / lot) as u64);
    }
    Ok(Grid { lots, max_steps })
}

fn burden(x: &[f64], capacities: &[f64], eps: f64) -> f64 {
    x.iter().zip(capacities).map(|(&xi, &ui)| xi / (ui + eps)).fold(0.0, f64::max)
}

struct Search<'a> {
    lots: &'a [f64],
    max_steps: &'a [u64],
    capacities: &'a [f64],
    eps: f64,
    budget: f64,
    tol: f64,
    /// suffix sums of the largest grid value per account
    tail_max: Vec<f64>,
    current: Vec<f64>,
    best: Option<(f64, f64, Vec<f64>)>,
}

impl Search<'_> {
    fn better(&self, residual: f64, z: f64) -> bool {
        match &self.best {
            None => true,
            Some((best_res, best_z, _)) => {
                let r = if residual <= self.tol { 0.0 } else { residual };
                let br = if *best_res <= self.tol { 0.0 } else { *best_res };
                if num::abs(r - br) > self.tol {
                    r < br
                } else {
                    z < *best_z - 1e-15
                }
            }
        }
    }

    fn run(&mut self, depth: usize, partial: f64, partial_z: f64) {
        if depth == self.lots.len() {
            let residual = num::abs(partial - self.budget);
            if self.better(residual, partial_z) {
                self.best = Some((residual, partial_z, self.current.clone()));
            }
            return;
        }
        let hi = partial + self.tail_max[depth];
        let lb_res = if self.budget < partial {
            partial - self.budget
        } else if self.budget > hi {
            self.budget - hi
        } else {
            0.0
        };
        if let Some((best_res, best_z, _)) = &self.best {
            let best_res = if *best_res <= self.tol { 0.0 } else { *best_res };
            if lb_res > best_res + self.tol {
                return;
            }
            if best_res == 0.0 && partial_z >= *best_z {
                return;
            }
        }
        let lot = self.lots[depth];
        let denom = self.capacities[depth] + self.eps;
        for k in 0..=self.max_steps[depth] {
            let value = k as f64 * lot;
            let next = partial + value;
            if next > self.budget + self.tol && k > 0 {
                // further steps only move away from the budget
                if self.best.as_ref().is_some_and(|b| b.0 <= self.tol) {
                    break;
                }
            }
            self.current[depth] = value;
            self.run(depth + 1, next, partial_z.max(value / denom));
        }
        self.current[depth] = 0.0;
    }
}

/// Exact (or, above the search limit, best-found) minimizer of the worst
/// burden `max_i x_i/(u_i+eps)` over lot grids with `sum x = B`.
///
/// When no grid point sums to `B`, the allocation with the smallest budget
/// residual is returned with `budget_reached = false`; a residual above the
/// largest lot is an error.
pub fn solve_minmax_ilp(state: &RoundState, budget: f64) -> Result<IlpSolution> {
    let grid = grids(state)?;
    let capacities = state.capacities();
    let total = state.total_capacity();
    if budget < 0.0 || budget.is_nan() {
        return Err(AdlError::InvalidParameter(alloc::format!("budget {budget} is negative")));
    }
    if total == 0.0 && budget > 0.0 {
        return Err(AdlError::NoCapacity);
    }
    let tol = Tolerances::default().budget(budget);
    let eps = state.epsilon();
    let space: f64 = grid.max_steps.iter().map(|&k| (k + 1) as f64).product();

    let (x, exact) = if space <= EXACT_SEARCH_LIMIT {
        let n = grid.lots.len();
        let mut tail_max = alloc::vec![0.0; n + 1];
        for i in (0..n).rev() {
            tail_max[i] = tail_max[i + 1] + grid.max_steps[i] as f64 * grid.lots[i];
        }
        let mut search = Search {
            lots: &grid.lots,
            max_steps: &grid.max_steps,
            capacities: &capacities,
            eps,
            budget,
            tol,
            tail_max,
            current: alloc::vec![0.0; n],
            best: None,
        };
        search.run(0, 0.0, 0.0);
        let (_, _, x) = search.best.expect("search visits at least one leaf");
        (x, true)
    } else {
        let mut x = largest_remainder(state, budget, &grid)?;
        two_swap(&mut x, &grid, &capacities, eps);
        (x, false)
    };

    let residual = num::abs(num::sum(x.iter().copied()) - budget);
    let max_lot = grid.lots.iter().copied().fold(0.0, f64::max);
    if residual > max_lot + tol {
        return Err(AdlError::GridInfeasible { residual });
    }
    let worst_burden = burden(&x, &capacities, eps);
    Ok(IlpSolution {
        action: Action::from_allocation(state, x),
        worst_burden,
        exact,
        residual,
        budget_reached: residual <= tol,
    })
}

/// Moves one lot from the most burdened account to another account with the
/// same lot size while that lowers the worst burden.
fn two_swap(x: &mut [f64], grid: &Grid, capacities: &[f64], eps: f64) {
    let n = x.len();
    for _ in 0..(4 * n * n).max(16) {
        let z = burden(x, capacities, eps);
        let Some(top) = (0..n).find(|&i| x[i] / (capacities[i] + eps) == z) else { return };
        if x[top] <= 0.0 {
            return;
        }
        let lot = grid.lots[top];
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            if j == top || num::abs(grid.lots[j] - lot) > 1e-12 * lot {
                continue;
            }
            let up = x[j] + lot;
            if up > grid.max_steps[j] as f64 * lot * (1.0 + 1e-12) {
                continue;
            }
            x[top] -= lot;
            x[j] = up;
            let candidate = burden(x, capacities, eps);
            x[j] -= lot;
            x[top] += lot;
            if candidate < z && best.is_none_or(|(_, b)| candidate < b) {
                best = Some((j, candidate));
            }
        }
        match best {
            Some((j, _)) => {
                x[top] -= lot;
                x[j] += lot;
            }
            None => return,
        }
    }
}

fn largest_remainder(state: &RoundState, budget: f64, grid: &Grid) -> Result<Vec<f64>> {
    let total = state.total_capacity();
    if total <= 0.0 {
        return if budget > 0.0 { Err(AdlError::NoCapacity) } else { Ok(alloc::vec![0.0; state.len()]) };
    }
    let capacities = state.capacities();
    let target: Vec<f64> = capacities.iter().map(|&u| u / total * budget).collect();
    let mut steps: Vec<u64> = target
        .iter()
        .zip(&grid.lots)
        .zip(&capacities)
        .map(|((&t, &lot), &u)| libm::round(grid_floor(t, lot, u) / lot) as u64)
        .collect();
    let tol = Tolerances::default().budget(budget);
    loop {
        let assigned = num::sum(steps.iter().zip(&grid.lots).map(|(&k, &lot)| k as f64 * lot));
        let residual = budget - assigned;
        let mut pick: Option<(usize, f64)> = None;
        for i in 0..steps.len() {
            let lot = grid.lots[i];
            if steps[i] >= grid.max_steps[i] || lot > residual + tol {
                continue;
            }
            let ratio = if capacities[i] > 0.0 { (target[i] - steps[i] as f64 * lot) / capacities[i] } else { f64::NEG_INFINITY };
            if pick.is_none_or(|(_, r)| ratio > r) {
                pick = Some((i, ratio));
            }
        }
        match pick {
            Some((i, _)) => steps[i] += 1,
            None => break,
        }
    }
    Ok(steps.iter().zip(&grid.lots).map(|(&k, &lot)| k as f64 * lot).collect())
}

/// Pro-rata rounded down to each lot grid, then topped up one lot at a time
/// to the account with the largest remainder ratio `(x_pr - x) / u`.
pub fn integer_pro_rata(state: &RoundState, budget: f64) -> Result<Action> {
    let grid = grids(state)?;
    let total = state.total_capacity();
    if budget < 0.0 || budget.is_nan() {
        return Err(AdlError::InvalidParameter(alloc::format!("budget {budget} is negative")));
    }
    if total == 0.0 && budget > 0.0 {
        return Err(AdlError::NoCapacity);
    }
    if budget > total + Tolerances::default().budget(total) {
        return Err(AdlError::BudgetExceedsCapacity { budget, total_capacity: total });
    }
    let x = largest_remainder(state, budget, &grid)?;
    let residual = num::abs(budget - num::sum(x.iter().copied()));
    let min_lot = grid.lots.iter().copied().fold(f64::INFINITY, f64::min);
    if !state.is_empty() && residual >= min_lot - Tolerances::default().budget(budget) && residual > Tolerances::default().budget(budget) {
        return Err(AdlError::GridInfeasible { residual });
    }
    Ok(Action::from_allocation(state, x))
}
