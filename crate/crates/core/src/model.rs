//! Round states, actions and the capped-simplex feasible set.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::num::{self, clamp};
use crate::{AdlError, Result};

/// Default numerical regularizer for burden and severity ratios, in USD.
pub const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WinnerId(pub String);

impl WinnerId {
    pub fn new(id: impl Into<String>) -> Self {
        WinnerId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for WinnerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for WinnerId {
    fn from(s: &str) -> Self {
        WinnerId(String::from(s))
    }
}

impl From<String> for WinnerId {
    fn from(s: String) -> Self {
        WinnerId(s)
    }
}

/// A winning account with positive-PNL haircut capacity.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WinnerAccount {
    pub id: WinnerId,
    /// Maximum haircut the account can absorb, USD.
    pub capacity: f64,
    /// Lot granularity; the grid is `{0, lot, 2 lot, ...}` intersected with `[0, capacity]`.
    pub lot_size: Option<f64>,
}

impl WinnerAccount {
    pub fn new(id: impl Into<WinnerId>, capacity: f64, lot_size: Option<f64>) -> Result<Self> {
        let id = id.into();
        if !(capacity.is_finite() && capacity >= 0.0) {
            return Err(AdlError::InvalidState(format!(
                "winner {id}: capacity {capacity} must be finite and non-negative"
            )));
        }
        if let Some(lot) = lot_size {
            if !(lot.is_finite() && lot > 0.0) {
                return Err(AdlError::InvalidState(format!(
                    "winner {id}: lot size {lot} must be positive"
                )));
            }
        }
        Ok(WinnerAccount { id, capacity, lot_size })
    }

    /// Largest grid point not above capacity.
    pub fn grid_max(&self) -> Option<f64> {
        self.lot_size.map(|lot| grid_floor(self.capacity, lot, self.capacity))
    }
}

/// Largest multiple of `lot` that is `<= value` and `<= cap`, tolerant to
/// representation error in `value / lot`.
pub(crate) fn grid_floor(value: f64, lot: f64, cap: f64) -> f64 {
    let ratio = value / lot;
    let mut k = libm::floor(ratio + 1e-9);
    if k < 0.0 {
        k = 0.0;
    }
    let mut x = k * lot;
    while x > cap * (1.0 + 1e-12) + 1e-12 && k > 0.0 {
        k -= 1.0;
        x = k * lot;
    }
    x.min(cap)
}

/// Tolerances for floating-point feasibility checks.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tolerances {
    pub budget_rel: f64,
    pub budget_abs: f64,
    pub boundary_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { budget_rel: 1e-9, budget_abs: 1e-6, boundary_rel: 1e-9 }
    }
}

impl Tolerances {
    /// Allowed `|sum x - B|`.
    pub fn budget(&self, budget: f64) -> f64 {
        (self.budget_rel * num::abs(budget)).max(self.budget_abs)
    }

    /// Distance from a bound below which a coordinate counts as on the bound.
    pub fn boundary(&self, capacity: f64) -> f64 {
        self.boundary_rel * capacity.max(1.0)
    }
}

/// One ADL round as seen at round start.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RoundState {
    round_id: u64,
    deficit: f64,
    winners: Vec<WinnerAccount>,
    context: BTreeMap<String, f64>,
    epsilon: f64,
}

impl RoundState {
    /// Builds a round; winners are sorted by id.
    pub fn new(
        round_id: u64,
        deficit: f64,
        mut winners: Vec<WinnerAccount>,
        context: BTreeMap<String, f64>,
        epsilon: f64,
    ) -> Result<Self> {
        if !(deficit.is_finite() && deficit >= 0.0) {
            return Err(AdlError::InvalidState(format!(
                "round {round_id}: deficit {deficit} must be finite and non-negative"
            )));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(AdlError::InvalidState(format!(
                "round {round_id}: epsilon {epsilon} must be positive"
            )));
        }
        winners.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in winners.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(AdlError::InvalidState(format!(
                    "round {round_id}: duplicate winner id {}",
                    pair[0].id
                )));
            }
        }
        let total: f64 = num::sum(winners.iter().map(|w| w.capacity));
        if !total.is_finite() {
            return Err(AdlError::InvalidState(format!(
                "round {round_id}: total capacity is not finite"
            )));
        }
        Ok(RoundState { round_id, deficit, winners, context, epsilon })
    }

    /// Round with default epsilon and empty context; handy for analytic fixtures.
    pub fn from_capacities(round_id: u64, deficit: f64, capacities: &[f64]) -> Result<Self> {
        let winners = capacities
            .iter()
            .enumerate()
            .map(|(i, &u)| WinnerAccount::new(indexed_id(i), u, None))
            .collect::<Result<Vec<_>>>()?;
        RoundState::new(round_id, deficit, winners, BTreeMap::new(), DEFAULT_EPSILON)
    }

    pub fn round_id(&self) -> u64 {
        self.round_id
    }

    pub fn deficit(&self) -> f64 {
        self.deficit
    }

    pub fn winners(&self) -> &[WinnerAccount] {
        &self.winners
    }

    pub fn context(&self) -> &BTreeMap<String, f64> {
        &self.context
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn len(&self) -> usize {
        self.winners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.winners.is_empty()
    }

    pub fn capacities(&self) -> Vec<f64> {
        self.winners.iter().map(|w| w.capacity).collect()
    }

    pub fn total_capacity(&self) -> f64 {
        num::sum(self.winners.iter().map(|w| w.capacity))
    }

    pub fn index_of(&self, id: &WinnerId) -> Option<usize> {
        self.winners.binary_search_by(|w| w.id.cmp(id)).ok()
    }

    /// Same round with a different winner set (used by churn).
    pub fn with_winners(&self, winners: Vec<WinnerAccount>) -> Result<Self> {
        RoundState::new(self.round_id, self.deficit, winners, self.context.clone(), self.epsilon)
    }
}

/// Zero-padded positional id (`w000001`, ...), sorting in index order.
pub fn indexed_id(index: usize) -> WinnerId {
    WinnerId(format!("w{:06}", index + 1))
}

/// A severity budget together with its split over the round's winners.
///
/// `allocation[i]` belongs to `state.winners()[i]` (ids ascending).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Action {
    pub budget: f64,
    pub allocation: Vec<f64>,
    pub severity: f64,
}

impl Action {
    /// Action whose budget is the allocation total.
    pub fn from_allocation(state: &RoundState, allocation: Vec<f64>) -> Self {
        let budget = num::sum(allocation.iter().copied());
        Action::with_budget(state, budget, allocation)
    }

    pub fn with_budget(state: &RoundState, budget: f64, allocation: Vec<f64>) -> Self {
        let severity = budget / (state.deficit() + state.epsilon());
        Action { budget, allocation, severity }
    }

    /// Executed haircut `H = sum x_i`.
    pub fn executed(&self) -> f64 {
        num::sum(self.allocation.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DimensionMismatch { expected: usize, got: usize },
    BelowZero { index: usize, value: f64 },
    AboveCapacity { index: usize, value: f64, capacity: f64 },
    BudgetSum { sum: f64, budget: f64 },
    NegativeBudget(f64),
    BudgetAboveCapacity { budget: f64, total_capacity: f64 },
}

/// Outcome of [`validate_action`]; empty means feasible.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every feasibility constraint of `action` against `state`.
pub fn validate_action(state: &RoundState, action: &Action) -> ValidationReport {
    validate_allocation(&action.allocation, action.budget, &state.capacities(), &Tolerances::default())
}

/// Slice-level feasibility check for `x` in `X(B, u)`.
pub fn validate_allocation(x: &[f64], budget: f64, capacities: &[f64], tol: &Tolerances) -> ValidationReport {
    let mut violations = Vec::new();
    if x.len() != capacities.len() {
        violations.push(Violation::DimensionMismatch { expected: capacities.len(), got: x.len() });
        return ValidationReport { violations };
    }
    for (index, (&value, &capacity)) in x.iter().zip(capacities).enumerate() {
        if !(value >= 0.0) {
            violations.push(Violation::BelowZero { index, value });
        } else if value > capacity {
            violations.push(Violation::AboveCapacity { index, value, capacity });
        }
    }
    let total_capacity = num::sum(capacities.iter().copied());
    if budget < 0.0 {
        violations.push(Violation::NegativeBudget(budget));
    }
    if budget > total_capacity + tol.budget(total_capacity) {
        violations.push(Violation::BudgetAboveCapacity { budget, total_capacity });
    }
    let sum = num::sum(x.iter().copied());
    if !(num::abs(sum - budget) <= tol.budget(budget)) {
        violations.push(Violation::BudgetSum { sum, budget });
    }
    ValidationReport { violations }
}

/// The polytope `X(B, u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleSet {
    pub budget: f64,
    pub capacities: Vec<f64>,
}

impl FeasibleSet {
    pub fn new(budget: f64, capacities: Vec<f64>) -> Self {
        FeasibleSet { budget, capacities }
    }

    pub fn total_capacity(&self) -> f64 {
        num::sum(self.capacities.iter().copied())
    }

    pub fn is_nonempty(&self) -> bool {
        self.budget >= 0.0 && self.budget <= self.total_capacity()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        validate_allocation(x, self.budget, &self.capacities, &Tolerances::default()).is_ok()
    }

    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        project_capped_simplex(v, self.budget, &self.capacities)
    }
}

/// Number of coordinates strictly inside `(0, u_i)` beyond the boundary tolerance.
pub fn interior_count(x: &[f64], capacities: &[f64], tol: &Tolerances) -> usize {
    x.iter()
        .zip(capacities)
        .filter(|(&xi, &ui)| {
            let t = tol.boundary(ui);
            xi > t && ui - xi > t
        })
        .count()
}

/// A feasible point is a vertex of the capped simplex iff at most one
/// coordinate is strictly between its bounds.
pub fn is_extreme_point(x: &[f64], budget: f64, capacities: &[f64]) -> Result<bool> {
    let tol = Tolerances::default();
    if !validate_allocation(x, budget, capacities, &tol).is_ok() {
        return Err(AdlError::InfeasiblePoint);
    }
    Ok(interior_count(x, capacities, &tol) <= 1)
}

/// Euclidean projection of `v` onto `X(B, u)`.
///
/// Bisects the dual shift `tau` in `x_i(tau) = clip(v_i - tau, 0, u_i)`; the
/// leftover budget residual is then spread over the free coordinates.
pub fn project_capped_simplex(v: &[f64], budget: f64, capacities: &[f64]) -> Result<Vec<f64>> {
    if v.len() != capacities.len() {
        return Err(AdlError::LengthMismatch { left: v.len(), right: capacities.len() });
    }
    if capacities.iter().any(|&u| !(u >= 0.0) || !u.is_finite()) {
        return Err(AdlError::InvalidParameter(String::from("capacities must be finite and non-negative")));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(AdlError::InvalidParameter(String::from("projection input must be finite")));
    }
    let total = num::sum(capacities.iter().copied());
    let tol = Tolerances::default();
    if !(budget >= 0.0) || budget > total + tol.budget(total) {
        return Err(AdlError::EmptyFeasibleSet { budget, total_capacity: total });
    }
    if budget <= 0.0 {
        return Ok(alloc::vec![0.0; v.len()]);
    }
    if budget >= total {
        return Ok(capacities.to_vec());
    }
    if v.iter().zip(capacities).all(|(&vi, &ui)| vi >= 0.0 && vi <= ui) && num::sum(v.iter().copied()) == budget {
        return Ok(v.to_vec());
    }

    let eval = |tau: f64| -> f64 { num::sum(v.iter().zip(capacities).map(|(&vi, &ui)| clamp(vi - tau, 0.0, ui))) };
    // sum(lo) = total, sum(hi) = 0
    let mut lo = v.iter().zip(capacities).map(|(&vi, &ui)| vi - ui).fold(f64::INFINITY, f64::min);
    let mut hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..256 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if eval(mid) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = if num::abs(eval(lo) - budget) <= num::abs(eval(hi) - budget) { lo } else { hi };
    let mut x: Vec<f64> = v.iter().zip(capacities).map(|(&vi, &ui)| clamp(vi - tau, 0.0, ui)).collect();
    spread_residual(&mut x, budget, capacities);
    Ok(x)
}

/// Pushes `budget - sum x` onto coordinates with slack, keeping the box.
pub(crate) fn spread_residual(x: &mut [f64], budget: f64, capacities: &[f64]) {
    for _ in 0..4 {
        let residual = budget - num::sum(x.iter().copied());
        if residual == 0.0 {
            return;
        }
        let free: Vec<usize> = (0..x.len())
            .filter(|&i| if residual > 0.0 { x[i] < capacities[i] } else { x[i] > 0.0 })
            .collect();
        if free.is_empty() {
            return;
        }
        let share = residual / free.len() as f64;
        for i in free {
            x[i] = clamp(x[i] + share, 0.0, capacities[i]);
        }
    }
}
