//! Severity control and execution-price benchmarks.
//!
//! The budget needed to cover a round is valued from ADL fills:
//! `B_needed = sum_k |p_exec - p_bk| |q|`. Ex ante the venue only has an
//! impact-slope estimate, so it plans against the estimated benchmark.

use alloc::vec::Vec;

use crate::num::{self, clamp, sign};
use crate::{AdlError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Side {
    /// Closing long inventory; sell pressure pushes price down.
    CloseLong,
    /// Closing short inventory; buy pressure pushes price up.
    CloseShort,
}

/// One ADL transfer.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FillRecord {
    pub exec_price: f64,
    pub bankruptcy_price: f64,
    /// Signed units.
    pub quantity: f64,
    pub side: Side,
}

impl FillRecord {
    pub fn new(exec_price: f64, bankruptcy_price: f64, quantity: f64, side: Side) -> Result<Self> {
        if !(exec_price > 0.0 && bankruptcy_price > 0.0) {
            return Err(AdlError::InvalidParameter(alloc::format!(
                "fill prices must be positive (exec {exec_price}, bankruptcy {bankruptcy_price})"
            )));
        }
        Ok(FillRecord { exec_price, bankruptcy_price, quantity, side })
    }

    /// `|p_exec - p_bk| |q|`
    pub fn transfer_gap(&self) -> f64 {
        num::abs(self.exec_price - self.bankruptcy_price) * num::abs(self.quantity)
    }
}

/// `p_exec(q) = p_mark -/+ alpha q`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinearImpactModel {
    pub mark_price: f64,
    pub slope: f64,
    pub side: Side,
    pub alpha_max: f64,
}

impl LinearImpactModel {
    pub fn new(mark_price: f64, slope: f64, side: Side, alpha_max: f64) -> Result<Self> {
        if !(slope >= 0.0 && slope <= alpha_max) {
            return Err(AdlError::InvalidParameter(alloc::format!("slope {slope} outside [0, {alpha_max}]")));
        }
        Ok(LinearImpactModel { mark_price, slope, side, alpha_max })
    }

    /// Execution price for closing `quantity >= 0` units.
    pub fn exec_price(&self, quantity: f64) -> Result<f64> {
        if !(quantity >= 0.0) {
            return Err(AdlError::InvalidParameter(alloc::format!("quantity {quantity} must be non-negative")));
        }
        let price = match self.side {
            Side::CloseLong => self.mark_price - self.slope * quantity,
            Side::CloseShort => self.mark_price + self.slope * quantity,
        };
        if price <= 0.0 {
            return Err(AdlError::NonpositiveExecPrice(price));
        }
        Ok(price)
    }

    /// Fill implied by this model for a transfer at `bankruptcy_price`.
    pub fn fill(&self, bankruptcy_price: f64, quantity: f64) -> Result<FillRecord> {
        let exec = self.exec_price(num::abs(quantity))?;
        FillRecord::new(exec, bankruptcy_price, quantity, self.side)
    }
}

pub fn exec_price(model: &LinearImpactModel, quantity: f64) -> Result<f64> {
    model.exec_price(quantity)
}

/// Ex post benchmark `sum_k |p_exec - p_bk| |q|`.
pub fn needed_budget(fills: &[FillRecord]) -> f64 {
    num::sum(fills.iter().map(FillRecord::transfer_gap))
}

/// Ex ante benchmark; same functional over estimator-implied fills.
pub fn estimated_needed_budget(estimated_fills: &[FillRecord]) -> f64 {
    needed_budget(estimated_fills)
}

/// Scalar reduction of the benchmark: `alpha Q^2`.
pub fn scalar_benchmark(slope: f64, quantity_scale: f64) -> f64 {
    slope * quantity_scale * quantity_scale
}

/// `min(1, B_needed / (D + eps))`.
pub fn theta_needed(b_needed: f64, deficit: f64, epsilon: f64) -> f64 {
    clamp(b_needed / (deficit + epsilon), 0.0, 1.0)
}

/// One-dimensional severity controller, projected OGD on `D |theta - theta_needed|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeverityController {
    theta: f64,
    step: f64,
}

impl SeverityController {
    pub fn new(theta: f64, step: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(AdlError::InvalidParameter(alloc::format!("theta {theta} outside [0, 1]")));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(AdlError::InvalidParameter(alloc::format!("step {step} must be positive")));
        }
        Ok(SeverityController { theta, step })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn step_size(&self) -> f64 {
        self.step
    }

    pub fn with_step(self, step: f64) -> Self {
        SeverityController { step, ..self }
    }

    /// `theta <- clip(theta - eta D sign(theta - theta_needed), 0, 1)`
    pub fn step(self, deficit: f64, theta_needed: f64) -> Self {
        let g = deficit * sign(self.theta - theta_needed);
        SeverityController { theta: clamp(self.theta - self.step * g, 0.0, 1.0), ..self }
    }
}

pub fn theta_ogd_step(ctrl: SeverityController, deficit: f64, theta_needed: f64) -> SeverityController {
    ctrl.step(deficit, theta_needed)
}

/// Projected OGD estimate of the impact slope on `|alpha - alpha_t|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeEstimator {
    estimate: f64,
    step: f64,
    alpha_max: f64,
}

impl SlopeEstimator {
    pub fn new(estimate: f64, step: f64, alpha_max: f64) -> Result<Self> {
        if !(alpha_max >= 0.0 && (0.0..=alpha_max).contains(&estimate)) {
            return Err(AdlError::InvalidParameter(alloc::format!("estimate {estimate} outside [0, {alpha_max}]")));
        }
        if !(step > 0.0) {
            return Err(AdlError::InvalidParameter(alloc::format!("step {step} must be positive")));
        }
        Ok(SlopeEstimator { estimate, step, alpha_max })
    }

    pub fn estimate(&self) -> f64 {
        self.estimate
    }

    pub fn alpha_max(&self) -> f64 {
        self.alpha_max
    }

    pub fn step(self, observed: f64) -> Self {
        let next = self.estimate - self.step * sign(self.estimate - observed);
        SlopeEstimator { estimate: clamp(next, 0.0, self.alpha_max), ..self }
    }
}

pub fn slope_ogd_step(est: SlopeEstimator, observed: f64) -> SlopeEstimator {
    est.step(observed)
}

/// Volume-weighted slope revealed by a round's fills: `sum |p_exec - mark| / sum |q|`.
pub fn observed_slope(fills: &[FillRecord], mark_price: f64) -> Option<f64> {
    let volume = num::sum(fills.iter().map(|f| num::abs(f.quantity)));
    if volume <= 0.0 {
        return None;
    }
    Some(num::sum(fills.iter().map(|f| num::abs(f.exec_price - mark_price))) / volume)
}

/// Hindsight step `sqrt((1 + 2P) / sum D^2)`.
pub fn optimal_step_size(path_variation: f64, deficits: &[f64]) -> Result<f64> {
    let sq = num::sum(deficits.iter().map(|d| d * d));
    if !(sq > 0.0) {
        return Err(AdlError::DegenerateEpisode);
    }
    Ok(num::sqrt((1.0 + 2.0 * path_variation) / sq))
}

/// Runs the controller over an episode, returning the played severities.
pub fn run_theta_ogd(start: SeverityController, deficits: &[f64], targets: &[f64]) -> Result<Vec<f64>> {
    if deficits.len() != targets.len() {
        return Err(AdlError::LengthMismatch { left: deficits.len(), right: targets.len() });
    }
    let mut ctrl = start;
    let mut played = Vec::with_capacity(deficits.len());
    for (&d, &target) in deficits.iter().zip(targets) {
        played.push(ctrl.theta());
        ctrl = ctrl.step(d, target);
    }
    Ok(played)
}

/// Slope estimates played before each `alpha_t` is revealed.
pub fn run_slope_ogd(start: SlopeEstimator, observed: &[f64]) -> Vec<f64> {
    let mut est = start;
    observed
        .iter()
        .map(|&a| {
            let played = est.estimate();
            est = est.step(a);
            played
        })
        .collect()
}
