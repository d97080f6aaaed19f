//! Round losses, regrets, cumulative failure and the severity envelope.
//!
//! Cumulative quantities go through [`crate::num::sum`] (compensated).

use alloc::vec::Vec;

use crate::num::{self, abs, clamp, pos};
use crate::{AdlError, Result};

/// Loss weights. `lambda_empirical` weighs the concentration gap in the
/// empirical replay loss.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct LossWeights {
    pub lambda_track: f64,
    pub lambda_fair: f64,
    pub lambda_under: f64,
    pub lambda_over: f64,
    pub lambda_empirical: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights { lambda_track: 1.0, lambda_fair: 1.0, lambda_under: 1.0, lambda_over: 1.0, lambda_empirical: 1.0 }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.lambda_track, self.lambda_fair, self.lambda_under, self.lambda_over, self.lambda_empirical];
        if all.iter().all(|&l| l >= 0.0 && l.is_finite()) {
            Ok(())
        } else {
            Err(AdlError::InvalidParameter(alloc::string::String::from("loss weights must be non-negative")))
        }
    }
}

/// Burden normalization used by the fairness term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Burden {
    /// `x_i / (u_i + eps)`
    #[default]
    Regularized,
    /// `x_i / u_i`, zero-capacity accounts skipped
    Exact,
}

impl Burden {
    /// Concentration functional `max_i burden_i` (0 for an empty round).
    pub fn concentration(self, x: &[f64], capacities: &[f64], epsilon: f64) -> f64 {
        x.iter()
            .zip(capacities)
            .filter_map(|(&xi, &ui)| match self {
                Burden::Regularized => Some(xi / (ui + epsilon)),
                Burden::Exact if ui > 0.0 => Some(xi / ui),
                Burden::Exact => None,
            })
            .fold(0.0, f64::max)
    }
}

/// `m = max_i x_i / (u_i + eps)`.
pub fn concentration_ratio(x: &[f64], capacities: &[f64], epsilon: f64) -> Result<f64> {
    if capacities.is_empty() {
        return Err(AdlError::EmptyRound);
    }
    Ok(Burden::Regularized.concentration(x, capacities, epsilon))
}

/// Worst capacity-normalized burden `max_i x_i / u_i`.
pub fn worst_burden(x: &[f64], capacities: &[f64]) -> f64 {
    Burden::Exact.concentration(x, capacities, 0.0)
}

/// Asymmetric round loss: under/over-coverage penalties plus concentration.
pub fn round_loss_asymmetric(
    executed: f64,
    b_needed: f64,
    x: &[f64],
    capacities: &[f64],
    epsilon: f64,
    gamma: Burden,
    w: &LossWeights,
) -> f64 {
    w.lambda_under * pos(b_needed - executed)
        + w.lambda_over * pos(executed - b_needed)
        + w.lambda_fair * gamma.concentration(x, capacities, epsilon)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RoundLossBreakdown {
    pub tracking: f64,
    pub fairness: f64,
    pub total: f64,
    pub overshoot: f64,
    pub undershoot: f64,
    pub concentration: f64,
}

/// Convex surrogate `lambda_track |1'x - b| + lambda_fair max_i x_i/(u_i+eps)`.
pub fn round_loss_surrogate(x: &[f64], capacities: &[f64], target: f64, epsilon: f64, w: &LossWeights) -> RoundLossBreakdown {
    round_loss_surrogate_with(x, capacities, target, epsilon, w, Burden::Regularized)
}

pub fn round_loss_surrogate_with(
    x: &[f64],
    capacities: &[f64],
    target: f64,
    epsilon: f64,
    w: &LossWeights,
    burden: Burden,
) -> RoundLossBreakdown {
    let executed = num::sum(x.iter().copied());
    let concentration = burden.concentration(x, capacities, epsilon);
    let tracking = w.lambda_track * abs(executed - target);
    let fairness = w.lambda_fair * concentration;
    RoundLossBreakdown {
        tracking,
        fairness,
        total: tracking + fairness,
        overshoot: pos(executed - target),
        undershoot: pos(target - executed),
        concentration,
    }
}

/// A subgradient of the surrogate at `x`. The max term spreads its mass
/// uniformly over the argmax set.
pub fn surrogate_subgradient(x: &[f64], capacities: &[f64], target: f64, epsilon: f64, w: &LossWeights) -> Vec<f64> {
    let executed = num::sum(x.iter().copied());
    let track = w.lambda_track * num::sign(executed - target);
    let ratios: Vec<f64> = x.iter().zip(capacities).map(|(&xi, &ui)| xi / (ui + epsilon)).collect();
    let top = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let slack = 1e-12 * top.abs().max(1e-300);
    let argmax: Vec<usize> = (0..ratios.len()).filter(|&i| ratios[i] >= top - slack).collect();
    let share = if argmax.is_empty() { 0.0 } else { 1.0 / argmax.len() as f64 };
    let mut g = alloc::vec![track; x.len()];
    for i in argmax {
        g[i] += w.lambda_fair * share / (capacities[i] + epsilon);
    }
    g
}

/// Empirical replay loss `|H - B| + lambda B |m - m_ilp|`.
pub fn empirical_round_loss(executed: f64, b_needed: f64, m: f64, m_ilp: f64, lambda: f64) -> f64 {
    let e = empirical_breakdown(executed, b_needed, m, m_ilp, lambda);
    e.total
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalBreakdown {
    pub tracking: f64,
    pub fairness: f64,
    pub total: f64,
}

pub fn empirical_breakdown(executed: f64, b_needed: f64, m: f64, m_ilp: f64, lambda: f64) -> EmpiricalBreakdown {
    let tracking = abs(executed - b_needed);
    let fairness = lambda * b_needed * abs(m - m_ilp);
    EmpiricalBreakdown { tracking, fairness, total: tracking + fairness }
}

fn check_len(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(AdlError::LengthMismatch { left: a, right: b })
    }
}

/// `sum policy - sum comparator`.
pub fn regret(policy: &[f64], comparator: &[f64]) -> Result<f64> {
    check_len(policy.len(), comparator.len())?;
    Ok(num::sum(policy.iter().copied()) - num::sum(comparator.iter().copied()))
}

/// Regret against the best member of a policy library (by cumulative loss).
pub fn policy_class_regret(policy: &[f64], library: &[&[f64]]) -> Result<f64> {
    let mut best = f64::INFINITY;
    for series in library {
        check_len(policy.len(), series.len())?;
        best = best.min(num::sum(series.iter().copied()));
    }
    if library.is_empty() {
        return Err(AdlError::InvalidParameter(alloc::string::String::from("empty policy library")));
    }
    Ok(num::sum(policy.iter().copied()) - best)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrackingMetrics {
    pub tracking: Vec<f64>,
    pub overshoot: Vec<f64>,
    pub undershoot: Vec<f64>,
    pub total_tracking: f64,
    pub total_overshoot: f64,
    pub total_undershoot: f64,
}

/// Per-round `|H - B|`, `[H - B]_+`, `[B - H]_+` and their totals.
pub fn tracking_metrics(executed: &[f64], b_needed: &[f64]) -> Result<TrackingMetrics> {
    check_len(executed.len(), b_needed.len())?;
    let tracking: Vec<f64> = executed.iter().zip(b_needed).map(|(h, b)| abs(h - b)).collect();
    let overshoot: Vec<f64> = executed.iter().zip(b_needed).map(|(h, b)| pos(h - b)).collect();
    let undershoot: Vec<f64> = executed.iter().zip(b_needed).map(|(h, b)| pos(b - h)).collect();
    Ok(TrackingMetrics {
        total_tracking: num::sum(tracking.iter().copied()),
        total_overshoot: num::sum(overshoot.iter().copied()),
        total_undershoot: num::sum(undershoot.iter().copied()),
        tracking,
        overshoot,
        undershoot,
    })
}

/// Scalar tracking regret against the library's best cumulative tracking error.
pub fn tracking_regret(executed: &[f64], library: &[&[f64]], b_needed: &[f64]) -> Result<f64> {
    let own = tracking_metrics(executed, b_needed)?.total_tracking;
    let mut best = f64::INFINITY;
    for h in library {
        best = best.min(tracking_metrics(h, b_needed)?.total_tracking);
    }
    if library.is_empty() {
        return Err(AdlError::InvalidParameter(alloc::string::String::from("empty policy library")));
    }
    Ok(own - best)
}

/// `V_T = sum [B_needed - H]_+`.
pub fn cumulative_failure(executed: &[f64], b_needed: &[f64]) -> Result<f64> {
    check_len(executed.len(), b_needed.len())?;
    Ok(num::sum(executed.iter().zip(b_needed).map(|(h, b)| pos(b - h))))
}

/// `sum_t |s_t - s_{t-1}|`.
pub fn path_variation(series: &[f64]) -> f64 {
    num::sum(series.windows(2).map(|w| abs(w[1] - w[0])))
}

/// Instance-calibrated envelope `sqrt((1 + 2P) sum D^2)`.
pub fn instance_bound(path_variation: f64, deficits: &[f64]) -> f64 {
    num::sqrt((1.0 + 2.0 * path_variation) * num::sum(deficits.iter().map(|d| d * d)))
}

/// Series for checking the regret/estimation-error decomposition. Losses are
/// per round; `library*` rows are comparator policies.
#[derive(Debug, Clone, Copy)]
pub struct DecompositionInputs<'a> {
    /// Policy losses under the ex post target.
    pub policy_loss: &'a [f64],
    /// Policy losses under the ex ante target.
    pub policy_loss_hat: &'a [f64],
    pub library_loss: &'a [Vec<f64>],
    pub library_loss_hat: &'a [Vec<f64>],
    pub b_needed: &'a [f64],
    pub b_needed_hat: &'a [f64],
    pub lambda_track: f64,
}

/// Tolerance below which a negative decomposition slack is rounding noise, USD.
pub const DECOMPOSITION_TOLERANCE: f64 = 1e-6;

/// Slack of `sum l(x) <= min_P sum l + Reg_P(l_hat) + 2 lambda sum |B - B_hat|`.
pub fn decomposition_gap(inputs: &DecompositionInputs<'_>) -> Result<f64> {
    let t = inputs.policy_loss.len();
    check_len(t, inputs.policy_loss_hat.len())?;
    check_len(t, inputs.b_needed.len())?;
    check_len(t, inputs.b_needed_hat.len())?;
    check_len(inputs.library_loss.len(), inputs.library_loss_hat.len())?;
    if inputs.library_loss.is_empty() {
        return Err(AdlError::InvalidParameter(alloc::string::String::from("empty comparator class")));
    }
    let mut best = f64::INFINITY;
    let mut best_hat = f64::INFINITY;
    for (row, row_hat) in inputs.library_loss.iter().zip(inputs.library_loss_hat) {
        check_len(t, row.len())?;
        check_len(t, row_hat.len())?;
        best = best.min(num::sum(row.iter().copied()));
        best_hat = best_hat.min(num::sum(row_hat.iter().copied()));
    }
    let own = num::sum(inputs.policy_loss.iter().copied());
    let reg_hat = num::sum(inputs.policy_loss_hat.iter().copied()) - best_hat;
    let estimation = 2.0 * inputs.lambda_track * num::sum(inputs.b_needed.iter().zip(inputs.b_needed_hat).map(|(b, bh)| abs(b - bh)));
    let slack = best + reg_hat + estimation - own;
    let scale = own.abs().max(best.abs()).max(1.0);
    if slack < -DECOMPOSITION_TOLERANCE.max(1e-12 * scale) {
        return Err(AdlError::DecompositionViolated { slack });
    }
    Ok(slack)
}

/// One round of a surrogate episode (fixed winner set, aligned by position).
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateRound {
    pub capacities: Vec<f64>,
    pub target: f64,
    pub epsilon: f64,
}

pub fn surrogate_episode_loss(x: &[f64], rounds: &[SurrogateRound], w: &LossWeights, burden: Burden) -> f64 {
    num::sum(rounds.iter().map(|r| round_loss_surrogate_with(x, &r.capacities, r.target, r.epsilon, w, burden).total))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticComparator {
    pub allocation: Vec<f64>,
    pub loss: f64,
    /// True when found by subgradient descent rather than grid search + refinement.
    pub approximate: bool,
}

/// Best fixed allocation in `prod_i [0, min_t u_{i,t}]` for the summed
/// surrogate. Grid search (refined by subgradient descent) for `n <= 3`,
/// projected subgradient descent otherwise.
pub fn best_fixed_allocation(rounds: &[SurrogateRound], w: &LossWeights, burden: Burden) -> Result<StaticComparator> {
    let first = rounds.first().ok_or(AdlError::DegenerateEpisode)?;
    let n = first.capacities.len();
    let mut upper = first.capacities.clone();
    for r in rounds {
        check_len(n, r.capacities.len())?;
        for (u, &c) in upper.iter_mut().zip(&r.capacities) {
            *u = u.min(c);
        }
    }
    let eval = |x: &[f64]| surrogate_episode_loss(x, rounds, w, burden);
    let mut best_x = alloc::vec![0.0; n];
    let mut best = eval(&best_x);
    let approximate = n > 3;
    if n >= 1 && !approximate {
        let steps = match n {
            1 => 4000usize,
            2 => 300,
            _ => 48,
        };
        let mut idx = alloc::vec![0usize; n];
        let mut x = alloc::vec![0.0; n];
        'grid: loop {
            for i in 0..n {
                x[i] = upper[i] * idx[i] as f64 / steps as f64;
            }
            let v = eval(&x);
            if v < best {
                best = v;
                best_x.copy_from_slice(&x);
            }
            let mut d = 0;
            loop {
                if d == n {
                    break 'grid;
                }
                idx[d] += 1;
                if idx[d] <= steps {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
        }
    }
    // projected subgradient refinement on the box
    let diameter = num::sqrt(num::sum(upper.iter().map(|u| u * u))).max(1e-12);
    let mut x = best_x.clone();
    for k in 1..=4000usize {
        let mut g = alloc::vec![0.0; n];
        for r in rounds {
            let gr = match burden {
                Burden::Regularized => surrogate_subgradient(&x, &r.capacities, r.target, r.epsilon, w),
                Burden::Exact => surrogate_subgradient(&x, &r.capacities, r.target, 0.0, w),
            };
            for (gi, v) in g.iter_mut().zip(gr) {
                *gi += v;
            }
        }
        let norm = num::sqrt(num::sum(g.iter().map(|v| v * v)));
        if norm == 0.0 {
            break;
        }
        let step = diameter / (norm * num::sqrt(k as f64));
        for i in 0..n {
            x[i] = clamp(x[i] - step * g[i], 0.0, upper[i]);
        }
        let v = eval(&x);
        if v < best {
            best = v;
            best_x.copy_from_slice(&x);
        }
    }
    Ok(StaticComparator { allocation: best_x, loss: best, approximate })
}

/// Static-regret envelope `D* G* sqrt(T)` with `D* = sqrt(2) U_max` and
/// `G* = lambda_track sqrt(n_max) + lambda_fair / eps`.
pub fn ogd_static_bound(w: &LossWeights, epsilon: f64, n_max: usize, u_max: f64, horizon: usize) -> f64 {
    let d_star = num::sqrt(2.0) * u_max;
    let g_star = w.lambda_track * num::sqrt(n_max as f64) + w.lambda_fair / epsilon;
    d_star * g_star * num::sqrt(horizon as f64)
}

/// Per-policy episode summary.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpisodeMetrics {
    pub policy: alloc::string::String,
    pub delta_horizon: f64,
    pub lambda: f64,
    /// Cumulative empirical objective `L`.
    pub objective: f64,
    pub tracking: f64,
    pub fairness: f64,
    pub overshoot: f64,
    pub undershoot: f64,
    /// Cumulative surrogate loss against the ex post target.
    pub surrogate_loss: Option<f64>,
    pub static_regret: Option<f64>,
    pub dynamic_regret: Option<f64>,
    pub policy_class_regret: f64,
    pub tracking_regret: f64,
    pub failure: f64,
    pub p_theta: f64,
    pub instance_bound: f64,
    pub bound_ratio: Option<f64>,
    pub decomposition_slack: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn only(track: f64, fair: f64, under: f64, over: f64) -> LossWeights {
        LossWeights { lambda_track: track, lambda_fair: fair, lambda_under: under, lambda_over: over, lambda_empirical: 1.0 }
    }

    #[test]
    fn asymmetric_loss_examples() {
        let w = LossWeights::default();
        assert_eq!(round_loss_asymmetric(4.0, 4.0, &[0.0, 0.0], &[1.0, 1.0], 1e-6, Burden::Regularized, &w), 0.0);
        assert_eq!(round_loss_asymmetric(3.0, 5.0, &[0.0], &[1.0], 1e-6, Burden::Exact, &only(0.0, 0.0, 2.0, 0.0)), 4.0);
        // overshoot 2 + fairness max(1/2, 0) = 2.5
        let v = round_loss_asymmetric(5.0, 3.0, &[1.0, 0.0], &[2.0, 1.0], 1e-6, Burden::Exact, &only(0.0, 1.0, 0.0, 1.0));
        assert_eq!(v, 2.0 + 0.5);
    }

    #[test]
    fn surrogate_examples() {
        let w = only(1.0, 1.0, 0.0, 0.0);
        let r = round_loss_surrogate(&[3.0], &[3.0], 3.0, 1e-6, &w);
        assert_eq!(r.tracking, 0.0);
        assert!((r.fairness - 3.0 / (3.0 + 1e-6)).abs() < 1e-15);
        assert_eq!(r.total, r.tracking + r.fairness);
        assert_eq!(round_loss_surrogate(&[0.0, 0.0], &[1.0, 1.0], 0.0, 1e-6, &w).total, 0.0);
        // alternating geometry, queue serves account 1: odd round (1, M), even (M, 1)
        let m = 2.0;
        let fair = only(0.0, 1.0, 0.0, 0.0);
        assert_eq!(round_loss_surrogate_with(&[1.0, 0.0], &[1.0, m], 1.0, 1e-6, &fair, Burden::Exact).fairness, 1.0);
        assert_eq!(round_loss_surrogate_with(&[1.0, 0.0], &[m, 1.0], 1.0, 1e-6, &fair, Burden::Exact).fairness, 0.5);
    }

    #[test]
    fn empirical_loss_examples() {
        assert_eq!(empirical_round_loss(5.0, 5.0, 0.3, 0.3, 1.0), 0.0);
        assert_eq!(empirical_round_loss(10.0, 8.0, 0.9, 0.4, 1.0), 2.0 + 8.0 * 0.5);
    }

    #[test]
    fn concentration_examples() {
        let c = concentration_ratio(&[1.0, 3.0], &[2.0, 6.0], 1e-6).unwrap();
        assert!((c - 0.5).abs() < 1e-6 && c < 0.5);
        let c = concentration_ratio(&[2.0, 0.0], &[2.0, 6.0], 1e-6).unwrap();
        assert!(c < 1.0 && c > 1.0 - 1e-6);
        assert_eq!(concentration_ratio(&[0.0], &[1.0], 1e-6), Ok(0.0));
        assert_eq!(concentration_ratio(&[], &[], 1e-6), Err(AdlError::EmptyRound));
    }

    #[test]
    fn regret_examples() {
        assert_eq!(regret(&[1.0, 2.0], &[1.0, 2.0]), Ok(0.0));
        // alternating instance, T = 4, M = 2
        let queue = [1.0, 0.5, 1.0, 0.5];
        let comp = [0.5; 4];
        assert_eq!(regret(&queue, &comp), Ok(1.0));
        let queue: Vec<f64> = (0..100).map(|t| if t % 2 == 0 { 1.0 } else { 0.5 }).collect();
        assert_eq!(regret(&queue, &[0.5; 100]), Ok(25.0));
        assert!(regret(&[1.0], &[]).is_err());
    }

    #[test]
    fn tracking_examples() {
        let m = tracking_metrics(&[1.0, 5.0], &[2.0, 3.0]).unwrap();
        assert_eq!(m.tracking, vec![1.0, 2.0]);
        assert_eq!(m.undershoot, vec![1.0, 0.0]);
        assert_eq!(m.overshoot, vec![0.0, 2.0]);
        let z = tracking_metrics(&[2.0, 3.0], &[2.0, 3.0]).unwrap();
        assert_eq!(z.total_tracking + z.total_overshoot + z.total_undershoot, 0.0);
        let lib: [&[f64]; 2] = [&[2.0, 3.0], &[0.0, 0.0]];
        assert_eq!(tracking_regret(&[1.0, 5.0], &lib, &[2.0, 3.0]), Ok(3.0));
    }

    #[test]
    fn failure_examples() {
        assert_eq!(cumulative_failure(&[5.0, 6.0], &[4.0, 6.0]), Ok(0.0));
        assert_eq!(cumulative_failure(&[3.0], &[5.0]), Ok(2.0));
        // scalar model: alpha = 1, alpha_hat = 0.5, Q = 2 -> B = 4, B_hat = 2 per round
        assert_eq!(cumulative_failure(&[2.0, 2.0], &[4.0, 4.0]), Ok(4.0));
    }

    #[test]
    fn path_variation_examples() {
        assert_eq!(path_variation(&[0.3; 5]), 0.0);
        assert_eq!(path_variation(&[0.0, 1.0, 0.0, 1.0]), 3.0);
        assert_eq!(path_variation(&[0.7]), 0.0);
        let alternating: Vec<f64> = (0..16).map(|t| (t % 2) as f64).collect();
        assert_eq!(path_variation(&alternating), 15.0);
    }

    #[test]
    fn instance_bound_examples() {
        assert_eq!(instance_bound(0.0, &[1.0]), 1.0);
        assert_eq!(instance_bound(0.0, &[3.0, 4.0]), 5.0);
        let sq = 129.7e6f64 * 129.7e6 / (1.0 + 2.0 * 7.06);
        let d = libm::sqrt(sq);
        assert!((instance_bound(7.06, &[d]) / 129.7e6 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn decomposition_single_round_slack() {
        let w = only(1.0, 0.0, 0.0, 0.0);
        // single policy = comparator, H = 3, B = 5, B_hat = 4
        let l = round_loss_surrogate(&[3.0], &[10.0], 5.0, 1e-6, &w).total;
        let lh = round_loss_surrogate(&[3.0], &[10.0], 4.0, 1e-6, &w).total;
        let slack = decomposition_gap(&DecompositionInputs {
            policy_loss: &[l],
            policy_loss_hat: &[lh],
            library_loss: &[vec![l]],
            library_loss_hat: &[vec![lh]],
            b_needed: &[5.0],
            b_needed_hat: &[4.0],
            lambda_track: 1.0,
        })
        .unwrap();
        assert_eq!(slack, 2.0);
        let err = decomposition_gap(&DecompositionInputs {
            policy_loss: &[10.0],
            policy_loss_hat: &[0.0],
            library_loss: &[vec![0.0]],
            library_loss_hat: &[vec![0.0]],
            b_needed: &[1.0],
            b_needed_hat: &[1.0],
            lambda_track: 1.0,
        });
        assert!(matches!(err, Err(AdlError::DecompositionViolated { .. })));
    }

    #[test]
    fn static_comparator_finds_target_split() {
        let w = only(1.0, 0.0, 0.0, 0.0);
        let rounds: Vec<SurrogateRound> = [1.0, 2.0, 3.0]
            .iter()
            .map(|&b| SurrogateRound { capacities: vec![2.0, 2.0], target: b, epsilon: 1e-6 })
            .collect();
        let best = best_fixed_allocation(&rounds, &w, Burden::Regularized).unwrap();
        // any x with 1'x = 2 is optimal, loss = 2
        assert!((best.loss - 2.0).abs() < 1e-9);
        assert!(!best.approximate);
    }

    #[test]
    fn subgradient_splits_over_ties() {
        let w = only(0.0, 1.0, 0.0, 0.0);
        let g = surrogate_subgradient(&[0.5, 0.5], &[1.0, 1.0], 1.0, 0.0, &w);
        assert_eq!(g, vec![0.5, 0.5]);
    }
}
