//! Scenario generators: the analytic fixtures from `adl_core::scenario` and
//! a seeded random episode with a two-state slope regime.

use std::collections::BTreeMap;

use adl_core::policies::{queue_fill, ScoredWinners};
use adl_core::scenario::{gen_alternating_capacity, gen_churn_instance, Benchmark, Metadata, RoundTruth, Scenario};
use adl_core::severity::{run_slope_ogd, scalar_benchmark, SlopeEstimator};
use adl_core::model::{indexed_id, DEFAULT_EPSILON};
use adl_core::{RoundState, WinnerAccount};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Closed interval sampled uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub min: f64,
    pub max: f64,
}

impl Span {
    pub const fn new(min: f64, max: f64) -> Self {
        Span { min, max }
    }

    fn sample(&self, rng: &mut ChaCha20Rng) -> f64 {
        if self.max > self.min {
            rng.random_range(self.min..=self.max)
        } else {
            self.min
        }
    }

    fn check(&self, what: &str, positive: bool) -> Result<()> {
        let ok = self.min.is_finite() && self.max >= self.min && if positive { self.min > 0.0 } else { self.min >= 0.0 };
        if ok {
            Ok(())
        } else {
            Err(LabError::Config(format!("{what}: invalid range [{}, {}]", self.min, self.max)))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomEpisodeParams {
    #[serde(rename = "T")]
    pub horizon: usize,
    pub deficit: Span,
    pub winners_min: usize,
    pub winners_max: usize,
    /// Accounts are drawn from a pool of this size, so ids recur across rounds.
    pub pool: usize,
    pub capacity: Span,
    pub lot_size: Option<f64>,
    pub alpha_low: f64,
    pub alpha_high: f64,
    /// Probability of keeping the slope regime from one round to the next.
    pub stay_probability: f64,
    pub q_scale: Span,
    /// Step of the online slope estimator producing `b_needed_hat`.
    pub slope_step: f64,
    /// Recorded production budget as a multiple of the true benchmark.
    pub production_severity: f64,
}

impl Default for RandomEpisodeParams {
    fn default() -> Self {
        RandomEpisodeParams {
            horizon: 16,
            deficit: Span::new(100.0, 1000.0),
            winners_min: 3,
            winners_max: 8,
            pool: 12,
            capacity: Span::new(10.0, 200.0),
            lot_size: None,
            alpha_low: 0.5,
            alpha_high: 2.0,
            stay_probability: 0.8,
            q_scale: Span::new(5.0, 15.0),
            slope_step: 0.25,
            production_severity: 1.5,
        }
    }
}

impl RandomEpisodeParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(LabError::Config(format!("random episode: {m}")));
        if self.horizon == 0 {
            return bad("T must be positive");
        }
        if self.winners_min == 0 || self.winners_max < self.winners_min || self.pool < self.winners_max {
            return bad("need 0 < winners_min <= winners_max <= pool");
        }
        if !(0.0..=1.0).contains(&self.stay_probability) {
            return bad("stay_probability must lie in [0, 1]");
        }
        if !(self.alpha_low >= 0.0 && self.alpha_high >= self.alpha_low && self.alpha_high.is_finite()) {
            return bad("need 0 <= alpha_low <= alpha_high");
        }
        if !(self.slope_step > 0.0) || !(self.production_severity >= 0.0) {
            return bad("slope_step must be positive and production_severity non-negative");
        }
        if self.lot_size.is_some_and(|l| !(l > 0.0)) {
            return bad("lot_size must be positive");
        }
        self.deficit.check("deficit", false)?;
        self.capacity.check("capacity", true)?;
        self.q_scale.check("q_scale", false)
    }
}

/// Rounds to the 1e-9 grid so values serialize with at most nine decimals.
fn quantize(v: f64) -> f64 {
    (v * 1e9).round() / 1e9
}

/// Deterministic in `seed`. Slopes follow the regime chain starting low;
/// `b_needed = alpha_t Q_t^2`, `b_needed_hat = alpha_hat_t Q_t^2` with
/// `alpha_hat_t` from the online slope estimator. Recorded production
/// haircuts fill a random-score queue with `production_severity * b_needed`.
pub fn gen_random_episode(seed: u64, params: &RandomEpisodeParams) -> Result<Scenario> {
    params.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut high = false;
    let mut alphas = Vec::with_capacity(params.horizon);
    for t in 0..params.horizon {
        if t > 0 && rng.random::<f64>() >= params.stay_probability {
            high = !high;
        }
        alphas.push(if high { params.alpha_high } else { params.alpha_low });
    }
    let estimator = SlopeEstimator::new(params.alpha_low, params.slope_step, params.alpha_high)?;
    let estimates = run_slope_ogd(estimator, &alphas);

    let mut rounds = Vec::with_capacity(params.horizon);
    let mut truth = Vec::with_capacity(params.horizon);
    for t in 0..params.horizon {
        let n = rng.random_range(params.winners_min..=params.winners_max);
        let mut members: Vec<usize> = sample(&mut rng, params.pool, n).into_vec();
        members.sort_unstable();
        let winners = members
            .iter()
            .map(|&k| {
                let mut cap = quantize(params.capacity.sample(&mut rng));
                if let Some(lot) = params.lot_size {
                    // kept exactly on the grid; not re-quantized
                    cap = (cap / lot).floor().max(1.0) * lot;
                }
                WinnerAccount::new(indexed_id(k), cap, params.lot_size)
            })
            .collect::<adl_core::Result<Vec<_>>>()?;
        let deficit = quantize(params.deficit.sample(&mut rng));
        let q = quantize(params.q_scale.sample(&mut rng));
        let b = quantize(scalar_benchmark(alphas[t], q));
        let b_hat = quantize(scalar_benchmark(estimates[t], q));
        let state = RoundState::new(t as u64 + 1, deficit, winners, BTreeMap::new(), DEFAULT_EPSILON)?;
        let scores: Vec<f64> = (0..n).map(|_| quantize(rng.random::<f64>())).collect();
        let caps = state.capacities();
        let budget = (params.production_severity * b).min(state.total_capacity());
        let ranking = ScoredWinners::new(scores.clone())?;
        let production: Vec<f64> = queue_fill(&caps, budget, ranking.permutation()).into_iter().map(quantize).collect();
        let production = production.iter().zip(&caps).map(|(x, u)| x.min(*u)).collect();
        rounds.push(state);
        truth.push(RoundTruth {
            scores: Some(scores),
            production: Some(production),
            benchmarks: vec![Benchmark {
                delta_horizon: 0.0,
                b_needed: b,
                b_needed_hat: Some(b_hat),
                alpha_true: Some(alphas[t]),
                q_scale: Some(q),
            }],
            ..RoundTruth::default()
        });
    }
    let mut meta = Metadata::named("random");
    meta.seed = Some(seed);
    let meta = meta
        .with_param("T", params.horizon)
        .with_param("stay_probability", params.stay_probability)
        .with_param("alpha_low", params.alpha_low)
        .with_param("alpha_high", params.alpha_high);
    Ok(Scenario::new(rounds, truth, meta)?)
}

/// Generator selection, as written in configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    AlternatingCapacity {
        #[serde(rename = "T")]
        horizon: usize,
        #[serde(rename = "M")]
        m: f64,
    },
    Churn {
        #[serde(rename = "T")]
        horizon: usize,
        alpha_min: f64,
        alpha_max: f64,
    },
    Random {
        #[serde(flatten)]
        params: RandomEpisodeParams,
    },
}

impl GeneratorSpec {
    pub fn build(&self, seed: u64) -> Result<Scenario> {
        match self {
            GeneratorSpec::AlternatingCapacity { horizon, m } => Ok(gen_alternating_capacity(*horizon, *m)?),
            GeneratorSpec::Churn { horizon, alpha_min, alpha_max } => Ok(gen_churn_instance(*horizon, *alpha_min, *alpha_max)?),
            GeneratorSpec::Random { params } => gen_random_episode(seed, params),
        }
    }
}
