use adl_core::instability::{monotonicity_violations, perturbation_probe};
use adl_core::metrics::{
    best_fixed_allocation, decomposition_gap, ogd_static_bound, path_variation, round_loss_surrogate, Burden,
    DecompositionInputs, LossWeights, SurrogateRound,
};
use adl_core::model::{is_extreme_point, project_capped_simplex, validate_allocation};
use adl_core::policies::{
    integer_pro_rata, minmax_allocate, pro_rata_allocate, queue_allocate, queue_fill, InitRule, PolicyKind,
    ScoreSource, ScoredWinners, VectorMirrorDescent,
};
use adl_core::severity::{optimal_step_size, run_theta_ogd, theta_needed, SeverityController};
use adl_core::{RoundState, Tolerances, WinnerAccount};
use proptest::prelude::*;

/// All vertices of `X(B, u)`: every coordinate but one sits at a bound.
fn vertices(budget: f64, u: &[f64]) -> Vec<Vec<f64>> {
    let n = u.len();
    let mut out = Vec::new();
    for k in 0..n {
        for mask in 0u32..(1 << (n - 1)) {
            let mut x = vec![0.0; n];
            let mut bit = 0;
            for (i, xi) in x.iter_mut().enumerate() {
                if i == k {
                    continue;
                }
                if mask >> bit & 1 == 1 {
                    *xi = u[i];
                }
                bit += 1;
            }
            let rest = budget - x.iter().sum::<f64>();
            if rest >= -1e-12 && rest <= u[k] + 1e-12 {
                x[k] = rest.clamp(0.0, u[k]);
                out.push(x);
            }
        }
    }
    out
}

fn instance(max_n: usize) -> impl Strategy<Value = (Vec<f64>, f64)> {
    prop::collection::vec(0.01f64..10.0, 2..=max_n).prop_flat_map(|u| {
        let total: f64 = u.iter().sum();
        (Just(u), 0.001 * total..0.999 * total)
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

proptest! {
    #[test]
    fn projection_is_feasible_and_idempotent(
        (u, b) in instance(8),
        v in prop::collection::vec(-20.0f64..20.0, 8),
    ) {
        let v = &v[..u.len()];
        let x = project_capped_simplex(v, b, &u).unwrap();
        prop_assert!(validate_allocation(&x, b, &u, &Tolerances::default()).is_ok());
        let again = project_capped_simplex(&x, b, &u).unwrap();
        for (p, q) in x.iter().zip(&again) {
            prop_assert!((p - q).abs() <= 1e-9 * (1.0 + p.abs()));
        }
        // no vertex of the polytope is closer to v than its projection
        let d = |y: &[f64]| y.iter().zip(v).map(|(a, c)| (a - c) * (a - c)).sum::<f64>();
        if u.len() <= 6 {
            for vert in vertices(b, &u) {
                prop_assert!(d(&x) <= d(&vert) + 1e-7);
            }
        }
    }

    #[test]
    fn extreme_points_match_vertex_enumeration((u, b) in instance(6), w in 0.05f64..0.95, pick in any::<(usize, usize)>()) {
        let verts = vertices(b, &u);
        prop_assert!(!verts.is_empty());
        for vert in &verts {
            prop_assert!(is_extreme_point(vert, b, &u).unwrap());
        }
        let a = &verts[pick.0 % verts.len()];
        let c = &verts[pick.1 % verts.len()];
        let dist: f64 = a.iter().zip(c).map(|(p, q)| (p - q).abs()).sum();
        if dist > 1e-3 {
            let mid: Vec<f64> =
                a.iter().zip(c).zip(&u).map(|((p, q), ui)| (w * p + (1.0 - w) * q).clamp(0.0, *ui)).collect();
            prop_assert!(!is_extreme_point(&mid, b, &u).unwrap());
        }
    }

    #[test]
    fn queue_solves_the_linear_program((u, b) in instance(6), s in prop::collection::vec(-5.0f64..5.0, 6)) {
        let s = s[..u.len()].to_vec();
        let state = RoundState::from_capacities(1, b, &u).unwrap();
        let x = queue_allocate(&state, b, &ScoredWinners::new(s.clone()).unwrap()).unwrap().allocation;
        prop_assert!(is_extreme_point(&x, b, &u).unwrap());
        let best = vertices(b, &u).iter().map(|v| dot(&s, v)).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(dot(&s, &x) >= best - 1e-9 * (1.0 + best.abs()));
    }

    #[test]
    fn pro_rata_has_no_inversions_and_beats_every_queue((u, b) in instance(6)) {
        let state = RoundState::from_capacities(1, b, &u).unwrap();
        let x = pro_rata_allocate(&state, b).unwrap().allocation;
        prop_assert_eq!(monotonicity_violations(&u, &x), 0.0);
        let z = minmax_allocate(&state, b).unwrap().worst_burden;
        let mut perm: Vec<usize> = (0..u.len()).collect();
        for _ in 0..u.len() {
            let q = queue_fill(&u, b, &perm);
            let worst = q.iter().zip(&u).map(|(x, u)| x / u).fold(0.0, f64::max);
            prop_assert!(z < worst);
            perm.rotate_left(1);
        }
    }

    #[test]
    fn queue_jumps_by_twice_the_budget(
        mut u in prop::collection::vec(0.01f64..10.0, 2..8),
        frac in 0.01f64..1.0,
        base in prop::collection::vec(-3.0f64..3.0, 8),
    ) {
        let b = frac * u[0].min(u[1]);
        u[0] = u[0].max(b);
        let state = RoundState::from_capacities(1, b, &u).unwrap();
        let kind = PolicyKind::Queue { score: ScoreSource::Explicit };
        prop_assert_eq!(perturbation_probe(&state, b, &base[..u.len()], 1e-9, &kind).unwrap(), 2.0 * b);
        prop_assert_eq!(perturbation_probe(&state, b, &base[..u.len()], 1e-9, &PolicyKind::ProRata).unwrap(), 0.0);
    }

    #[test]
    fn integer_pro_rata_stays_within_one_lot(
        lots in prop::collection::vec((1u32..20, 0.5f64..2.0), 2..6),
        frac in 0.0f64..1.0,
    ) {
        let lot = 0.25;
        let winners: Vec<WinnerAccount> = lots
            .iter()
            .enumerate()
            .map(|(i, &(k, _))| WinnerAccount::new(format!("w{i}"), k as f64 * lot, Some(lot)).unwrap())
            .collect();
        let total: f64 = winners.iter().map(|w| w.capacity).sum();
        let b = (frac * total / lot).floor() * lot;
        let state = RoundState::new(1, b, winners, Default::default(), 1e-6).unwrap();
        let x = integer_pro_rata(&state, b).unwrap().allocation;
        let pr = pro_rata_allocate(&state, b).unwrap().allocation;
        prop_assert!((x.iter().sum::<f64>() - b).abs() < 1e-9);
        for (xi, pi) in x.iter().zip(&pr) {
            prop_assert!((xi - pi).abs() <= lot + 1e-9);
        }
    }

    #[test]
    fn theta_ogd_meets_its_envelope(
        series in prop::collection::vec((0.1f64..100.0, 0.0f64..150.0), 8..64),
    ) {
        let deficits: Vec<f64> = series.iter().map(|p| p.0).collect();
        let targets: Vec<f64> = series.iter().map(|&(d, b)| theta_needed(b, d, 1e-6)).collect();
        let p = path_variation(&targets);
        let eta = optimal_step_size(p, &deficits).unwrap();
        let played = run_theta_ogd(SeverityController::new(0.5, eta).unwrap(), &deficits, &targets).unwrap();
        let regret: f64 = played.iter().zip(&targets).zip(&deficits).map(|((t, s), d)| d * (t - s).abs()).sum();
        let sq: f64 = deficits.iter().map(|d| d * d).sum();
        prop_assert!(regret <= ((1.0 + 2.0 * p) * sq).sqrt());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ogd_static_regret_within_constant_bound(
        u in prop::collection::vec(0.5f64..5.0, 2..4),
        targets in prop::collection::vec(0.0f64..6.0, 4..20),
        fair in 0.0f64..2.0,
    ) {
        let w = LossWeights { lambda_track: 1.0, lambda_fair: fair, ..LossWeights::default() };
        let eps = 1e-6;
        let bound = ogd_static_bound(&w, eps, u.len(), u.iter().sum(), targets.len());
        let g_star = w.lambda_track * (u.len() as f64).sqrt() + w.lambda_fair / eps;
        let eta = 2f64.sqrt() * u.iter().sum::<f64>() / (g_star * (targets.len() as f64).sqrt());
        let mut md = VectorMirrorDescent::new(eta, InitRule::Zero).unwrap();
        let state = RoundState::from_capacities(1, 1.0, &u).unwrap();
        let mut own = 0.0;
        let rounds: Vec<SurrogateRound> =
            targets.iter().map(|&t| SurrogateRound { capacities: u.clone(), target: t, epsilon: eps }).collect();
        for &t in &targets {
            let x = md.act(&state, t, &w).unwrap().allocation;
            own += round_loss_surrogate(&x, &u, t, eps, &w).total;
        }
        let best = best_fixed_allocation(&rounds, &w, Burden::Regularized).unwrap();
        prop_assert!(own - best.loss <= bound);
    }

    #[test]
    fn decomposition_holds_across_policies(
        rounds in prop::collection::vec((prop::collection::vec(0.1f64..5.0, 2..5), 0.0f64..1.0, 0.0f64..1.0), 2..12),
        fair in 0.0f64..2.0,
    ) {
        let w = LossWeights { lambda_track: 1.0, lambda_fair: fair, ..LossWeights::default() };
        let kinds = [
            PolicyKind::Queue { score: ScoreSource::Capacity },
            PolicyKind::ProRata,
            PolicyKind::MinMaxIlp,
        ];
        let mut loss = vec![Vec::new(); kinds.len()];
        let mut loss_hat = vec![Vec::new(); kinds.len()];
        let mut b_needed = Vec::new();
        let mut b_hat = Vec::new();
        for (t, (u, fb, fh)) in rounds.iter().enumerate() {
            let total: f64 = u.iter().sum();
            let state = RoundState::from_capacities(t as u64 + 1, total, u).unwrap();
            let (b, bh) = (fb * total, fh * total);
            b_needed.push(b);
            b_hat.push(bh);
            for (k, kind) in kinds.iter().enumerate() {
                let x = adl_core::policies::allocate(kind, &state, bh, &Default::default()).unwrap().allocation;
                loss[k].push(round_loss_surrogate(&x, u, b, 1e-6, &w).total);
                loss_hat[k].push(round_loss_surrogate(&x, u, bh, 1e-6, &w).total);
            }
        }
        for k in 0..kinds.len() {
            let slack = decomposition_gap(&DecompositionInputs {
                policy_loss: &loss[k],
                policy_loss_hat: &loss_hat[k],
                library_loss: &loss,
                library_loss_hat: &loss_hat,
                b_needed: &b_needed,
                b_needed_hat: &b_hat,
                lambda_track: w.lambda_track,
            });
            prop_assert!(slack.unwrap() >= -1e-6);
        }
    }
}
