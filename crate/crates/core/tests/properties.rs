use proptest::prelude::*;
use squarecb::hilbert::{hilbert_moments, round_certificate};
use squarecb::linalg::{norm2, SquareMatrix};
use squarecb::minimax::{per_round_objective, PerRoundInstance};
use squarecb::oracle::{
    aggregating_substitution, Action, Context, OgdOracle, OracleExample, RegressionOracle,
};
use squarecb::squarecb::{inverse_gap_distribution, ExplorationParams, ScoreVector};

fn scores(k: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    k.prop_flat_map(|k| prop::collection::vec(0.0f64..=1.0, k))
}

fn ball_vec(d: usize) -> impl Strategy<Value = Vec<f64>> {
    (prop::collection::vec(-1.0f64..1.0, d), 0.0f64..=1.0).prop_map(|(v, r)| {
        let n = norm2(&v).max(1e-12);
        v.iter().map(|x| x * r / n).collect()
    })
}

proptest! {
    #[test]
    fn distribution_is_valid(y in scores(2..12), gamma in 0.0f64..1e4, extra in 0.0f64..3.0) {
        let k = y.len();
        let mu = (k as f64 - 1.0) + extra;
        let p = inverse_gap_distribution(&ScoreVector::new(y.clone()).unwrap(),
            &ExplorationParams::with_mu(k, gamma, mu).unwrap()).unwrap();
        let sum: f64 = p.probs.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        prop_assert!(p.probs.iter().all(|&q| q >= 0.0));
        let b = p.greedy_arm;
        prop_assert!(y.iter().all(|&v| v >= y[b]));
        prop_assert!(y[..b].iter().all(|&v| v > y[b]));
        for a in 0..k {
            prop_assert!(p.probs[b] >= p.probs[a] - 1e-15);
        }
    }

    #[test]
    fn larger_gap_means_less_mass(y in scores(2..10), gamma in 0.1f64..1e3) {
        let k = y.len();
        let p = inverse_gap_distribution(&ScoreVector::new(y.clone()).unwrap(),
            &ExplorationParams::new(k, gamma).unwrap()).unwrap();
        let b = p.greedy_arm;
        for a in 0..k {
            for c in 0..k {
                if a != b && c != b && y[a] < y[c] {
                    prop_assert!(p.probs[a] >= p.probs[c]);
                }
            }
        }
    }

    #[test]
    fn shift_invariant(y in scores(2..10), gamma in 0.1f64..1e3, shift in -0.5f64..0.5) {
        let k = y.len();
        let params = ExplorationParams::new(k, gamma).unwrap();
        let shifted: Vec<f64> = y.iter().map(|v| v + shift).collect();
        let p = inverse_gap_distribution(&ScoreVector::new(y).unwrap(), &params).unwrap();
        let q = inverse_gap_distribution(&ScoreVector::from_raw(shifted.clone()).unwrap().0, &params);
        // Shifted scores may leave [0, 1]; compare only when no clipping occurred.
        if shifted.iter().all(|v| (0.0..=1.0).contains(v)) {
            let q = q.unwrap();
            for (a, b) in p.probs.iter().zip(&q.probs) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn per_round_certificate(y in scores(2..10), f in prop::collection::vec(0.0f64..=1.0, 10),
                             gamma in 1.0f64..1e3, extra in 0.0f64..2.0) {
        let k = y.len();
        let fstar = f[..k].to_vec();
        let astar = fstar.iter().enumerate()
            .fold((0, f64::INFINITY), |a, (i, &v)| if v < a.1 { (i, v) } else { a }).0;
        let mu = k as f64 * (1.0 + extra);
        let inst = PerRoundInstance { yhat: y, fstar, astar, gamma, mu };
        let p = inst.squarecb_distribution().unwrap();
        prop_assert!(per_round_objective(&inst, &p) <= 2.0 * k as f64 / gamma + 1e-9);
    }

    #[test]
    fn objective_is_affine_in_p(y in scores(3..4), f in prop::collection::vec(0.0f64..=1.0, 3),
                                gamma in 1.0f64..100.0, t in 0.0f64..=1.0) {
        let inst = PerRoundInstance { yhat: y, fstar: f, astar: 0, gamma, mu: 3.0 };
        let p = [0.2, 0.3, 0.5];
        let q = [0.6, 0.1, 0.3];
        let mix: Vec<f64> = p.iter().zip(&q).map(|(a, b)| t * a + (1.0 - t) * b).collect();
        let lhs = per_round_objective(&inst, &mix);
        let rhs = t * per_round_objective(&inst, &p) + (1.0 - t) * per_round_objective(&inst, &q);
        prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + rhs.abs()));
    }

    #[test]
    fn substitution_dominates_mixture(fs in prop::collection::vec((0.0f64..=1.0, 0.01f64..1.0), 1..8),
                                      y in 0.0f64..=1.0) {
        let total: f64 = fs.iter().map(|p| p.1).sum();
        let mix = |y: f64| -2.0 * fs.iter().map(|(f, w)| w / total * (-(f - y) * (f - y) / 2.0).exp()).sum::<f64>().ln();
        let yhat = aggregating_substitution(mix(0.0), mix(1.0)).unwrap();
        prop_assert!((0.0..=1.0).contains(&yhat));
        prop_assert!((yhat - y) * (yhat - y) <= mix(y) + 1e-12);
    }

    #[test]
    fn ogd_stays_in_ball(xs in prop::collection::vec((ball_vec(3), 0.0f64..=1.0), 1..60)) {
        let mut o = OgdOracle::<f64>::new(3, Some(xs.len())).unwrap();
        for (x, y) in xs {
            let ctx = Context::with_features(0, vec![x]);
            o.update(&OracleExample::new(&ctx, &Action::Arm(0), y)).unwrap();
            prop_assert!(norm2(o.theta()) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn moment_identities(y in (1usize..6).prop_flat_map(ball_vec), beta in 1e-3f64..=0.5) {
        let d = y.len();
        let m = hilbert_moments(&y, beta);
        let n = norm2(&y);
        let alpha = if n == 0.0 { 0.5 } else { (beta / n).min(0.5) };
        // Trace of Σ is (1 - α) + α.
        prop_assert!((m.second_moment.trace() - 1.0).abs() < 1e-12);
        prop_assert!(m.second_moment.min_eigenvalue() >= alpha / d as f64 - 1e-12);
        prop_assert!(norm2(&m.mean) <= 1.0 - alpha + 1e-12);
    }

    #[test]
    fn hilbert_certificate(y in (1usize..6).prop_flat_map(|d| (ball_vec(d), ball_vec(d))), beta in 1e-3f64..=0.5) {
        let (lhs, rhs) = round_certificate(&y.0, &y.1, beta);
        prop_assert!(lhs <= rhs + 1e-9);
    }

    #[test]
    fn sherman_morrison_matches_inverse(x in ball_vec(3), w in 0.1f64..2.0) {
        let mut inv = SquareMatrix::<f64>::scaled_identity(3, 1.0 / w);
        inv.sherman_morrison_add(&x);
        let mut gram = SquareMatrix::<f64>::scaled_identity(3, w);
        gram.add_outer(&x, 1.0);
        for i in 0..3 {
            let mut e = vec![0.0; 3];
            e[i] = 1.0;
            let col = inv.mul_vec(&gram.mul_vec(&e));
            for j in 0..3 {
                prop_assert!((col[j] - e[j]).abs() < 1e-9);
            }
        }
    }
}
