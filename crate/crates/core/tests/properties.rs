#![allow(clippy::needless_range_loop)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;

use cmc_core::estimate::{
    count, covariance_improper, covariance_proper, estimate_kernel, scaled_error_improper, scaled_error_proper,
    stationary_occupation,
};
use cmc_core::inference::gof_test;
use cmc_core::mixing::{
    brute_force_tables, conditional_suffix_laws, eta_bar_brute_force, eta_bar_markov, gamma_triple_sum, GammaCaps,
    Instance,
};
use cmc_core::model::{block_diagonal, expansion_matrix, stack_kernel, IndexMap, RewardModel, TargetPolicy, TransitionModel};
use cmc_core::policy::{make_vanishing, ActionTable, History, LoggingPolicy};
use cmc_core::rl::{covariance_bundle, evaluate, policy_iteration, sensitivities};
use cmc_core::simulate::{simulate, uniform_initial};
use cmc_core::special::chi_square_survival;

fn normalise(raw: Vec<f64>) -> Vec<f64> {
    let s: f64 = raw.iter().sum();
    raw.iter().map(|x| x / s).collect()
}

fn simplex(d: usize, floor: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(floor..1.0f64, d).prop_map(normalise)
}

fn model_strategy(max_d: usize, max_k: usize, floor: f64) -> impl Strategy<Value = TransitionModel> {
    (1..=max_d, 1..=max_k).prop_flat_map(move |(d, k)| {
        prop::collection::vec(prop::collection::vec(simplex(d, floor), d), k)
            .prop_map(move |kernel| TransitionModel::new(d, k, kernel).unwrap())
    })
}

fn table_strategy(d: usize, k: usize, floor: f64) -> impl Strategy<Value = ActionTable> {
    prop::collection::vec(simplex(k, floor), d).prop_map(|rows| ActionTable::new(rows).unwrap())
}

fn model_and_table(max_d: usize, max_k: usize, floor: f64) -> impl Strategy<Value = (TransitionModel, ActionTable)> {
    model_strategy(max_d, max_k, floor).prop_flat_map(move |m| {
        let (d, k) = (m.d(), m.k());
        (Just(m), table_strategy(d, k, floor))
    })
}

#[test]
fn index_maps_round_trip_exhaustively() {
    for d in 1..=6 {
        for k in 1..=6 {
            let map = IndexMap::new(d, k).unwrap();
            for idx in 0..map.triple_count() {
                let (s, l, t) = map.triple0_inverse(idx);
                assert_eq!(map.triple0(s, l, t), idx);
            }
            for idx in 0..map.pair_count() {
                let (s, l) = map.pair0_inverse(idx);
                assert_eq!(map.pair0(s, l), idx);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stacked_kernel_rows_are_kernel_rows(m in model_strategy(5, 4, 0.0)) {
        let stacked = stack_kernel(&m);
        let map = m.index_map();
        for s in 0..m.d() {
            for l in 0..m.k() {
                let r = map.pair0(s, l);
                for t in 0..m.d() {
                    prop_assert_eq!(stacked[(r, t)], m.prob(l, s, t));
                }
                prop_assert!((stacked.row(r).sum() - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn state_chain_under_target_is_stochastic((m, t) in model_and_table(5, 4, 0.0)) {
        let target = TargetPolicy::new(t.rows()).unwrap();
        let chain = block_diagonal(&target) * stack_kernel(&m);
        prop_assert_eq!(chain.shape(), (m.d(), m.d()));
        for r in 0..m.d() {
            prop_assert!((chain.row(r).sum() - 1.0).abs() <= 1e-10);
            prop_assert!(chain.row(r).iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn policy_outputs_are_simplices_and_markov_ignores_history(
        t in table_strategy(3, 3, 0.0),
        i in 0usize..500,
        s in 0usize..3,
        hist in prop::collection::vec((0usize..3, 0usize..3), 0..8),
        beta in 0.5f64..3.0,
    ) {
        let (hs, ha): (Vec<usize>, Vec<usize>) = hist.iter().copied().unzip();
        let mut rs = hs.clone();
        let mut ra = ha.clone();
        rs.reverse();
        ra.reverse();
        let policies = [
            LoggingPolicy::StationaryMarkov(t.clone()),
            make_vanishing(t.clone(), (1, 2), beta).unwrap(),
            cmc_core::io::parse_json(r#"{"kind":"repeat_previous","k":3,"q":0.4}"#).unwrap(),
            cmc_core::io::parse_json(r#"{"kind":"deterministic_cycle","k":3}"#).unwrap(),
        ];
        for p in &policies {
            let law = p.action_distribution(i, s, History::new(&hs, &ha)).unwrap();
            prop_assert!((law.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(law.iter().all(|&x| (0.0..=1.0).contains(&x)));
            if p.is_markov() {
                let other = p.action_distribution(i, s, History::new(&rs, &ra)).unwrap();
                prop_assert_eq!(law, other);
            }
        }
    }

    #[test]
    fn counts_and_estimates_are_consistent((m, t) in model_and_table(4, 3, 0.0), n in 2usize..400, seed in any::<u64>()) {
        let traj = simulate(&m, &LoggingPolicy::StationaryMarkov(t), n, &uniform_initial(m.d()), seed).unwrap();
        let c = count(&traj, m.d(), m.k()).unwrap();
        let mut total = 0;
        for s in 0..m.d() {
            for l in 0..m.k() {
                prop_assert_eq!(c.transition_row(s, l).iter().sum::<u64>(), c.visits(s, l));
                total += c.visits(s, l);
            }
        }
        prop_assert_eq!(total as usize, n);
        let est = estimate_kernel(&c);
        prop_assert!((est.occupation().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        for s in 0..m.d() {
            for l in 0..m.k() {
                match est.row(l, s) {
                    Some(row) => prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12),
                    None => prop_assert_eq!(c.visits(s, l), 0),
                }
            }
        }
        if est.all_defined() {
            let proper = scaled_error_proper(&est, &m).unwrap().dense();
            let improper = scaled_error_improper(&est, &m, n).unwrap().dense();
            let map = m.index_map();
            for s in 0..m.d() {
                for l in 0..m.k() {
                    let block: f64 = (0..m.d()).map(|u| proper[map.triple0(s, l, u)]).sum();
                    prop_assert!(block.abs() <= 1e-9);
                    let scale = (n as f64 / c.visits(s, l) as f64).sqrt();
                    for u in 0..m.d() {
                        let idx = map.triple0(s, l, u);
                        prop_assert!((improper[idx] - proper[idx] * scale).abs() <= 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn lambda_blocks_are_multinomial_covariances(m in model_strategy(4, 3, 0.0)) {
        let lambda = covariance_proper(&m);
        let eig = SymmetricEigen::new(lambda.clone());
        prop_assert!(eig.eigenvalues.iter().all(|&e| e >= -1e-12));
        let ones = DVector::from_element(lambda.nrows(), 1.0);
        prop_assert!((&lambda * ones).amax() <= 1e-12);
        let map = m.index_map();
        for a in 0..lambda.nrows() {
            for b in 0..lambda.ncols() {
                let (s, l, t) = map.triple0_inverse(a);
                let (s2, l2, t2) = map.triple0_inverse(b);
                let expected = if (s, l) == (s2, l2) {
                    let row = m.row(l, s);
                    (if t == t2 { row[t] } else { 0.0 }) - row[t] * row[t2]
                } else {
                    0.0
                };
                prop_assert_eq!(lambda[(a, b)], expected);
            }
        }
    }

    #[test]
    fn gof_is_internally_consistent((m, t) in model_and_table(3, 2, 0.05), n in 50usize..2000, seed in any::<u64>()) {
        let traj = simulate(&m, &LoggingPolicy::StationaryMarkov(t), n, &uniform_initial(m.d()), seed).unwrap();
        let c = count(&traj, m.d(), m.k()).unwrap();
        let g = gof_test(&c, &m, 0.05).unwrap();
        let stat: f64 = g.per_pair.iter().map(|p| p.stat).sum();
        let df: usize = g.per_pair.iter().map(|p| p.df).sum();
        prop_assert!((g.pooled.stat - stat).abs() <= 1e-9 * stat.max(1.0));
        prop_assert_eq!(g.pooled.df, df);
        prop_assert!((0.0..=1.0).contains(&g.pooled.p));
        prop_assert!(g.per_pair.iter().all(|p| (0.0..=1.0).contains(&p.p)));
    }

    #[test]
    fn chi_square_survival_decreases(df in 1u32..50, a in 0.0f64..200.0, b in 0.0f64..200.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (p_lo, p_hi) = (chi_square_survival(lo, df as f64).unwrap(), chi_square_survival(hi, df as f64).unwrap());
        prop_assert!(p_hi <= p_lo + 1e-15);
    }

    #[test]
    fn advantage_covariance_two_ways((m, t) in model_and_table(4, 3, 0.02), alpha in 0.1f64..0.95, g in prop::collection::vec(-2.0f64..2.0, 12)) {
        let (d, k) = (m.d(), m.k());
        let target = TargetPolicy::new(t.rows()).unwrap();
        let gt: Vec<Vec<f64>> = (0..d).map(|s| (0..k).map(|l| g[(s * k + l) % g.len()]).collect()).collect();
        let rewards = RewardModel::state_action(gt, alpha).unwrap();
        let values = evaluate(&m, &target, &rewards).unwrap();
        let p = vec![1.0 / (d * k) as f64; d * k];
        let lambda_bar = covariance_improper(&m, &p).unwrap();
        let bundle = covariance_bundle(&m, &target, &values.v, &values.q, &lambda_bar, &p, alpha).unwrap();
        let ops = sensitivities(&m, &target, &values.v, &values.q, alpha).unwrap();
        let kx = expansion_matrix(d, k);
        let cross = &ops.b_q * &lambda_bar * ops.b_v.transpose() * kx.transpose();
        let parts = &bundle.sigma_q - &cross - cross.transpose() + &kx * &bundle.sigma_v * kx.transpose();
        let scale = bundle.sigma_a.amax().max(1.0);
        prop_assert!((&bundle.sigma_a - parts).amax() <= 1e-9 * scale);
        let root = DMatrix::from_fn(d * k, d * k, |a, b| if a == b { p[a].sqrt() } else { 0.0 });
        prop_assert!((&bundle.lambda_q - &root * &bundle.sigma_q * &root).amax() <= 1e-12 * scale);
    }

    #[test]
    fn policy_iteration_ignores_affine_reward_changes(
        m in model_strategy(4, 4, 0.0),
        alpha in 0.1f64..0.95,
        g in prop::collection::vec(-1.0f64..1.0, 16),
        a in 0.1f64..10.0,
        b in -5.0f64..5.0,
    ) {
        let (d, k) = (m.d(), m.k());
        let gt: Vec<Vec<f64>> = (0..d).map(|s| (0..k).map(|l| g[s * 4 + l]).collect()).collect();
        let rewards = RewardModel::state_action(gt, alpha).unwrap();
        let base = policy_iteration(&m, &rewards, alpha).unwrap();
        let moved = policy_iteration(&m, &rewards.affine(a, b), alpha).unwrap();
        // genuine ties may resolve differently after rescaling
        let separated = base.separation.as_ref().is_none_or(|s| s.margin > 1e-6);
        if separated {
            prop_assert_eq!(base.actions, moved.actions);
        }
    }
}

fn small_instance() -> impl Strategy<Value = (TransitionModel, ActionTable)> {
    (1usize..=2, 1usize..=2).prop_flat_map(|(d, k)| {
        (
            prop::collection::vec(prop::collection::vec(simplex(d, 0.0), d), k)
                .prop_map(move |kernel| TransitionModel::new(d, k, kernel).unwrap()),
            table_strategy(d, k, 0.0),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn markov_eta_bar_routes_agree((m, t) in small_instance(), n in 2usize..=6) {
        let policy = LoggingPolicy::StationaryMarkov(t);
        let inst = Instance::new(&m, &policy, uniform_initial(m.d()), n).unwrap();
        let brute = brute_force_tables(&inst).unwrap();
        let matrix = eta_bar_markov(&inst).unwrap();
        for i in 1..=n {
            for j in i + 1..=n {
                prop_assert!((brute.eta_bar[i][j] - matrix[i][j]).abs() <= 1e-12);
                prop_assert!((0.0..=1.0 + 1e-12).contains(&brute.eta_bar[i][j]));
                prop_assert!((0.0..=1.0 + 1e-12).contains(&brute.theta_bar[i][j]));
            }
        }
    }

    #[test]
    fn eta_bar_is_the_best_event((m, t) in small_instance()) {
        let n = 4;
        let policy = LoggingPolicy::StationaryMarkov(t);
        let inst = Instance::new(&m, &policy, uniform_initial(m.d()), n).unwrap();
        for i in 1..n {
            for j in i + 1..=n {
                let eta = eta_bar_brute_force(&inst, i, j).unwrap();
                let mut positive_part: f64 = 0.0;
                let mut singleton: f64 = 0.0;
                for group in conditional_suffix_laws(&inst, i, j).unwrap() {
                    for a in &group {
                        for b in &group {
                            let mut plus = 0.0;
                            for (x, y) in a.iter().zip(b) {
                                singleton = singleton.max((x - y).abs());
                                plus += (x - y).max(0.0);
                            }
                            positive_part = positive_part.max(plus);
                        }
                    }
                }
                prop_assert!(singleton <= eta + 1e-12);
                prop_assert!((positive_part - eta).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn gamma_sum_grows_with_caps(q in 0.1f64..0.9, i_max in 1usize..3, j_max in 1usize..3, p_max in 3usize..6) {
        let m = cmc_core::reference::inhomogeneous_model();
        let policy: LoggingPolicy =
            cmc_core::io::parse_json(&format!(r#"{{"kind":"repeat_first","k":2,"q":{q}}}"#)).unwrap();
        let init = uniform_initial(2);
        let base = gamma_triple_sum(&m, &policy, &init, GammaCaps { i_max, j_max, p_max }).unwrap().sup;
        for caps in [
            GammaCaps { i_max: i_max + 1, j_max, p_max },
            GammaCaps { i_max, j_max: j_max + 1, p_max },
            GammaCaps { i_max, j_max, p_max: p_max + 1 },
        ] {
            let bigger = gamma_triple_sum(&m, &policy, &init, caps).unwrap().sup;
            prop_assert!(bigger >= base - 1e-15);
        }
    }
}

#[test]
fn simulation_is_a_function_of_its_inputs() {
    let m = cmc_core::reference::reference_model();
    let p = cmc_core::reference::reference_policy();
    let init = uniform_initial(3);
    let a = simulate(&m, &p, 1000, &init, 99).unwrap();
    let b = simulate(&m, &p, 1000, &init, 99).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, simulate(&m, &p, 1000, &init, 100).unwrap());
}

#[test]
fn vanishing_probabilities_are_summable() {
    let base = ActionTable::uniform(2, 2).unwrap();
    let policy = make_vanishing(base, (0, 1), 2.0).unwrap();
    let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
    let mut partial = 0.0;
    for i in 0..20_000 {
        let p = policy.action_distribution(i, 0, History::empty()).unwrap()[1];
        assert!((p - 1.0 / ((i + 1) as f64).powi(2)).abs() <= 1e-15);
        let next = partial + p;
        assert!(next >= partial && next <= zeta2);
        partial = next;
    }
    assert!(zeta2 - partial < 1e-4);
}

#[test]
fn stationary_occupation_matches_long_run_frequencies() {
    let m = cmc_core::reference::reference_model();
    let LoggingPolicy::StationaryMarkov(t) = cmc_core::reference::reference_policy() else { unreachable!() };
    let p = stationary_occupation(&m, &t).unwrap();
    let traj = simulate(&m, &LoggingPolicy::StationaryMarkov(t), 400_000, &uniform_initial(3), 5).unwrap();
    let est = estimate_kernel(&count(&traj, 3, 2).unwrap());
    for (a, b) in p.iter().zip(est.occupation()) {
        assert!((a - b).abs() < 0.005, "{a} vs {b}");
    }
}
