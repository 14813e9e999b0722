//! Property-based tests of the structural invariants over random valid
//! channels.

use arqsched_core::analysis::{check_condition_a, verify_monotone_curves, verify_reward_ordering};
use arqsched_core::bounds::{BoundsReport, ClassWeights};
use arqsched_core::channel::sample::{random_equal_middle_matrix, random_reward, random_valid_matrix, uniform};
use arqsched_core::policy::{
    classify_system, greedy_argmax, optimal_dp, threshold_l, GreedyPolicy, SystemType, ThresholdL,
};
use arqsched_core::{BeliefState, Feedback, JointInfoState, RewardVector, State, TransitionMatrix, User};
use proptest::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

fn instance(seed: u64) -> (TransitionMatrix, RewardVector) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (random_valid_matrix(&mut rng), random_reward(&mut rng))
}

fn beliefs(cap: usize) -> impl Strategy<Value = BeliefState> {
    prop_oneof![
        Just(BeliefState::Steady),
        (0usize..3, 0..=cap).prop_map(|(s, lag)| BeliefState::Observed { origin: State::from_index(s).unwrap(), lag }),
    ]
}

fn times(v: &[f64; 3], m: &[[f64; 3]; 3]) -> [f64; 3] {
    [0, 1, 2].map(|j| v[0] * m[0][j] + v[1] * m[1][j] + v[2] * m[2][j])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn reward_curves_are_ordered_and_monotone(seed in any::<u64>()) {
        let (p, alpha) = instance(seed);
        let ordering = verify_reward_ordering(&p, &alpha, 64);
        prop_assert!(ordering.pass, "{ordering:?}");
        let curves = verify_monotone_curves(&p, &alpha, 64);
        prop_assert!(curves.pass(), "{curves:?}");
    }

    #[test]
    fn powers_compose(seed in any::<u64>(), a in 0usize..=16, b in 0usize..=16) {
        let (p, _) = instance(seed);
        let (ma, mb, mab) = (p.n_step(a), p.n_step(b), p.n_step(a + b));
        for i in 0..3 {
            let row = times(&ma[i], &mb);
            for j in 0..3 {
                prop_assert!((row[j] - mab[i][j]).abs() <= 1e-12);
            }
            prop_assert!((mab[i].iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn advancing_a_belief_multiplies_by_p(seed in any::<u64>(), b in beliefs(63)) {
        let (p, alpha) = instance(seed);
        let next = b.advance(64).materialize(&p);
        let expected = times(&b.materialize(&p), p.matrix());
        for j in 0..3 {
            prop_assert!((next[j] - expected[j]).abs() <= 1e-12);
        }
        let r = b.expected_reward(&p, &alpha);
        prop_assert!(alpha.min() - 1e-12 <= r && r <= alpha.max() + 1e-12);
    }

    #[test]
    fn belief_rewards_follow_origin_order_and_clamp_soundly(seed in any::<u64>(), lag in 0usize..=64) {
        let (p, alpha) = instance(seed);
        let r = State::ALL.map(|origin| BeliefState::Observed { origin, lag }.expected_reward(&p, &alpha));
        prop_assert!(r[0] <= r[1] + 1e-12 && r[1] <= r[2] + 1e-12);
        for origin in State::ALL {
            let at_cap = BeliefState::Observed { origin, lag: 64 }.expected_reward(&p, &alpha);
            prop_assert!((at_cap - p.steady_reward(&alpha)).abs() <= 1e-6);
        }
    }

    #[test]
    fn threshold_brackets_the_crossing(seed in any::<u64>()) {
        let (p, alpha) = instance(seed);
        match threshold_l(&p, &alpha) {
            Ok(ThresholdL::Finite(l)) => {
                let curve = p.reward_curve(&alpha, State::S3, l);
                let target = p.row_reward(State::S2, &alpha);
                prop_assert!(curve[l] <= target);
                if l >= 1 {
                    prop_assert!(curve[l - 1] > target);
                }
            }
            Ok(ThresholdL::Infinite) => {
                prop_assert!((p.row_reward(State::S2, &alpha) - p.steady_reward(&alpha)).abs() <= 1e-12);
            }
            Err(_) => prop_assert_eq!(classify_system(&p, &alpha), SystemType::TypeII),
        }
    }

    #[test]
    fn condition_a_margin_predicts_direction(seed in any::<u64>()) {
        let (p, _) = instance(seed);
        let a = check_condition_a(&p);
        prop_assert!(a.direction_predicted() && a.sufficiency_holds(), "{a:?}");
    }

    #[test]
    fn bounds_are_consistent(seed in any::<u64>()) {
        let (p, alpha) = instance(seed);
        let w = ClassWeights::new(&p);
        prop_assert!((w.total() - 1.0).abs() <= 1e-12);
        let b = BoundsReport::new(&p, &alpha);
        prop_assert!(b.lower <= b.upper + 1e-12);
        prop_assert!(alpha.min() - 1e-12 <= b.lower && b.upper <= alpha.max() + 1e-12);
    }

    #[test]
    fn structured_and_argmax_greedy_agree_along_greedy_paths(seed in any::<u64>()) {
        let (p, alpha) = instance(seed);
        let greedy = GreedyPolicy::new(&p, &alpha, p.mixing_lag().max(1));
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut state = JointInfoState::INITIAL;
        let mut last = None;
        for _ in 0..500 {
            let a = greedy.argmax(&state);
            if let Some(f) = last {
                prop_assert_eq!(greedy.structured(f, &state).action, a.action, "at {}", state);
            }
            let pi = state.belief(a.action).materialize(&p);
            let u = uniform(&mut rng);
            let observed = if u < pi[0] { State::S1 } else if u < pi[0] + pi[1] { State::S2 } else { State::S3 };
            let f = Feedback::from(observed);
            state = state.after(a.action, f, p.mixing_lag().max(1));
            prop_assert!(state.is_consistent());
            last = Some(f);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dp_values_are_monotone_and_restriction_only_lowers_them(seed in any::<u64>(), horizon in 1usize..=5) {
        let (p, alpha) = instance(seed);
        let free = optimal_dp(&p, &alpha, horizon, 16, false).unwrap();
        let restricted = optimal_dp(&p, &alpha, horizon, 16, true).unwrap();
        for (k, s, e) in free.iter() {
            if let Some(v) = free.value(k + 1, s) {
                prop_assert!(e.value <= v + 1e-12);
            }
            if let Some(r) = restricted.value(k, s) {
                prop_assert!(r <= e.value + 1e-12);
            }
            prop_assert!(e.gap() >= -1e-12);
            if k == 1 {
                prop_assert_eq!(e.action, greedy_argmax(s, &p, &alpha).action);
            }
        }
        prop_assert!(restricted.root().value <= free.root().value + 1e-12);
    }

    #[test]
    fn greedy_is_restricted_optimal_under_equal_middle_column(seed in any::<u64>(), horizon in 2usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_equal_middle_matrix(&mut rng);
        let alpha = random_reward(&mut rng);
        let t = optimal_dp(&p, &alpha, horizon, 16, true).unwrap();
        prop_assert!(t.max_gap() <= 1e-12, "gap {}", t.max_gap());
        for (k, s, e) in t.iter() {
            prop_assert!(e.action == e.greedy_action, "k={} {}", k, s);
        }
    }
}

#[test]
fn dp_state_space_stays_on_the_lattice() {
    let (p, alpha) = instance(99);
    let t = optimal_dp(&p, &alpha, 6, 16, false).unwrap();
    for (k, s, _) in t.iter() {
        assert!(s.is_consistent());
        for u in User::BOTH {
            if let Some(lag) = s.belief(u).lag() {
                assert!(lag + k <= 6, "lag {lag} with {k} remaining");
            }
        }
    }
}
