use proptest::prelude::*;
use rmaddpg::env::{self, AgentAction, EnvConfig, Observability, Physical, Verbal};

fn joint_actions() -> impl Strategy<Value = Vec<Vec<(usize, bool)>>> {
    prop::collection::vec(prop::collection::vec((0usize..5, any::<bool>()), 2), 1..120)
}

fn to_actions(raw: &[(usize, bool)]) -> Vec<AgentAction> {
    raw.iter()
        .map(|&(p, c)| AgentAction::new(Physical::ALL[p], if c { Verbal::Communicate } else { Verbal::Silent }))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn budget_never_increases_and_caps_deliveries(seed in any::<u64>(), x in 0u32..40, plan in joint_actions()) {
        let cfg = EnvConfig { budget_messages: x, ..EnvConfig::default() };
        let (mut state, _) = env::reset(&cfg, seed).unwrap();
        let mut delivered = 0u32;
        for raw in plan.iter().take(cfg.episode_length) {
            let acts = to_actions(raw);
            let out = env::step(&state, &acts, &cfg).unwrap();
            prop_assert!(out.state.budget <= state.budget);
            prop_assert!((0.0..=1.0).contains(&out.state.budget));
            for (a, d) in out.attempted.iter().zip(&out.delivered) {
                prop_assert!(!d | a);
            }
            delivered += out.delivered.iter().filter(|&&d| d).count() as u32;
            state = out.state;
        }
        prop_assert!(delivered <= x);
        if x > 0 {
            prop_assert!((state.budget - f64::from(x - delivered) / f64::from(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn positions_stay_in_bounds_and_reward_is_nonpositive(seed in any::<u64>(), plan in joint_actions()) {
        let cfg = EnvConfig::default();
        let (mut state, obs) = env::reset(&cfg, seed).unwrap();
        prop_assert_eq!(obs.len(), 2);
        for raw in plan.iter().take(cfg.episode_length) {
            let out = env::step(&state, &to_actions(raw), &cfg).unwrap();
            for p in &out.state.positions {
                prop_assert!(p[0].abs() <= 1.0 && p[1].abs() <= 1.0);
            }
            prop_assert!(out.reward.reward <= 0.0);
            prop_assert!(out.reward.r_dist >= 0.0 && out.reward.r_diff >= 0.0);
            state = out.state;
        }
    }

    #[test]
    fn partial_messages_are_blank_unless_delivered(seed in any::<u64>(), plan in joint_actions()) {
        let cfg = EnvConfig { budget_messages: 3, ..EnvConfig::default() };
        let (mut state, obs) = env::reset(&cfg, seed).unwrap();
        prop_assert!(obs.iter().all(|o| o.message.is_none()));
        for raw in plan.iter().take(cfg.episode_length) {
            let out = env::step(&state, &to_actions(raw), &cfg).unwrap();
            // Agent i hears agent 1 - i.
            for i in 0..2 {
                let sender = 1 - i;
                match out.observations[i].message {
                    Some(m) => {
                        prop_assert!(out.delivered[sender]);
                        prop_assert_eq!(m, out.state.positions[sender]);
                    }
                    None => prop_assert!(!out.delivered[sender]),
                }
            }
            state = out.state;
        }
    }

    #[test]
    fn full_observability_never_blanks(seed in any::<u64>(), plan in joint_actions()) {
        let cfg = EnvConfig { observability: Observability::Full, budget_messages: 0, ..EnvConfig::default() };
        let (mut state, obs) = env::reset(&cfg, seed).unwrap();
        prop_assert!(obs.iter().all(|o| o.message.is_some()));
        for raw in plan.iter().take(cfg.episode_length) {
            let out = env::step(&state, &to_actions(raw), &cfg).unwrap();
            prop_assert!(out.observations.iter().all(|o| o.message.is_some() && !o.is_blank()));
            state = out.state;
        }
    }

    #[test]
    fn reset_is_a_function_of_the_seed(seed in any::<u64>()) {
        let cfg = EnvConfig::default();
        prop_assert_eq!(env::reset(&cfg, seed).unwrap(), env::reset(&cfg, seed).unwrap());
    }
}

#[test]
fn episode_ends_at_the_horizon() {
    let cfg = EnvConfig { episode_length: 5, ..EnvConfig::default() };
    let (mut state, _) = env::reset(&cfg, 1).unwrap();
    let acts = to_actions(&[(0, false), (0, false)]);
    for t in 1..=5 {
        let out = env::step(&state, &acts, &cfg).unwrap();
        assert_eq!(out.done, t == 5);
        state = out.state;
    }
    assert!(env::step(&state, &acts, &cfg).is_err());
}
