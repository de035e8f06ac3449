use std::sync::Arc;

use covlm_core::mdpcore::{efficiency_reward, lane_reward, DrivingEnv, EnvConfig, RewardParams};
use covlm_core::simworld::{BundledMap, Control};
use proptest::prelude::*;

proptest! {
    #[test]
    fn reward_terms_are_bounded(speed in 0.0..20.0f64, lateral in -6.0..6.0f64, heading in -3.2..3.2f64, std in 0.0..2.0f64) {
        let p = RewardParams::default();
        let eff = efficiency_reward(speed, &p);
        let lane = lane_reward(lateral, heading, std, &p);
        prop_assert!((0.0..=1.0).contains(&eff));
        prop_assert!((0.0..=1.0).contains(&lane));
        if lateral.abs() >= p.max_distance {
            prop_assert_eq!(lane, 0.0);
        }
    }

    #[test]
    fn env_rewards_stay_in_range(seed in 0u64..1000, throttle in -1.0..1.0f64, steer in -0.3..0.3f64) {
        let map = if seed % 2 == 0 { BundledMap::Seen } else { BundledMap::Unseen };
        let mut env = DrivingEnv::new(Arc::new(map.load()), EnvConfig::default(), seed).unwrap();
        for k in 0..200 {
            let c = Control::new(throttle, steer * ((k as f64) * 0.1).sin());
            let out = env.step(c).unwrap();
            let r = out.reward;
            prop_assert!((-10.0..=2.0).contains(&r.total));
            prop_assert_eq!(r.total, r.collision + r.efficiency + r.lane);
            prop_assert!(r.collision == 0.0 || r.collision == -10.0);
            if out.termination.is_some() {
                prop_assert!(env.step(c).is_err());
                break;
            }
        }
    }
}

#[test]
fn efficiency_peaks_at_target_speed() {
    let p = RewardParams::default();
    assert!((efficiency_reward(25.0 / 3.6, &p) - 1.0).abs() < 1e-12);
    assert!(efficiency_reward(20.0 / 3.6, &p) < 1.0);
    assert!(efficiency_reward(27.0 / 3.6, &p) < 1.0);
    assert_eq!(efficiency_reward(0.0, &p), 0.0);
    assert_eq!(efficiency_reward(28.8 / 3.6, &p), 0.0);
}
