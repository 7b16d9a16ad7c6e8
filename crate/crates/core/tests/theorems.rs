//! Equilibrium properties over random valid configurations.

mod common;

use common::random_valid;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tagging_game::design::{choose_design, DesignKnobs, MechanismDesign};
use tagging_game::equilibrium::{is_nash, ne_set, utilities, x_eta, Classification, UTILITY_TOL};
use tagging_game::model::{
    participant_fractions, success_thresholds, DesignTarget, PopulationProfile, SystemParams,
};

fn designed(seed: u64) -> Option<(SystemParams, DesignTarget, MechanismDesign)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (p, t) = random_valid(&mut rng);
    choose_design(&t, &p, &DesignKnobs::default())
        .ok()
        .map(|d| (p, t, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(3_000))]

    #[test]
    fn designed_profile_is_a_strict_participation_equilibrium(seed in any::<u64>()) {
        let Some((p, _t, d)) = designed(seed) else { return Ok(()); };
        let rep = ne_set(&d, &p).unwrap();
        let main = rep.ne_list[0];
        prop_assert_eq!(main.classification, Classification::Ai);
        prop_assert_eq!(main.success_prob, 1.0);
        let u = main.utilities;
        prop_assert!((u[1] - u[2]).abs() <= UTILITY_TOL);
        prop_assert!(u[1] > u[0] && u[2] > u[0]);
        prop_assert!(rep.x_eta > d.eta);
    }

    #[test]
    fn reported_equilibria_are_certified(seed in any::<u64>()) {
        let Some((p, t, d)) = designed(seed) else { return Ok(()); };
        let rep = ne_set(&d, &p).unwrap();
        prop_assert_eq!(rep.second_ne_exists, rep.ne_list.len() == 2);
        prop_assert_eq!(rep.degradation_p.is_some(), rep.second_ne_exists);
        for e in &rep.ne_list {
            prop_assert!(is_nash(&e.profile, &p, &d).unwrap());
            let u = e.utilities;
            let best = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for (k, m) in e.profile.as_array().iter().enumerate() {
                if *m > 0.0 {
                    prop_assert!(best - u[k] <= UTILITY_TOL);
                }
            }
            let fr = participant_fractions(&e.profile, p.mu_a).unwrap();
            let (ta, da) = success_thresholds(t.theta, t.delta, &fr);
            let ai = e.attractors.0 >= ta && e.attractors.1 <= da;
            prop_assert_eq!(ai, e.classification == Classification::Ai);
        }
        if let Some(second) = rep.ne_list.get(1) {
            prop_assert_eq!(second.classification, Classification::NonAi);
            prop_assert!((second.success_prob - (1.0 - p.p)).abs() < 1e-12);
            prop_assert!(rep.degradation_p.unwrap() > 0.0);
        }
    }

    #[test]
    fn degradation_bounds(seed in any::<u64>()) {
        let Some((p, t, d)) = designed(seed) else { return Ok(()); };
        let rep = ne_set(&d, &p).unwrap();
        let Some(second) = rep.ne_list.get(1) else { return Ok(()); };
        let (bf, br) = second.attractors;
        let (x, _) = x_eta(&d, &p);
        let gain = p.capacity_gain();
        let x_f = (1.0 - p.mu_a - 1.0 / (d.cw_alpha_r * gain)) / (1.0 - p.alpha_f);
        prop_assert!(br <= t.delta * (1.0 - p.mu_a) + 1e-12);
        if x <= x_f {
            prop_assert!(bf >= 1.0 / (d.cw_alpha_r * gain) - 1e-12);
        } else {
            prop_assert!(bf >= p.alpha_f * (1.0 - p.mu_a) - 1e-12);
        }
    }

    #[test]
    fn abstaining_is_never_an_equilibrium(seed in any::<u64>(), s in 0.0f64..1.0, r in 0.001f64..1.0, f in 0.0f64..1.0) {
        let Some((p, _t, d)) = designed(seed) else { return Ok(()); };
        prop_assume!(p.q_p > p.q_np);
        let mass = 1.0 - p.mu_a;
        let mu0 = r * mass;
        let rest = mass - mu0;
        let mu = PopulationProfile { mu0, mu1: s * f * rest, mu2: (1.0 - s * f) * rest };
        prop_assert!(!is_nash(&mu, &p, &d).unwrap());
    }

    #[test]
    fn too_few_direct_taggers_or_all_direct_is_not_an_equilibrium(seed in any::<u64>(), s in 0.0f64..1.0) {
        let Some((p, _t, d)) = designed(seed) else { return Ok(()); };
        let x = s * d.eta;
        let mu = PopulationProfile::on_participation_line(x, p.mu_a);
        prop_assert!(!is_nash(&mu, &p, &d).unwrap(), "x = {}", x);
        let all = PopulationProfile::on_participation_line(1.0 - p.mu_a, p.mu_a);
        let u = utilities(&all, &p, &d).unwrap();
        prop_assert!(u[2] > u[1] + UTILITY_TOL || u[0] > u[1]);
    }
}
