#![allow(dead_code)]

use rand::Rng;
use tagging_game::design::{choose_design, DesignKnobs, MechanismDesign};
use tagging_game::model::{DesignTarget, SystemParams};

pub fn c0_params() -> SystemParams {
    SystemParams {
        alpha_r: 0.27,
        alpha_f: 0.30,
        mu_a: 0.1,
        p: 0.3,
        a: 2.0,
        b: 1.0,
        c: 1.0,
        cost_e: 1.0,
        q_p: 1.0,
        q_np: 0.5,
    }
}

pub fn c0_target() -> DesignTarget {
    DesignTarget {
        theta: 0.75,
        delta: 0.28,
    }
}

pub fn c0_design() -> MechanismDesign {
    choose_design(&c0_target(), &c0_params(), &DesignKnobs::default()).unwrap()
}

pub fn rel_close(x: f64, y: f64, tol: f64) -> bool {
    (x - y).abs() <= tol * y.abs()
}

/// Parameters and target satisfying every validation constraint.
pub fn random_valid<R: Rng>(rng: &mut R) -> (SystemParams, DesignTarget) {
    let alpha_r = rng.random_range(0.05..0.6);
    let alpha_f = alpha_r + (0.95 - alpha_r) * rng.random_range(0.01..0.99);
    let theta = alpha_f + (1.0 - alpha_f) * rng.random_range(0.005..0.995);
    let delta = alpha_r + (theta - alpha_r) * rng.random_range(0.005..0.995);
    let params = SystemParams {
        alpha_r,
        alpha_f,
        mu_a: rng.random_range(0.0..0.5),
        p: rng.random_range(0.01..0.99),
        a: rng.random_range(0.5..4.0),
        b: rng.random_range(0.5..3.0),
        c: rng.random_range(0.2..3.0),
        cost_e: rng.random_range(0.1..3.0),
        q_p: 1.0,
        q_np: rng.random_range(0.0..1.0),
    };
    (params, DesignTarget { theta, delta })
}
