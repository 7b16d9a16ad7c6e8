//! Limit of the fake-tag fraction for a fixed population.
//!
//! With the polynomial response and the matching warning, a warning reader
//! tags fake with probability `min(m_u beta, 1)`, so the drift
//!
//! ```text
//! g_u(beta) = alpha_u eta + (1 - eta - eta_a) min(m_u beta, 1) - beta
//! ```
//!
//! is piecewise linear with a kink at `beta = 1/m_u`. Below the kink it reads
//! `alpha_u eta - rho_u beta`; above it `rho_bar_u - beta`, where
//!
//! ```text
//! rho_bar_u = alpha_u eta + 1 - eta - eta_a
//! rho_u     = 1 - (1 - eta - eta_a) m_u
//! ```
//!
//! The zero of `g_u` is available in closed form, the ODE `beta' = g_u(beta)`
//! is solved exactly (one exponential relaxation per branch), and a bisection
//! on the fixed-point equation evaluated through the response and warning
//! maps serves as an independent check.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    effective_slope, response, warning_level, ModelError, ParticipantFractions, PostType,
    SystemParams,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AttractorError {
    #[error("fixed-point bisection found no sign change: g(0) = {at_zero}, g(1) = {at_one}")]
    NoRoot { at_zero: f64, at_one: f64 },
    #[error("bisection tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Which branch of the response holds at the attractor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Warning readers tag fake with probability one.
    Saturated,
    /// Warning readers respond linearly.
    Interior,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttractorResult {
    pub beta_star: f64,
    pub regime: Regime,
    pub rho_bar: f64,
    pub rho: f64,
}

/// The piecewise-linear drift of one post type under one population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drift {
    /// `alpha_u eta`: fake tags contributed by direct taggers.
    pub inflow: f64,
    /// `1 - eta - eta_a`: share of warning readers.
    pub warned: f64,
    /// `m_u`: slope of the response in `beta` below saturation.
    pub slope: f64,
}

impl Drift {
    pub fn new(u: PostType, fr: &ParticipantFractions, params: &SystemParams, w: f64) -> Self {
        Drift {
            inflow: params.capacity(u) * fr.eta,
            warned: fr.warned(),
            slope: effective_slope(u, params, w),
        }
    }

    pub fn rho_bar(&self) -> f64 {
        self.inflow + self.warned
    }

    pub fn rho(&self) -> f64 {
        1.0 - self.warned * self.slope
    }

    /// `beta` at which warning readers saturate.
    pub fn kink(&self) -> f64 {
        1.0 / self.slope
    }

    pub fn eval(&self, beta: f64) -> f64 {
        self.inflow + self.warned * (self.slope * beta).min(1.0) - beta
    }

    fn saturated_at(&self, beta: f64) -> bool {
        self.slope * beta >= 1.0
    }

    pub fn attractor(&self) -> AttractorResult {
        let rho_bar = self.rho_bar();
        let rho = self.rho();
        // rho_bar * m >= 1 is the same test as rho_bar >= 1/m without the division.
        if rho <= 0.0 || rho_bar * self.slope >= 1.0 {
            AttractorResult {
                beta_star: rho_bar,
                regime: Regime::Saturated,
                rho_bar,
                rho,
            }
        } else {
            AttractorResult {
                beta_star: self.inflow / rho,
                regime: Regime::Interior,
                rho_bar,
                rho,
            }
        }
    }

    /// Exact solution of `beta' = g(beta)` from `beta0` at time `t`.
    pub fn solve(&self, beta0: f64, t: f64) -> f64 {
        let kink = self.kink();
        if self.saturated_at(beta0) {
            let target = self.rho_bar();
            let leaves = target * self.slope < 1.0;
            if !leaves {
                return relax(target, beta0, 1.0, t);
            }
            // Decays toward rho_bar < kink and crosses the kink at tau.
            let tau = ((beta0 - target) / (kink - target)).ln().max(0.0);
            if t <= tau {
                relax(target, beta0, 1.0, t)
            } else {
                self.solve_interior(kink, t - tau, false)
            }
        } else {
            self.solve_interior(beta0, t, true)
        }
    }

    /// Below the kink: `beta' = inflow - rho beta`, possibly reaching the
    /// kink and continuing on the saturated branch.
    fn solve_interior(&self, beta0: f64, t: f64, may_cross: bool) -> f64 {
        let kink = self.kink();
        let rho = self.rho();
        let tau = if !may_cross {
            None
        } else if rho > 0.0 {
            let fixed = self.inflow / rho;
            (fixed > kink).then(|| ((fixed - beta0) / (fixed - kink)).ln() / rho)
        } else if rho < 0.0 {
            let fixed = self.inflow / rho;
            (beta0 > fixed).then(|| ((kink - fixed) / (beta0 - fixed)).ln() / (-rho))
        } else {
            (self.inflow > 0.0).then(|| (kink - beta0) / self.inflow)
        };

        match tau {
            Some(tau) if t > tau => relax(self.rho_bar(), kink, 1.0, t - tau),
            _ => {
                if rho == 0.0 {
                    beta0 + self.inflow * t
                } else {
                    let fixed = self.inflow / rho;
                    relax(fixed, beta0, rho, t)
                }
            }
        }
    }
}

/// `target + e^{-rate t} (start - target)`.
fn relax(target: f64, start: f64, rate: f64, t: f64) -> f64 {
    target + (-rate * t).exp() * (start - target)
}

/// Drift `g_u(beta)` of the tagging ODE.
pub fn ode_rhs(
    u: PostType,
    beta: f64,
    fr: &ParticipantFractions,
    params: &SystemParams,
    w: f64,
) -> f64 {
    Drift::new(u, fr, params, w).eval(beta)
}

pub fn attractor_closed_form(
    u: PostType,
    fr: &ParticipantFractions,
    params: &SystemParams,
    w: f64,
) -> AttractorResult {
    Drift::new(u, fr, params, w).attractor()
}

/// Fixed point of `beta = alpha_u eta + (1 - eta - eta_a) r(alpha_u, omega(beta))`
/// by bisection, evaluating the response through the warning map rather than
/// through the closed-form slope.
pub fn attractor_bisection(
    u: PostType,
    fr: &ParticipantFractions,
    params: &SystemParams,
    w: f64,
    tol: f64,
) -> Result<f64, AttractorError> {
    if !(tol > 0.0) {
        return Err(AttractorError::BadTolerance(tol));
    }
    let alpha = params.capacity(u);
    let warned = fr.warned();
    let excess = |beta: f64| -> Result<f64, ModelError> {
        let omega = warning_level(beta, w, params.a, params.b, params.alpha_r)?;
        let r = response(alpha, omega, params.a, params.b, params.c)?;
        Ok(beta - alpha * fr.eta - warned * r)
    };

    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let f_lo = excess(lo)?;
    let f_hi = excess(hi)?;
    if f_lo >= 0.0 && f_lo.abs() < tol {
        return Ok(lo);
    }
    if f_hi <= 0.0 && f_hi.abs() < tol {
        return Ok(hi);
    }
    if f_lo > 0.0 || f_hi < 0.0 {
        return Err(AttractorError::NoRoot {
            at_zero: -f_lo,
            at_one: -f_hi,
        });
    }
    // excess is negative left of the root and positive right of it, even when
    // it first dips (rho < 0), so the sign alone steers the bisection.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f_mid = excess(mid)?;
        if f_mid.abs() < tol && hi - lo < tol {
            return Ok(mid);
        }
        if f_mid < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * 4.0 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Exact trajectory of the tagging ODE sampled on `t_grid`.
pub fn ode_trajectory(
    u: PostType,
    beta0: f64,
    fr: &ParticipantFractions,
    params: &SystemParams,
    w: f64,
    t_grid: &[f64],
) -> Vec<(f64, f64)> {
    let drift = Drift::new(u, fr, params, w);
    t_grid.iter().map(|&t| (t, drift.solve(beta0, t))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const C0_CW_ALPHA_R: f64 = 1.1263940;
    const C0_ETA: f64 = 0.2540343;

    fn c0_params() -> SystemParams {
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

    fn c0_w() -> f64 {
        C0_CW_ALPHA_R / 0.27
    }

    fn c0_fr() -> ParticipantFractions {
        ParticipantFractions {
            eta: C0_ETA,
            eta_a: 0.1,
        }
    }

    /// Classical RK4 with a fixed step, used only to cross-check the exact
    /// piecewise solution.
    fn rk4(drift: &Drift, beta0: f64, t_end: f64, steps: usize) -> f64 {
        let h = t_end / steps as f64;
        let mut b = beta0;
        for _ in 0..steps {
            let k1 = drift.eval(b);
            let k2 = drift.eval(b + 0.5 * h * k1);
            let k3 = drift.eval(b + 0.5 * h * k2);
            let k4 = drift.eval(b + h * k3);
            b += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        b
    }

    #[test]
    fn c0_attractors() {
        let params = c0_params();
        let f = attractor_closed_form(PostType::Fake, &c0_fr(), &params, c0_w());
        assert_eq!(f.regime, Regime::Saturated);
        assert!((f.beta_star - 0.7221760).abs() < 1e-7, "{}", f.beta_star);

        let r = attractor_closed_form(PostType::Real, &c0_fr(), &params, c0_w());
        assert_eq!(r.regime, Regime::Interior);
        assert!((r.rho - 0.2723882).abs() < 1e-7, "{}", r.rho);
        assert!((r.beta_star - 0.2518072).abs() < 1e-7, "{}", r.beta_star);

        for u in PostType::ALL {
            let closed = attractor_closed_form(u, &c0_fr(), &params, c0_w()).beta_star;
            let bis = attractor_bisection(u, &c0_fr(), &params, c0_w(), 1e-12).unwrap();
            assert!((closed - bis).abs() < 1e-9);
            assert!(ode_rhs(u, closed, &c0_fr(), &params, c0_w()).abs() < 1e-15);
        }
    }

    #[test]
    fn all_direct_taggers() {
        let params = c0_params();
        let fr = ParticipantFractions {
            eta: 0.9,
            eta_a: 0.1,
        };
        let r = attractor_closed_form(PostType::Real, &fr, &params, c0_w());
        assert!((r.beta_star - 0.243).abs() < 1e-15);
        let f = attractor_closed_form(PostType::Fake, &fr, &params, c0_w());
        assert!((f.beta_star - 0.27).abs() < 1e-15);
    }

    #[test]
    fn drift_examples() {
        let params = c0_params();
        let fr = ParticipantFractions {
            eta: 0.254,
            eta_a: 0.1,
        };
        let w = 1.126394 / 0.27;
        assert!((ode_rhs(PostType::Real, 0.0, &fr, &params, w) - 0.06858).abs() < 1e-15);
        let g1 = ode_rhs(PostType::Fake, 1.0, &fr, &params, w);
        assert!((g1 - (0.3 * 0.254 + 0.646 - 1.0)).abs() < 1e-15);
        assert!((g1 + 0.2778).abs() < 1e-12);
    }

    #[test]
    fn bisection_edges() {
        let params = c0_params();
        let fr = ParticipantFractions {
            eta: 0.0,
            eta_a: 1.0,
        };
        assert_eq!(
            attractor_bisection(PostType::Real, &fr, &params, c0_w(), 1e-12).unwrap(),
            0.0
        );
        assert!(matches!(
            attractor_bisection(PostType::Real, &c0_fr(), &params, c0_w(), 0.0),
            Err(AttractorError::BadTolerance(_))
        ));
    }

    #[test]
    fn boundary_tie_is_saturated_and_consistent() {
        // rho_bar * m = 1 exactly: both branch formulas give the same point.
        let drift = Drift {
            inflow: 0.25,
            warned: 0.25,
            slope: 2.0,
        };
        let res = drift.attractor();
        assert_eq!(res.regime, Regime::Saturated);
        assert_eq!(res.beta_star, 0.5);
        assert!((drift.inflow / drift.rho() - res.beta_star).abs() < 1e-15);
    }

    #[test]
    fn trajectory_from_attractor_is_constant() {
        let params = c0_params();
        for u in PostType::ALL {
            let star = attractor_closed_form(u, &c0_fr(), &params, c0_w()).beta_star;
            let grid: Vec<f64> = (0..50).map(|i| i as f64).collect();
            for (_, b) in ode_trajectory(u, star, &c0_fr(), &params, c0_w(), &grid) {
                assert!((b - star).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn c0_real_post_relaxation() {
        let params = c0_params();
        let traj = ode_trajectory(
            PostType::Real,
            0.0,
            &c0_fr(),
            &params,
            c0_w(),
            &[20.0, 100.0],
        );
        // e^{-rho 20} leaves a few 1e-3 of the initial gap.
        assert!((traj[0].1 - 0.2518072).abs() < 1e-2);
        let star = attractor_closed_form(PostType::Real, &c0_fr(), &params, c0_w()).beta_star;
        assert!((traj[1].1 - star).abs() < 1e-10);
        let drift = Drift::new(PostType::Real, &c0_fr(), &params, c0_w());
        assert!((rk4(&drift, 0.0, 20.0, 20_000) - traj[0].1).abs() < 1e-10);
    }

    #[test]
    fn exact_solution_matches_rk4_across_kink() {
        let params = c0_params();
        let grid = [0.3, 1.0, 2.5, 7.0, 15.0];
        for u in PostType::ALL {
            let drift = Drift::new(u, &c0_fr(), &params, c0_w());
            for beta0 in [0.0, 0.2, 0.5, 0.8, 1.0] {
                for &t in &grid {
                    let exact = drift.solve(beta0, t);
                    let numeric = rk4(&drift, beta0, t, 40_000);
                    // RK4 loses an order at the kink, but the step keeps the error tiny.
                    assert!(
                        (exact - numeric).abs() < 1e-8,
                        "u={u} b0={beta0} t={t}: {exact} vs {numeric}"
                    );
                }
            }
        }
        // A negative interior rate: starting below the kink the solution grows
        // exponentially until it saturates.
        let drift = Drift {
            inflow: 0.05,
            warned: 0.8,
            slope: 2.0,
        };
        assert!(drift.rho() < 0.0);
        for &t in &[0.5, 1.0, 3.0, 10.0] {
            assert!((drift.solve(0.1, t) - rk4(&drift, 0.1, t, 40_000)).abs() < 1e-8);
        }
        // Zero interior rate: linear growth up to the kink.
        let drift = Drift {
            inflow: 0.1,
            warned: 0.5,
            slope: 2.0,
        };
        assert_eq!(drift.rho(), 0.0);
        for &t in &[0.5, 3.0, 10.0] {
            assert!((drift.solve(0.0, t) - rk4(&drift, 0.0, t, 40_000)).abs() < 1e-8);
        }
    }

    #[test]
    fn trajectory_from_one_is_non_increasing() {
        let params = c0_params();
        let grid: Vec<f64> = (0..400).map(|i| i as f64 * 0.05).collect();
        for u in PostType::ALL {
            let traj = ode_trajectory(u, 1.0, &c0_fr(), &params, c0_w(), &grid);
            assert!(traj.windows(2).all(|p| p[1].1 <= p[0].1 + 1e-15));
        }
    }

    #[test]
    fn comparative_statics_on_participation_line() {
        // beta_u^x strictly decreases in the direct-tagger share x.
        let params = c0_params();
        for u in PostType::ALL {
            let mut prev = f64::INFINITY;
            for i in 1..900 {
                let x = i as f64 * 1e-3;
                let fr = ParticipantFractions {
                    eta: x,
                    eta_a: params.mu_a,
                };
                let b = attractor_closed_form(u, &fr, &params, c0_w()).beta_star;
                assert!(b < prev, "u={u} x={x}");
                prev = b;
            }
        }
    }

    fn drift_strategy() -> impl Strategy<Value = (Drift, ParticipantFractions, SystemParams, f64)> {
        (
            0.01f64..0.6,
            0.01f64..0.6,
            0.0f64..1.0,
            0.0f64..1.0,
            0.5f64..3.5,
            0.2f64..3.0,
            0.1f64..4.0,
            0.2f64..4.0,
        )
            .prop_map(|(alpha_r, gap, eta_raw, eta_a_raw, a, b, c, scale)| {
                let alpha_f = (alpha_r + gap).min(0.99);
                let eta = 1e-3 + 0.998 * eta_raw;
                let eta_a = (1.0 - eta) * eta_a_raw;
                let params = SystemParams {
                    alpha_r,
                    alpha_f,
                    mu_a: 0.1,
                    p: 0.3,
                    a,
                    b,
                    c,
                    cost_e: 1.0,
                    q_p: 1.0,
                    q_np: 0.5,
                };
                let w = scale / (c * alpha_r);
                let fr = ParticipantFractions { eta, eta_a };
                (Drift::new(PostType::Fake, &fr, &params, w), fr, params, w)
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn closed_form_matches_bisection((_d, fr, params, w) in drift_strategy()) {
            for u in PostType::ALL {
                let closed = attractor_closed_form(u, &fr, &params, w);
                let bis = attractor_bisection(u, &fr, &params, w, 1e-13).unwrap();
                prop_assert!((closed.beta_star - bis).abs() < 1e-9,
                    "u={} closed={:?} bis={}", u, closed, bis);
                prop_assert!((0.0..=1.0).contains(&closed.beta_star));
                let kink = 1.0 / effective_slope(u, &params, w);
                match closed.regime {
                    Regime::Saturated => prop_assert!(closed.beta_star >= kink * (1.0 - 1e-12)),
                    Regime::Interior => {
                        prop_assert!(closed.rho > 0.0);
                        prop_assert!(closed.beta_star < kink);
                    }
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn unique_zero_on_grid((_d, fr, params, w) in drift_strategy()) {
            for u in PostType::ALL {
                let drift = Drift::new(u, &fr, &params, w);
                let mut changes = 0;
                let mut prev = drift.eval(0.0);
                prop_assert!(prev > 0.0);
                for i in 1..=10_000 {
                    let g = drift.eval(i as f64 * 1e-4);
                    if g <= 0.0 && prev > 0.0 {
                        changes += 1;
                    }
                    if g > 0.0 && prev <= 0.0 {
                        changes += 1;
                    }
                    prev = g;
                }
                prop_assert_eq!(changes, 1);
            }
        }

        #[test]
        fn global_stability((_d, fr, params, w) in drift_strategy()) {
            for u in PostType::ALL {
                let star = attractor_closed_form(u, &fr, &params, w).beta_star;
                for beta0 in [0.0, 0.25, 0.5, 0.75, 1.0] {
                    let end = ode_trajectory(u, beta0, &fr, &params, w, &[1e9])[0].1;
                    prop_assert!((end - star).abs() < 1e-6, "u={} b0={} end={} star={}", u, beta0, end, star);
                }
            }
        }
    }
}
