//! Mechanism design: pick the warning scale `w`, the target direct-tagger
//! fraction `eta`, the reward ratio `gamma` and the reward `R` so that the
//! all-participate profile with `eta` direct taggers is an equilibrium that
//! meets the `(theta, delta)` detection goal.
//!
//! The pipeline is
//!
//! ```text
//! theta -> theta_tilde -> c w alpha_R in (lo, hi) -> eta_bar -> eta -> gamma_lower -> gamma -> R
//! ```
//!
//! Every free choice the construction leaves open is a [`DesignKnobs`] field.
//! Explicit knob values are checked against the open intervals, never clamped.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{validate_system, DesignTarget, SystemParams, ValidationReport};

/// `eta*_l = (1 - l)(1 - mu_a) / (1 - alpha_F)`: direct-tagger fraction at
/// which direct taggers alone put the fake-tag fraction at `l (1 - mu_a)`.
pub fn eta_star(level: f64, params: &SystemParams) -> f64 {
    (1.0 - level) * (1.0 - params.mu_a) / (1.0 - params.alpha_f)
}

fn delta_a(delta: f64, params: &SystemParams) -> f64 {
    delta * (1.0 - params.mu_a)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum EpsRule {
    /// Smallest admissible value plus `offset`.
    Auto {
        offset: f64,
    },
    Explicit {
        value: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum IntervalRule {
    Midpoint,
    Explicit { value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignKnobs {
    pub eps: EpsRule,
    pub eps1: IntervalRule,
    pub eps2: IntervalRule,
    /// `gamma = (1 + gamma_margin) gamma_lower`.
    pub gamma_margin: f64,
}

impl Default for DesignKnobs {
    fn default() -> Self {
        DesignKnobs {
            eps: EpsRule::Auto { offset: 1e-3 },
            eps1: IntervalRule::Midpoint,
            eps2: IntervalRule::Midpoint,
            gamma_margin: 0.2,
        }
    }
}

impl DesignKnobs {
    /// A wider theta_tilde offset and a reward ratio far above its lower
    /// bound. This pushes the second equilibrium toward all-direct tagging.
    pub fn high_gamma() -> Self {
        DesignKnobs {
            eps: EpsRule::Auto { offset: 1e-2 },
            eps1: IntervalRule::Midpoint,
            eps2: IntervalRule::Midpoint,
            gamma_margin: 1000.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NotDesignableReason {
    /// `theta <= f` and `K_delta < 0`.
    OutsideFeasibleRegion,
    /// The open intervals of the construction are empty.
    HypothesisViolation,
    /// theta_tilde reached 1, which leaves no room for `w`.
    ThetaTildeEdge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Error)]
#[error("not designable ({reason:?}): {detail}")]
pub struct NotDesignable {
    pub reason: NotDesignableReason,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DesignError {
    #[error("invalid configuration: {0}")]
    Invalid(ValidationReport),
    #[error(transparent)]
    NotDesignable(#[from] NotDesignable),
    #[error("{knob} = {value} outside the admissible interval ({lo}, {hi})")]
    KnobOutOfInterval {
        knob: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("boundary-degenerate configuration: {0}")]
    BoundaryDegenerate(&'static str),
    #[error("empty w interval: lo = {lo}, hi = {hi}")]
    InfeasibleInterval { lo: f64, hi: f64 },
}

impl DesignError {
    pub fn not_designable(&self) -> Option<&NotDesignable> {
        match self {
            DesignError::NotDesignable(nd) => Some(nd),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub f_value: f64,
    pub kappa: f64,
    #[serde(rename = "K_delta")]
    pub k_delta: f64,
    /// Larger root of the theta_tilde quadratic, absent when `K_delta < 0`.
    pub theta_2: Option<f64>,
    pub theta_star: f64,
    /// Admissible `c w alpha_R`, open at both ends.
    pub w_interval: (f64, f64),
    pub eta_bar: f64,
    pub eta_star_tilde: f64,
    pub gamma_lower: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanismDesign {
    pub target: DesignTarget,
    pub theta_tilde: f64,
    pub w: f64,
    /// `c w alpha_R`, the slope of the real-post response in `beta`.
    #[serde(rename = "cw_alpha_R")]
    pub cw_alpha_r: f64,
    pub eta: f64,
    pub gamma: f64,
    #[serde(rename = "R")]
    pub reward: f64,
    pub diagnostics: Diagnostics,
}

/// `f(theta, delta)`; the easy branch applies when `theta > f`.
pub fn f_threshold(theta: f64, delta: f64, params: &SystemParams) -> Result<f64, DesignError> {
    let da = delta_a(delta, params);
    let es = eta_star(theta, params);
    let denom = params.capacity_gain() * (da - params.alpha_r * es);
    if denom == 0.0 {
        return Err(DesignError::BoundaryDegenerate(
            "delta_a = alpha_R eta*_theta",
        ));
    }
    Ok((da - es * delta) / denom)
}

/// `(kappa, K_delta)`.
pub fn kappa_k_delta(delta: f64, params: &SystemParams) -> (f64, f64) {
    let da = params.capacity_gain();
    let kappa = delta * (da * (1.0 - params.alpha_f) - 1.0) - params.alpha_r * da;
    let k = kappa * kappa - 4.0 * delta * params.alpha_r * params.alpha_f * da;
    (kappa, k)
}

/// Larger root `theta_2` (when real) and `theta_star = 1 - delta (1 - alpha_F) / alpha_R`.
pub fn theta_roots(delta: f64, params: &SystemParams) -> (Option<f64>, f64) {
    let (kappa, k) = kappa_k_delta(delta, params);
    let theta_2 =
        (k >= 0.0).then(|| (-kappa + k.sqrt()) / (2.0 * params.capacity_gain() * params.alpha_r));
    let theta_star = 1.0 - delta * (1.0 - params.alpha_f) / params.alpha_r;
    (theta_2, theta_star)
}

/// True when `(theta, delta)` lies in the region where a design is possible:
/// `theta > f` or `K_delta >= 0`.
pub fn in_feasible_region(
    theta: f64,
    delta: f64,
    params: &SystemParams,
) -> Result<bool, DesignError> {
    let f = f_threshold(theta, delta, params)?;
    Ok(theta > f || kappa_k_delta(delta, params).1 >= 0.0)
}

pub fn theta_tilde(
    theta: f64,
    delta: f64,
    params: &SystemParams,
    eps: EpsRule,
) -> Result<f64, DesignError> {
    let f = f_threshold(theta, delta, params)?;
    let tt = if theta > f {
        theta
    } else {
        let (theta_2, theta_star) = theta_roots(delta, params);
        let Some(theta_2) = theta_2 else {
            return Err(NotDesignable {
                reason: NotDesignableReason::OutsideFeasibleRegion,
                detail: format!("theta = {theta} <= f = {f} and K_delta < 0"),
            }
            .into());
        };
        let min_eps = (theta - theta_2).max(0.0);
        let e = match eps {
            EpsRule::Auto { offset } => min_eps + offset,
            EpsRule::Explicit { value } => {
                if !(value > min_eps) {
                    return Err(DesignError::KnobOutOfInterval {
                        knob: "eps",
                        value,
                        lo: min_eps,
                        hi: f64::INFINITY,
                    });
                }
                value
            }
        };
        (theta_2.max(theta_star) + e).min(1.0)
    };
    if tt >= 1.0 {
        return Err(NotDesignable {
            reason: NotDesignableReason::ThetaTildeEdge,
            detail: "theta_tilde = 1 leaves an empty w interval".into(),
        }
        .into());
    }
    Ok(tt)
}

/// Open interval for `c w alpha_R`.
pub fn w_interval(
    theta_tilde: f64,
    delta: f64,
    params: &SystemParams,
) -> Result<(f64, f64), DesignError> {
    let one_minus_mu_a = 1.0 - params.mu_a;
    let da = delta_a(delta, params);
    let est = eta_star(theta_tilde, params);
    let lo = (1.0 / (params.capacity_gain() * theta_tilde)).max(1.0) / one_minus_mu_a;
    let hi = (1.0 / da).min((da - est * params.alpha_r) / (da * (one_minus_mu_a - est)));
    if !(hi > lo) {
        return Err(DesignError::InfeasibleInterval { lo, hi });
    }
    Ok((lo, hi))
}

/// `eta_bar` at slope `m = c w alpha_R`.
pub fn eta_bar(m: f64, delta: f64, params: &SystemParams) -> f64 {
    let da = delta_a(delta, params);
    da * ((1.0 - params.mu_a) * m - 1.0) / (m * da - params.alpha_r)
}

/// Smallest reward ratio that keeps warning readers participating at `eta`.
pub fn gamma_lower(eta: f64, params: &SystemParams) -> f64 {
    let p = params.p;
    let s = eta + params.mu_a;
    (1.0 / (1.0 - p)) * (1.0 - s * (1.0 - p)) / (1.0 - s)
}

/// `R = C_e (1 - eta - mu_a + 1 / (gamma - 1))`.
pub fn reward(eta: f64, gamma: f64, params: &SystemParams) -> f64 {
    params.cost_e * (1.0 - eta - params.mu_a + 1.0 / (gamma - 1.0))
}

fn pick_in(rule: IntervalRule, knob: &'static str, width: f64) -> Result<f64, DesignError> {
    match rule {
        IntervalRule::Midpoint => Ok(0.5 * width),
        IntervalRule::Explicit { value } => {
            if value > 0.0 && value < width {
                Ok(value)
            } else {
                Err(DesignError::KnobOutOfInterval {
                    knob,
                    value,
                    lo: 0.0,
                    hi: width,
                })
            }
        }
    }
}

fn hypothesis(detail: String) -> DesignError {
    NotDesignable {
        reason: NotDesignableReason::HypothesisViolation,
        detail,
    }
    .into()
}

pub fn choose_design(
    target: &DesignTarget,
    params: &SystemParams,
    knobs: &DesignKnobs,
) -> Result<MechanismDesign, DesignError> {
    let report = validate_system(params, target);
    if !report.passed() {
        return Err(DesignError::Invalid(report));
    }
    if !(knobs.gamma_margin > 0.0 && knobs.gamma_margin.is_finite()) {
        return Err(DesignError::KnobOutOfInterval {
            knob: "gamma_margin",
            value: knobs.gamma_margin,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    let (theta, delta) = (target.theta, target.delta);
    let f_value = f_threshold(theta, delta, params)?;
    let (kappa, k_delta) = kappa_k_delta(delta, params);
    let (theta_2, theta_star) = theta_roots(delta, params);

    let tt = theta_tilde(theta, delta, params, knobs.eps)?;
    let (lo, hi) = match w_interval(tt, delta, params) {
        Ok(iv) => iv,
        Err(DesignError::InfeasibleInterval { lo, hi }) => {
            return Err(hypothesis(format!("empty w interval ({lo}, {hi})")))
        }
        Err(e) => return Err(e),
    };
    // The ends are written as lo + width and the midpoint as lo + width / 2.
    let m = lo + pick_in(knobs.eps1, "eps1", hi - lo)?;
    let w = m / (params.c * params.alpha_r);

    let eb = eta_bar(m, delta, params);
    let est = eta_star(tt, params);
    if !(est > eb) {
        return Err(hypothesis(format!(
            "eta_bar = {eb} >= eta*_theta_tilde = {est}"
        )));
    }
    let gap = est - eb;
    let eps2 = match knobs.eps2 {
        IntervalRule::Midpoint => 0.5 * gap,
        IntervalRule::Explicit { value } => {
            // The upper end is admissible for eps2.
            if value > 0.0 && value <= gap {
                value
            } else {
                return Err(DesignError::KnobOutOfInterval {
                    knob: "eps2",
                    value,
                    lo: 0.0,
                    hi: gap,
                });
            }
        }
    };
    let eta = eb + eps2;
    if !(eta > 0.0 && eta + params.mu_a < 1.0) {
        return Err(hypothesis(format!(
            "eta = {eta} leaves no warning readers or no direct taggers"
        )));
    }

    let gl = gamma_lower(eta, params);
    let gamma = (1.0 + knobs.gamma_margin) * gl;
    let r = reward(eta, gamma, params);

    Ok(MechanismDesign {
        target: *target,
        theta_tilde: tt,
        w,
        cw_alpha_r: m,
        eta,
        gamma,
        reward: r,
        diagnostics: Diagnostics {
            f_value,
            kappa,
            k_delta,
            theta_2,
            theta_star,
            w_interval: (lo, hi),
            eta_bar: eb,
            eta_star_tilde: est,
            gamma_lower: gl,
        },
    })
}
