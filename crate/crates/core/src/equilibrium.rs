//! Utilities and Nash equilibria of the participation game.
//!
//! A profile `mu = (mu0, mu1, mu2)` gives the share of abstainers, direct
//! taggers and warning readers among non-adversarial users. Each user's
//! utility depends on the profile through the success probability `P`, which
//! is read off the two attractors.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attractor::attractor_closed_form;
use crate::design::{eta_star, MechanismDesign};
use crate::model::{
    participant_fractions, success_thresholds, ModelError, PopulationProfile, PostType,
    SystemParams,
};

/// Absolute tolerance for utility comparisons.
pub const UTILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EquilibriumError {
    #[error("utility denominator mu1 + mu_a + gamma mu2 vanishes")]
    DegenerateDenominator,
    #[error("grid step must lie in (0, 0.1], got {0}")]
    BadGridStep(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Strategy of a non-adversarial user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "0")]
    Abstain,
    #[serde(rename = "1")]
    Direct,
    #[serde(rename = "2")]
    Warned,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Abstain, Strategy::Direct, Strategy::Warned];

    pub fn index(self) -> usize {
        match self {
            Strategy::Abstain => 0,
            Strategy::Direct => 1,
            Strategy::Warned => 2,
        }
    }
}

/// Fake- and real-post attractors at a profile.
pub fn attractors_at(
    mu: &PopulationProfile,
    params: &SystemParams,
    design: &MechanismDesign,
) -> Result<(f64, f64), EquilibriumError> {
    let fr = participant_fractions(mu, params.mu_a)?;
    let bf = attractor_closed_form(PostType::Fake, &fr, params, design.w).beta_star;
    let br = attractor_closed_form(PostType::Real, &fr, params, design.w).beta_star;
    Ok((bf, br))
}

/// `P = p 1{beta_F >= theta_a} + (1 - p) 1{beta_R <= delta_a}`, zero when
/// nobody but adversaries tags.
pub fn success_prob(
    mu: &PopulationProfile,
    params: &SystemParams,
    design: &MechanismDesign,
) -> Result<f64, EquilibriumError> {
    if mu.mu1 + mu.mu2 == 0.0 {
        return Ok(0.0);
    }
    let fr = participant_fractions(mu, params.mu_a)?;
    let (theta_a, delta_a) = success_thresholds(design.target.theta, design.target.delta, &fr);
    let (bf, br) = attractors_at(mu, params, design)?;
    let mut prob = 0.0;
    if bf >= theta_a {
        prob += params.p;
    }
    if br <= delta_a {
        prob += 1.0 - params.p;
    }
    Ok(prob)
}

/// Utility of strategy `s` at profile `mu` when the success probability is `prob`.
pub fn utility_with_prob(
    s: Strategy,
    mu: &PopulationProfile,
    prob: f64,
    params: &SystemParams,
    design: &MechanismDesign,
) -> Result<f64, EquilibriumError> {
    let den = mu.mu1 + params.mu_a + design.gamma * mu.mu2;
    if den == 0.0 {
        return Err(EquilibriumError::DegenerateDenominator);
    }
    let share = design.reward * prob / den;
    Ok(match s {
        Strategy::Abstain => params.q_np,
        Strategy::Direct => params.q_p + share,
        Strategy::Warned => params.q_p - params.cost_e + design.gamma * share,
    })
}

pub fn utility(
    s: Strategy,
    mu: &PopulationProfile,
    params: &SystemParams,
    design: &MechanismDesign,
) -> Result<f64, EquilibriumError> {
    let prob = success_prob(mu, params, design)?;
    utility_with_prob(s, mu, prob, params, design)
}

/// `(U0, U1, U2)` at `mu`.
pub fn utilities(
    mu: &PopulationProfile,
    params: &SystemParams,
    design: &MechanismDesign,
) -> Result<[f64; 3], EquilibriumError> {
    let prob = success_prob(mu, params, design)?;
    utilities_with_prob(mu, prob, params, design)
}

fn utilities_with_prob(
    mu: &PopulationProfile,
    prob: f64,
    params: &SystemParams,
    design: &MechanismDesign,
) -> Result<[f64; 3], EquilibriumError> {
    let mut out = [0.0; 3];
    for s in Strategy::ALL {
        out[s.index()] = utility_with_prob(s, mu, prob, params, design)?;
    }
    Ok(out)
}

/// Direct-tagger share of the second candidate equilibrium, and whether it
/// exceeds `eta*_theta_tilde`.
pub fn x_eta(design: &MechanismDesign, params: &SystemParams) -> (f64, bool) {
    let p = params.p;
    let x = p / (design.gamma - 1.0) + p * (1.0 - params.mu_a - design.eta) + design.eta;
    (x, x > eta_star(design.theta_tilde, params))
}

fn support(mu: &PopulationProfile) -> [bool; 3] {
    [mu.mu0 > 0.0, mu.mu1 > 0.0, mu.mu2 > 0.0]
}

/// Every strategy in use earns the maximal utility, within [`UTILITY_TOL`].
pub fn is_nash(
    mu: &PopulationProfile,
    params: &SystemParams,
    design: &MechanismDesign,
) -> Result<bool, EquilibriumError> {
    let u = utilities(mu, params, design)?;
    let best = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(support(mu)
        .iter()
        .zip(u)
        .all(|(&used, val)| !used || best - val <= UTILITY_TOL))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    #[serde(rename = "AI")]
    Ai,
    #[serde(rename = "NonAI")]
    NonAi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeEntry {
    pub profile: PopulationProfile,
    pub classification: Classification,
    pub success_prob: f64,
    /// `(U0, U1, U2)`.
    pub utilities: [f64; 3],
    /// `(beta_F, beta_R)`.
    pub attractors: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeReport {
    pub ne_list: Vec<NeEntry>,
    pub x_eta: f64,
    /// `x_eta > eta*_theta_tilde`, the stated condition for a second equilibrium.
    pub x_eta_exceeds_eta_star: bool,
    pub second_ne_exists: bool,
    /// The stated condition and the full check differ.
    pub criteria_disagree: bool,
    #[serde(rename = "degradation_P")]
    pub degradation_p: Option<f64>,
}

fn entry(
    mu: PopulationProfile,
    params: &SystemParams,
    design: &MechanismDesign,
) -> Result<NeEntry, EquilibriumError> {
    let fr = participant_fractions(&mu, params.mu_a)?;
    let (theta_a, delta_a) = success_thresholds(design.target.theta, design.target.delta, &fr);
    let (bf, br) = attractors_at(&mu, params, design)?;
    let classification = if bf >= theta_a && br <= delta_a {
        Classification::Ai
    } else {
        Classification::NonAi
    };
    Ok(NeEntry {
        profile: mu,
        classification,
        success_prob: success_prob(&mu, params, design)?,
        utilities: utilities(&mu, params, design)?,
        attractors: (bf, br),
    })
}

/// `100 (theta_a - beta_F) / theta_a` with `theta_a = theta (1 - mu_a)`.
pub fn degradation_percent(beta_f: f64, theta: f64, mu_a: f64) -> f64 {
    let theta_a = theta * (1.0 - mu_a);
    100.0 * (theta_a - beta_f) / theta_a
}

/// The designed equilibrium and, when it exists, the second one.
pub fn ne_set(
    design: &MechanismDesign,
    params: &SystemParams,
) -> Result<NeReport, EquilibriumError> {
    let mu_a = params.mu_a;
    let main = entry(
        PopulationProfile::on_participation_line(design.eta, mu_a),
        params,
        design,
    )?;
    let mut ne_list = vec![main];

    let (x, exceeds) = x_eta(design, params);
    let mut second = None;
    if exceeds && x < 1.0 - mu_a {
        let mu = PopulationProfile::on_participation_line(x, mu_a);
        let cand = entry(mu, params, design)?;
        if cand.attractors.0 < design.target.theta * (1.0 - mu_a) && is_nash(&mu, params, design)? {
            second = Some(cand);
        }
    }
    let degradation_p =
        second.map(|e| degradation_percent(e.attractors.0, design.target.theta, mu_a));
    let second_ne_exists = second.is_some();
    ne_list.extend(second);
    Ok(NeReport {
        ne_list,
        x_eta: x,
        x_eta_exceeds_eta_star: exceeds,
        second_ne_exists,
        criteria_disagree: exceeds != second_ne_exists,
        degradation_p,
    })
}

/// Degradation at the second equilibrium, `None` when there is none.
pub fn degradation_metric(
    design: &MechanismDesign,
    params: &SystemParams,
) -> Result<Option<f64>, EquilibriumError> {
    Ok(ne_set(design, params)?.degradation_p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCandidate {
    pub profile: PopulationProfile,
    pub success_prob: f64,
    pub utilities: [f64; 3],
}

/// Moves `step` of mass from coordinate `from` to `to`, keeping the support.
fn shifted(mu: &PopulationProfile, from: usize, to: usize, step: f64) -> Option<PopulationProfile> {
    let mut v = mu.as_array();
    v[from] -= step;
    v[to] += step;
    if v[from].abs() < 1e-12 {
        v[from] = 0.0;
    }
    if v[from] < 0.0 {
        return None;
    }
    let nu = PopulationProfile {
        mu0: v[0],
        mu1: v[1],
        mu2: v[2],
    };
    (support(&nu) == support(mu)).then_some(nu)
}

/// Screens the simplex `mu0 + mu1 + mu2 = 1 - mu_a` on a grid.
///
/// A grid profile is kept when, for every strategy `s'` in use and every
/// other `s`, either `U(s) - U(s') <= tol` already, or the sign of that gap
/// flips within one grid move that keeps the support. The gap at the
/// neighbour is evaluated with the success probability of the profile itself,
/// so jumps of `P` alone do not create candidates.
pub fn ne_grid_scan(
    design: &MechanismDesign,
    params: &SystemParams,
    grid_step: f64,
) -> Result<Vec<GridCandidate>, EquilibriumError> {
    if !(grid_step > 0.0 && grid_step <= 0.1) {
        return Err(EquilibriumError::BadGridStep(grid_step));
    }
    let mass = 1.0 - params.mu_a;
    let n = (mass / grid_step + 1e-9).floor() as usize;

    let rows: Vec<Result<Vec<GridCandidate>, EquilibriumError>> = (0..=n)
        .into_par_iter()
        .map(|i| {
            let mut found = Vec::new();
            for j in 0..=(n - i) {
                let mu0 = i as f64 * grid_step;
                let mu1 = j as f64 * grid_step;
                let mut mu2 = mass - mu0 - mu1;
                if mu2.abs() < 1e-12 {
                    mu2 = 0.0;
                }
                if mu2 < 0.0 {
                    continue;
                }
                let mu = PopulationProfile { mu0, mu1, mu2 };
                if mu1 + mu2 + params.mu_a == 0.0 {
                    continue;
                }
                let prob = success_prob(&mu, params, design)?;
                let u = utilities_with_prob(&mu, prob, params, design)?;
                let sup = support(&mu);
                let neighbours: Vec<[f64; 3]> = (0..3)
                    .flat_map(|a| (0..3).map(move |b| (a, b)))
                    .filter(|(a, b)| a != b)
                    .filter_map(|(a, b)| shifted(&mu, a, b, grid_step))
                    .map(|nu| utilities_with_prob(&nu, prob, params, design))
                    .collect::<Result<_, _>>()?;
                let ok = (0..3).filter(|&k| sup[k]).all(|used| {
                    (0..3).filter(|&s| s != used).all(|s| {
                        u[s] - u[used] <= UTILITY_TOL
                            || neighbours.iter().any(|v| v[s] - v[used] <= 0.0)
                    })
                });
                if ok {
                    found.push(GridCandidate {
                        profile: mu,
                        success_prob: prob,
                        utilities: u,
                    });
                }
            }
            Ok(found)
        })
        .collect();

    let mut out = Vec::new();
    for row in rows {
        out.extend(row?);
    }
    Ok(out)
}
