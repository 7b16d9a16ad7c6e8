//! Domain parameters of the participation game and the primitive maps every
//! other module is built on: participant fractions, the published warning
//! level, the user response and the success thresholds.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance used when checking that a population profile lies on
/// the simplex `mu0 + mu1 + mu2 = 1 - mu_a`.
pub const SIMPLEX_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("degenerate population: no participants (mu1 + mu2 + mu_a = 0)")]
    DegeneratePopulation,
    #[error("profile does not lie on the simplex: sum {sum} but expected {expected}")]
    OffSimplex { sum: f64, expected: f64 },
    #[error("{name} = {value} is outside its domain")]
    OutOfDomain { name: &'static str, value: f64 },
}

/// Actuality of a post.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PostType {
    #[serde(rename = "F")]
    Fake,
    #[serde(rename = "R")]
    Real,
}

impl PostType {
    pub const ALL: [PostType; 2] = [PostType::Fake, PostType::Real];

    pub fn label(self) -> &'static str {
        match self {
            PostType::Fake => "F",
            PostType::Real => "R",
        }
    }
}

impl fmt::Display for PostType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for PostType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "F" | "f" | "fake" => Ok(PostType::Fake),
            "R" | "r" | "real" => Ok(PostType::Real),
            other => Err(format!("unknown post type `{other}` (expected F or R)")),
        }
    }
}

/// User, post and adversary parameters.
///
/// Serialized field names follow the configuration schema (`alpha_R`,
/// `C_e`, ...), so a config file and a design bundle share one vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    /// Probability that a user mis-judges a real post as fake.
    #[serde(rename = "alpha_R")]
    pub alpha_r: f64,
    /// Probability that a user judges a fake post as fake.
    #[serde(rename = "alpha_F")]
    pub alpha_f: f64,
    /// Fraction of adversarial accounts.
    pub mu_a: f64,
    /// Prior probability that a post is fake.
    pub p: f64,
    /// Innate-capacity exponent of the polynomial response.
    pub a: f64,
    /// Warning exponent of the polynomial response.
    pub b: f64,
    /// Response scale.
    pub c: f64,
    /// Extra cost paid by users who read the warning.
    #[serde(rename = "C_e")]
    pub cost_e: f64,
    /// Utility of being seen to participate.
    #[serde(rename = "Q_p")]
    pub q_p: f64,
    /// Utility of abstaining.
    #[serde(rename = "Q_np")]
    pub q_np: f64,
}

impl SystemParams {
    pub fn capacity(&self, u: PostType) -> f64 {
        match u {
            PostType::Fake => self.alpha_f,
            PostType::Real => self.alpha_r,
        }
    }

    /// `alpha_F / alpha_R`, strictly above one for valid parameters.
    pub fn capacity_ratio(&self) -> f64 {
        self.alpha_f / self.alpha_r
    }

    /// `(alpha_F / alpha_R)^a`.
    pub fn capacity_gain(&self) -> f64 {
        self.capacity_ratio().powf(self.a)
    }

    /// `(alpha_u / alpha_R)^a`: one for the real post, the capacity gain
    /// for the fake one.
    pub fn relative_gain(&self, u: PostType) -> f64 {
        match u {
            PostType::Real => 1.0,
            PostType::Fake => self.capacity_gain(),
        }
    }
}

/// Desired identification levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignTarget {
    /// Minimum fraction of non-adversarial users that must tag a fake post fake.
    pub theta: f64,
    /// Maximum fraction of non-adversarial users that may tag a real post fake.
    pub delta: f64,
}

/// A single violated constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Violation {
    NonFinite,
    AlphaROutOfRange,
    AlphaFOutOfRange,
    AlphaFNotAboveAlphaR,
    MuAOutOfRange,
    POutOfRange,
    ANotPositive,
    BNotPositive,
    CNotPositive,
    CostNotPositive,
    QnpAboveQp,
    DeltaNotAboveAlphaR,
    DeltaNotBelowTheta,
    ThetaNotAboveAlphaF,
    ThetaNotAboveScaledDelta,
    ThetaAboveOne,
}

impl Violation {
    pub fn describe(self) -> &'static str {
        match self {
            Violation::NonFinite => "parameter is not finite",
            Violation::AlphaROutOfRange => "alpha_R not in (0,1)",
            Violation::AlphaFOutOfRange => "alpha_F not in (0,1)",
            Violation::AlphaFNotAboveAlphaR => "alpha_F ≤ alpha_R",
            Violation::MuAOutOfRange => "mu_a not in [0,1)",
            Violation::POutOfRange => "p not in (0,1)",
            Violation::ANotPositive => "a ≤ 0",
            Violation::BNotPositive => "b ≤ 0",
            Violation::CNotPositive => "c ≤ 0",
            Violation::CostNotPositive => "C_e ≤ 0",
            Violation::QnpAboveQp => "Q_np > Q_p",
            Violation::DeltaNotAboveAlphaR => "delta ≤ alpha_R",
            Violation::DeltaNotBelowTheta => "delta ≥ theta",
            Violation::ThetaNotAboveAlphaF => "theta ≤ alpha_F",
            Violation::ThetaNotAboveScaledDelta => "theta ≤ delta / (alpha_F/alpha_R)^a",
            Violation::ThetaAboveOne => "theta > 1",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.describe())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, v: Violation) -> bool {
        self.violations.contains(&v)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return f.write_str("pass");
        }
        let names: Vec<&str> = self.violations.iter().map(|v| v.describe()).collect();
        write!(f, "fail({})", names.join("; "))
    }
}

/// Checks the standing assumptions on the parameters together with the
/// hypotheses the design guarantee needs. Every violated constraint is listed.
pub fn validate_system(params: &SystemParams, target: &DesignTarget) -> ValidationReport {
    let mut violations = Vec::new();
    let all = [
        params.alpha_r,
        params.alpha_f,
        params.mu_a,
        params.p,
        params.a,
        params.b,
        params.c,
        params.cost_e,
        params.q_p,
        params.q_np,
        target.theta,
        target.delta,
    ];
    if all.iter().any(|x| !x.is_finite()) {
        return ValidationReport {
            violations: vec![Violation::NonFinite],
        };
    }

    let mut check = |ok: bool, v: Violation| {
        if !ok {
            violations.push(v);
        }
    };
    let open_unit = |x: f64| x > 0.0 && x < 1.0;

    check(open_unit(params.alpha_r), Violation::AlphaROutOfRange);
    check(open_unit(params.alpha_f), Violation::AlphaFOutOfRange);
    check(
        params.alpha_f > params.alpha_r,
        Violation::AlphaFNotAboveAlphaR,
    );
    check((0.0..1.0).contains(&params.mu_a), Violation::MuAOutOfRange);
    check(open_unit(params.p), Violation::POutOfRange);
    check(params.a > 0.0, Violation::ANotPositive);
    check(params.b > 0.0, Violation::BNotPositive);
    check(params.c > 0.0, Violation::CNotPositive);
    check(params.cost_e > 0.0, Violation::CostNotPositive);
    check(params.q_np <= params.q_p, Violation::QnpAboveQp);

    check(
        target.delta > params.alpha_r,
        Violation::DeltaNotAboveAlphaR,
    );
    check(target.delta < target.theta, Violation::DeltaNotBelowTheta);
    check(
        target.theta > params.alpha_f,
        Violation::ThetaNotAboveAlphaF,
    );
    if params.alpha_r > 0.0 && params.alpha_f > params.alpha_r && params.a > 0.0 {
        check(
            target.theta > target.delta / params.capacity_gain(),
            Violation::ThetaNotAboveScaledDelta,
        );
    }
    check(target.theta <= 1.0, Violation::ThetaAboveOne);

    ValidationReport { violations }
}

/// Fractions of the (non-adversarial) population choosing each strategy:
/// `mu0` abstain, `mu1` tag directly, `mu2` tag using the warning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationProfile {
    pub mu0: f64,
    pub mu1: f64,
    pub mu2: f64,
}

impl PopulationProfile {
    /// Builds a profile and checks it sums to `1 - mu_a`.
    pub fn new(mu0: f64, mu1: f64, mu2: f64, mu_a: f64) -> Result<Self, ModelError> {
        let profile = PopulationProfile { mu0, mu1, mu2 };
        profile.check(mu_a)?;
        Ok(profile)
    }

    /// `(0, x, 1 - x - mu_a)`: nobody abstains, `x` tag directly.
    pub fn on_participation_line(x: f64, mu_a: f64) -> Self {
        PopulationProfile {
            mu0: 0.0,
            mu1: x,
            mu2: 1.0 - x - mu_a,
        }
    }

    pub fn check(&self, mu_a: f64) -> Result<(), ModelError> {
        for (name, value) in [("mu0", self.mu0), ("mu1", self.mu1), ("mu2", self.mu2)] {
            if !(value >= 0.0) {
                return Err(ModelError::OutOfDomain { name, value });
            }
        }
        let sum = self.mu0 + self.mu1 + self.mu2;
        let expected = 1.0 - mu_a;
        if (sum - expected).abs() > SIMPLEX_TOL {
            return Err(ModelError::OffSimplex { sum, expected });
        }
        Ok(())
    }

    pub fn get(&self, strategy: usize) -> f64 {
        match strategy {
            0 => self.mu0,
            1 => self.mu1,
            2 => self.mu2,
            _ => panic!("strategy index {strategy} out of range"),
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.mu0, self.mu1, self.mu2]
    }
}

/// Composition of the participant pool.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticipantFractions {
    /// Type-1 (direct taggers) among participants.
    pub eta: f64,
    /// Adversarial accounts among participants.
    pub eta_a: f64,
}

impl ParticipantFractions {
    /// Type-2 (warning readers) among participants.
    pub fn warned(&self) -> f64 {
        1.0 - (self.eta + self.eta_a)
    }
}

pub fn participant_fractions(
    mu: &PopulationProfile,
    mu_a: f64,
) -> Result<ParticipantFractions, ModelError> {
    let participants = mu.mu1 + mu.mu2 + mu_a;
    if participants <= 0.0 {
        return Err(ModelError::DegeneratePopulation);
    }
    Ok(ParticipantFractions {
        eta: mu.mu1 / participants,
        eta_a: mu_a / participants,
    })
}

/// Warning published for a running fraction `beta` of fake tags,
/// `w^(1/b) alpha_R^((1-a)/b) beta^(1/b)`.
pub fn warning_level(beta: f64, w: f64, a: f64, b: f64, alpha_r: f64) -> Result<f64, ModelError> {
    if !(beta >= 0.0) {
        return Err(ModelError::OutOfDomain {
            name: "beta",
            value: beta,
        });
    }
    if !(w > 0.0) {
        return Err(ModelError::OutOfDomain {
            name: "w",
            value: w,
        });
    }
    Ok(w.powf(1.0 / b) * alpha_r.powf((1.0 - a) / b) * beta.powf(1.0 / b))
}

/// Probability that a warning reader with capacity `alpha` tags fake under
/// warning `omega`: `min(c alpha^a omega^b, 1)`.
pub fn response(alpha: f64, omega: f64, a: f64, b: f64, c: f64) -> Result<f64, ModelError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(ModelError::OutOfDomain {
            name: "alpha",
            value: alpha,
        });
    }
    if !(omega >= 0.0) {
        return Err(ModelError::OutOfDomain {
            name: "omega",
            value: omega,
        });
    }
    Ok((c * alpha.powf(a) * omega.powf(b)).min(1.0))
}

/// Slope of `beta -> response(alpha_u, warning_level(beta))` below saturation:
/// `c w alpha_R (alpha_u/alpha_R)^a`. The exponent `b` cancels.
pub fn effective_slope(u: PostType, params: &SystemParams, w: f64) -> f64 {
    params.c * w * params.alpha_r * params.relative_gain(u)
}

/// Thresholds on the overall fake-tag fraction that correspond to
/// `(theta, delta)` among non-adversarial users.
pub fn success_thresholds(theta: f64, delta: f64, fr: &ParticipantFractions) -> (f64, f64) {
    let honest = 1.0 - fr.eta_a;
    (theta * honest, delta * honest)
}
