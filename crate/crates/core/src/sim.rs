//! Embedded tagging chain for a single post.
//!
//! At every epoch one participant arrives, is an adversary, a direct tagger or
//! a warning reader, and tags the post. The running fake-tag fraction is
//! `beta_k = X_k / k`, so `beta_{k+1} = beta_k + (1_F - beta_k) / (k + 1)`.
//! Warning readers see the warning computed from the fraction before their
//! own tag.
//!
//! Randomness comes from [`RNG_NAME`] seeded with `seed_from_u64`. Each epoch
//! consumes exactly two `f64` draws, participant first and tag second, so a
//! trajectory is reproducible from `(seed, inputs)` on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    response, warning_level, ModelError, ParticipantFractions, PostType, SystemParams,
};

/// Generator identity, part of the reproducibility contract.
pub const RNG_NAME: &str = "ChaCha8Rng::seed_from_u64";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("number of epochs must be at least 1")]
    NoEpochs,
    #[error("participant fractions invalid: eta = {eta}, eta_a = {eta_a}")]
    BadFractions { eta: f64, eta_a: f64 },
    #[error("initial fake-tag fraction must lie in [0, 1], got {0}")]
    BadInitialBeta(f64),
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Participant {
    #[serde(rename = "a")]
    Adversarial,
    #[serde(rename = "1")]
    Direct,
    #[serde(rename = "2")]
    Warned,
}

impl Participant {
    pub fn label(self) -> &'static str {
        match self {
            Participant::Adversarial => "a",
            Participant::Direct => "1",
            Participant::Warned => "2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tag {
    #[serde(rename = "F")]
    Fake,
    #[serde(rename = "R")]
    Real,
}

impl Tag {
    pub fn label(self) -> &'static str {
        match self {
            Tag::Fake => "F",
            Tag::Real => "R",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Epoch {
    pub participant: Participant,
    pub tag: Tag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagTrajectory {
    pub post_type: PostType,
    pub seed: u64,
    /// Fraction used for the first tagger's warning.
    pub initial_beta: f64,
    /// `betas[k - 1]` is the fake-tag fraction after epoch `k`.
    pub betas: Vec<f64>,
    pub epochs: Vec<Epoch>,
    pub fake_tag_count: u64,
    pub params: SystemParams,
    pub fractions: ParticipantFractions,
    pub w: f64,
}

impl TagTrajectory {
    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }

    pub fn final_beta(&self) -> f64 {
        *self
            .betas
            .last()
            .expect("trajectory has at least one epoch")
    }
}

/// Simulate `epochs` taggers starting from an empty tag record.
pub fn simulate(
    u: PostType,
    fr: &ParticipantFractions,
    params: &SystemParams,
    w: f64,
    epochs: u64,
    seed: u64,
) -> Result<TagTrajectory, SimError> {
    simulate_from(u, fr, params, w, epochs, seed, 0.0)
}

/// As [`simulate`], but the first warning reader sees `initial_beta` instead
/// of zero. Later warnings use the realized fraction `X_k / k`.
pub fn simulate_from(
    u: PostType,
    fr: &ParticipantFractions,
    params: &SystemParams,
    w: f64,
    epochs: u64,
    seed: u64,
    initial_beta: f64,
) -> Result<TagTrajectory, SimError> {
    if epochs == 0 {
        return Err(SimError::NoEpochs);
    }
    let valid = fr.eta.is_finite()
        && fr.eta_a.is_finite()
        && fr.eta >= 0.0
        && fr.eta_a >= 0.0
        && fr.eta + fr.eta_a <= 1.0 + 1e-12;
    if !valid {
        return Err(SimError::BadFractions {
            eta: fr.eta,
            eta_a: fr.eta_a,
        });
    }
    if !(0.0..=1.0).contains(&initial_beta) {
        return Err(SimError::BadInitialBeta(initial_beta));
    }
    // Surface bad w or response parameters before the loop.
    let alpha = params.capacity(u);
    response(
        alpha,
        warning_level(initial_beta, w, params.a, params.b, params.alpha_r)?,
        params.a,
        params.b,
        params.c,
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = epochs as usize;
    let mut betas = Vec::with_capacity(n);
    let mut records = Vec::with_capacity(n);
    let mut fakes: u64 = 0;
    let mut beta = initial_beta;
    let direct_cut = fr.eta_a + fr.eta;

    for k in 1..=epochs {
        let draw_participant: f64 = rng.random();
        let draw_tag: f64 = rng.random();
        let participant = if draw_participant < fr.eta_a {
            Participant::Adversarial
        } else if draw_participant < direct_cut {
            Participant::Direct
        } else {
            Participant::Warned
        };
        let fake_prob = match participant {
            Participant::Adversarial => 0.0,
            Participant::Direct => alpha,
            Participant::Warned => {
                let omega = warning_level(beta, w, params.a, params.b, params.alpha_r)?;
                response(alpha, omega, params.a, params.b, params.c)?
            }
        };
        let tag = if draw_tag < fake_prob {
            Tag::Fake
        } else {
            Tag::Real
        };
        if tag == Tag::Fake {
            fakes += 1;
        }
        beta = fakes as f64 / k as f64;
        betas.push(beta);
        records.push(Epoch { participant, tag });
    }

    Ok(TagTrajectory {
        post_type: u,
        seed,
        initial_beta,
        betas,
        epochs: records,
        fake_tag_count: fakes,
        params: *params,
        fractions: *fr,
        w,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub converged: bool,
    pub final_gap: f64,
    /// Least epoch `k` with `|beta_k - target| < tol` after which the
    /// trajectory stays within `2 tol`. `None` if there is no such epoch.
    pub first_entry_epoch: Option<u64>,
}

pub fn convergence_report(
    traj: &TagTrajectory,
    target: f64,
    tol: f64,
) -> Result<ConvergenceReport, SimError> {
    if !(tol > 0.0) {
        return Err(SimError::BadTolerance(tol));
    }
    let final_gap = (traj.final_beta() - target).abs();
    // Walk backwards while the trajectory stays within 2 tol; the last epoch
    // seen inside tol on that stretch is the entry point.
    let mut entry = None;
    for (idx, &b) in traj.betas.iter().enumerate().rev() {
        let gap = (b - target).abs();
        if gap >= 2.0 * tol {
            break;
        }
        if gap < tol {
            entry = Some(idx as u64 + 1);
        }
    }
    Ok(ConvergenceReport {
        converged: final_gap < tol,
        final_gap,
        first_entry_epoch: entry,
    })
}
