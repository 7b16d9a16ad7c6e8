//! Monte-Carlo study of designability and degradation against the capacity
//! gap `d = (alpha_F - alpha_R) / alpha_F`.
//!
//! Sample `i` of every `d` draws from its own stream seeded with
//! `master_seed ^ i`, so the same base configuration is reused across `d`
//! values and reruns are bit-identical regardless of thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::{choose_design, in_feasible_region, DesignKnobs};
use crate::equilibrium::ne_set;
use crate::model::{validate_system, DesignTarget, SystemParams};

/// Convention for the degradation aggregates, written into every summary.
pub const P_DENOMINATOR: &str =
    "designable samples; samples without a second equilibrium count as P = 0";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("d = {0} outside (0, 1)")]
    BadGap(f64),
    #[error("n_samples must be at least 1")]
    NoSamples,
    #[error("theta = {0} outside (0, 1]")]
    BadTheta(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub d_values: Vec<f64>,
    pub n_samples: u64,
    pub master_seed: u64,
    pub theta: f64,
    pub knobs: DesignKnobs,
}

impl SweepSpec {
    pub fn check(&self) -> Result<(), SweepError> {
        if self.n_samples == 0 {
            return Err(SweepError::NoSamples);
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(SweepError::BadTheta(self.theta));
        }
        if let Some(&d) = self.d_values.iter().find(|&&d| !(d > 0.0 && d < 1.0)) {
            return Err(SweepError::BadGap(d));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub d: f64,
    pub n: u64,
    pub frac_designable: f64,
    #[serde(rename = "frac_P_lt_10")]
    pub frac_p_lt_10: f64,
    #[serde(rename = "mean_P")]
    pub mean_p: f64,
    pub n_second_ne: u64,
    pub master_seed: u64,
    /// Share with `theta > f` or `K_delta >= 0`, ignoring the remaining hypotheses.
    pub frac_feasible_region: f64,
    /// Share passing parameter and target validation.
    pub frac_valid: f64,
    /// Samples that raised an error other than "not designable".
    pub n_failed: u64,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub rows: Vec<SweepRow>,
    pub master_seed: u64,
    pub theta: f64,
    pub n_samples: u64,
    pub knobs: DesignKnobs,
    pub p_denominator: String,
    pub rng: String,
}

/// Stream for sample `index`.
pub fn sample_stream(master_seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(master_seed ^ index)
}

/// Draws `alpha_R, mu_a, a, p` in that order and builds the configuration
/// for capacity gap `d`.
pub fn sample_config<R: Rng>(d: f64, theta: f64, rng: &mut R) -> (SystemParams, DesignTarget) {
    let alpha_r = rng.random_range(0.25..0.3);
    let mu_a = rng.random_range(0.0..0.2);
    let a = rng.random_range(2.0..3.0);
    let p = rng.random_range(0.0..0.5);
    let params = SystemParams {
        alpha_r,
        alpha_f: alpha_r / (1.0 - d),
        mu_a,
        p,
        a,
        b: 1.0,
        c: 1.0,
        cost_e: 1.0,
        q_p: 1.0,
        q_np: 0.5,
    };
    (
        params,
        DesignTarget {
            theta,
            delta: alpha_r + 0.01,
        },
    )
}

#[derive(Debug, Clone, PartialEq)]
struct Outcome {
    valid: bool,
    in_region: bool,
    designable: bool,
    degradation: Option<f64>,
    failure: Option<String>,
}

fn evaluate(d: f64, index: u64, spec: &SweepSpec) -> Outcome {
    let mut rng = sample_stream(spec.master_seed, index);
    let (params, target) = sample_config(d, spec.theta, &mut rng);
    let valid = validate_system(&params, &target).passed();
    let in_region = in_feasible_region(target.theta, target.delta, &params).unwrap_or(false);
    let mut out = Outcome {
        valid,
        in_region,
        designable: false,
        degradation: None,
        failure: None,
    };
    match choose_design(&target, &params, &spec.knobs) {
        Ok(design) => {
            out.designable = true;
            match ne_set(&design, &params) {
                Ok(rep) => out.degradation = rep.degradation_p,
                Err(e) => out.failure = Some(format!("sample {index}: {e}")),
            }
        }
        Err(e) if e.not_designable().is_some() => {}
        Err(e) => out.failure = Some(format!("sample {index}: {e}")),
    }
    out
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepSummary, SweepError> {
    spec.check()?;
    let n = spec.n_samples;
    let rows = spec
        .d_values
        .iter()
        .map(|&d| {
            let outcomes: Vec<Outcome> = (0..n)
                .into_par_iter()
                .map(|i| evaluate(d, i, spec))
                .collect();
            aggregate(d, spec, &outcomes)
        })
        .collect();
    Ok(SweepSummary {
        rows,
        master_seed: spec.master_seed,
        theta: spec.theta,
        n_samples: n,
        knobs: spec.knobs,
        p_denominator: P_DENOMINATOR.to_string(),
        rng: crate::sim::RNG_NAME.to_string(),
    })
}

fn aggregate(d: f64, spec: &SweepSpec, outcomes: &[Outcome]) -> SweepRow {
    let n = outcomes.len() as f64;
    let count = |f: fn(&Outcome) -> bool| outcomes.iter().filter(|o| f(o)).count();
    let designable = count(|o| o.designable);
    let mut below = 0usize;
    let mut sum = 0.0;
    let mut second = 0u64;
    for o in outcomes.iter().filter(|o| o.designable) {
        let p = o.degradation.unwrap_or(0.0);
        if o.degradation.is_some() {
            second += 1;
        }
        if p < 10.0 {
            below += 1;
        }
        sum += p;
    }
    let failures: Vec<String> = outcomes.iter().filter_map(|o| o.failure.clone()).collect();
    let ratio = |k: usize, of: usize| if of == 0 { 0.0 } else { k as f64 / of as f64 };
    SweepRow {
        d,
        n: spec.n_samples,
        frac_designable: designable as f64 / n,
        frac_p_lt_10: ratio(below, designable),
        mean_p: if designable == 0 {
            0.0
        } else {
            sum / designable as f64
        },
        n_second_ne: second,
        master_seed: spec.master_seed,
        frac_feasible_region: count(|o| o.in_region) as f64 / n,
        frac_valid: count(|o| o.valid) as f64 / n,
        n_failed: failures.len() as u64,
        failures,
    }
}
