//! TOML run configuration.
//!
//! ```toml
//! [system]
//! alpha_R = 0.27
//! alpha_F = 0.30
//! mu_a = 0.1
//! p = 0.3
//! a = 2.0
//! b = 1.0
//! c = 1.0
//! C_e = 1.0
//! Q_p = 1.0
//! Q_np = 0.5
//!
//! [target]
//! theta = 0.75
//! delta = 0.28
//!
//! [knobs]            # optional, every key optional
//! eps = "auto"       # or a number
//! eps_offset = 1e-3  # used by "auto"
//! eps1 = "midpoint"  # or a number
//! eps2 = "midpoint"  # or a number
//! gamma_margin = 0.2
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::{DesignKnobs, EpsRule, IntervalRule};
use crate::model::{DesignTarget, SystemParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("knobs.{key}: expected {expected}, got \"{got}\"")]
    BadKnob {
        key: &'static str,
        expected: &'static str,
        got: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KnobValue {
    Value(f64),
    Named(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnobsConfig {
    pub eps: Option<KnobValue>,
    pub eps_offset: Option<f64>,
    pub eps1: Option<KnobValue>,
    pub eps2: Option<KnobValue>,
    pub gamma_margin: Option<f64>,
}

impl KnobsConfig {
    /// Applies the configured keys on top of `base`.
    pub fn resolve(&self, base: DesignKnobs) -> Result<DesignKnobs, ConfigError> {
        let mut k = base;
        let offset = self.eps_offset.or(match base.eps {
            EpsRule::Auto { offset } => Some(offset),
            EpsRule::Explicit { .. } => None,
        });
        match &self.eps {
            None => {
                if let (Some(offset), EpsRule::Auto { .. }) = (self.eps_offset, base.eps) {
                    k.eps = EpsRule::Auto { offset };
                }
            }
            Some(KnobValue::Value(v)) => k.eps = EpsRule::Explicit { value: *v },
            Some(KnobValue::Named(s)) if s == "auto" => {
                k.eps = EpsRule::Auto {
                    offset: offset.unwrap_or(1e-3),
                }
            }
            Some(KnobValue::Named(s)) => {
                return Err(ConfigError::BadKnob {
                    key: "eps",
                    expected: "\"auto\" or a number",
                    got: s.clone(),
                })
            }
        }
        k.eps1 = interval(&self.eps1, "eps1", base.eps1)?;
        k.eps2 = interval(&self.eps2, "eps2", base.eps2)?;
        if let Some(m) = self.gamma_margin {
            k.gamma_margin = m;
        }
        Ok(k)
    }
}

fn interval(
    v: &Option<KnobValue>,
    key: &'static str,
    base: IntervalRule,
) -> Result<IntervalRule, ConfigError> {
    match v {
        None => Ok(base),
        Some(KnobValue::Value(x)) => Ok(IntervalRule::Explicit { value: *x }),
        Some(KnobValue::Named(s)) if s == "midpoint" => Ok(IntervalRule::Midpoint),
        Some(KnobValue::Named(s)) => Err(ConfigError::BadKnob {
            key,
            expected: "\"midpoint\" or a number",
            got: s.clone(),
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemParams,
    pub target: DesignTarget,
    #[serde(default)]
    pub knobs: KnobsConfig,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn design_knobs(&self) -> Result<DesignKnobs, ConfigError> {
        self.knobs.resolve(DesignKnobs::default())
    }
}
