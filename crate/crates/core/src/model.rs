//! Per-agent update rules: attitude with diminishing response to repeated
//! behavior, intention as a blend of attitude and the population norm,
//! binary logit choice, and Bernoulli action sampling.
//!
//! The checked functions validate their arguments and are meant for library
//! callers. The population loop validates [`ModelParams`] once and then uses
//! the `*_unchecked` forms.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};

/// Direction in which performing the behavior moves an agent's attitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BehaviorType {
    /// Each performance raises attitude toward 1.
    Beneficial,
    /// Each performance lowers attitude toward 0.
    Harmful,
}

impl BehaviorType {
    pub fn as_str(self) -> &'static str {
        match self {
            BehaviorType::Beneficial => "beneficial",
            BehaviorType::Harmful => "harmful",
        }
    }
}

impl fmt::Display for BehaviorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BehaviorType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "beneficial" => Ok(BehaviorType::Beneficial),
            "harmful" => Ok(BehaviorType::Harmful),
            other => Err(Error::invalid(format!(
                "behavior must be \"beneficial\" or \"harmful\" (got {other:?})"
            ))),
        }
    }
}

/// Population-wide behavioral parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Weight of personal attitude against the norm when forming intention.
    pub phi: f64,
    /// Logit rationality. 0 is a coin flip; around 50 and above the choice is
    /// effectively deterministic.
    pub beta: f64,
    /// How fast attitude responds to the cumulative behavior count.
    pub lambda: f64,
    pub behavior: BehaviorType,
}

impl ModelParams {
    pub fn new(behavior: BehaviorType, phi: f64, beta: f64, lambda: f64) -> Result<Self> {
        let params = ModelParams {
            phi,
            beta,
            lambda,
            behavior,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        check_unit("phi", self.phi)?;
        check_beta(self.beta)?;
        check_lambda(self.lambda)
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta >= 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            field: "beta",
            constraint: "[0,inf) and be finite",
            value: beta,
        })
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            field: "lambda",
            constraint: "(0,inf) and be finite",
            value: lambda,
        })
    }
}

/// One agent's state at a time step.
///
/// `x0` never changes after initialization; `x` is always recomputed from
/// `x0` and `h`, so attitude cannot drift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub x0: f64,
    pub x: f64,
    pub z: f64,
    pub p: f64,
    pub y: u8,
    /// Number of times the agent has acted, counting the initial action.
    pub h: u64,
}

/// Attitude after `h` performances, starting from `x0`.
pub fn attitude_update(x0: f64, lambda: f64, h: u64, behavior: BehaviorType) -> Result<f64> {
    check_unit("x0", x0)?;
    check_lambda(lambda)?;
    Ok(attitude_unchecked(x0, lambda, h, behavior))
}

#[inline]
pub fn attitude_unchecked(x0: f64, lambda: f64, h: u64, behavior: BehaviorType) -> f64 {
    let damping = 1.0 + lambda * h as f64;
    match behavior {
        BehaviorType::Beneficial => 1.0 - (1.0 - x0) / damping,
        BehaviorType::Harmful => x0 / damping,
    }
}

/// Intention as `phi * attitude + (1 - phi) * norm`.
pub fn intention_update(attitude: f64, norm: f64, phi: f64) -> Result<f64> {
    check_unit("x_new", attitude)?;
    check_unit("y_avg_prev", norm)?;
    check_unit("phi", phi)?;
    Ok(intention_unchecked(attitude, norm, phi))
}

#[inline]
pub fn intention_unchecked(attitude: f64, norm: f64, phi: f64) -> f64 {
    // Clamp guards the last ulp of rounding so the result stays within the
    // interval spanned by the two inputs.
    let lo = attitude.min(norm);
    let hi = attitude.max(norm);
    (phi * attitude + (1.0 - phi) * norm).clamp(lo, hi)
}

/// Probability of performing the behavior under a binary logit with
/// utilities `z` (act) and `1 - z` (abstain).
pub fn choice_probability(z: f64, beta: f64) -> Result<f64> {
    check_unit("z", z)?;
    check_beta(beta)?;
    Ok(choice_probability_unchecked(z, beta))
}

#[inline]
pub fn choice_probability_unchecked(z: f64, beta: f64) -> f64 {
    // exp(bz) / (exp(bz) + exp(b(1-z))) rewritten with a single exponential;
    // exp overflowing to +inf yields 0 rather than NaN.
    1.0 / (1.0 + (-beta * (2.0 * z - 1.0)).exp())
}

/// Draws one Bernoulli(`p`) action, consuming exactly one uniform variate.
pub fn sample_action<R: Rng + ?Sized>(p: f64, rng: &mut R) -> Result<u8> {
    check_unit("p", p)?;
    Ok(sample_action_unchecked(p, rng))
}

#[inline]
pub fn sample_action_unchecked<R: Rng + ?Sized>(p: f64, rng: &mut R) -> u8 {
    let u: f64 = rng.random();
    u8::from(u < p)
}

pub fn cumulative_count_update(h: u64, y: u8) -> u64 {
    debug_assert!(y <= 1);
    h + u64::from(y)
}
