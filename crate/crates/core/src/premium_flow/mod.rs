//! State-dependent premium rate with a smooth dividend barrier, and the
//! deterministic surplus flow between claims.

mod flow;
mod rk;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use flow::{FlowEvaluator, FlowMethod, FlowState, DEFAULT_MAX_STEP, DEFAULT_ODE_TOLERANCE};

/// Premium rate `c(x)`: constant `c_tilde` below `a - epsilon`, a quintic
/// blend down to zero on `[a - epsilon, a]`, zero above `a`.
///
/// With `v = (a - x) / epsilon` the blend is `c_tilde * v^3 (6v^2 - 15v + 10)`,
/// which matches value, first and second derivative at both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierPremium {
    pub c_tilde: f64,
    pub a: f64,
    pub epsilon: f64,
}

impl BarrierPremium {
    pub fn new(c_tilde: f64, a: f64, epsilon: f64) -> Result<Self> {
        let p = BarrierPremium { c_tilde, a, epsilon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_tilde > 0.0 && self.c_tilde.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "c_tilde must be positive, got {}",
                self.c_tilde
            )));
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "barrier a must be positive, got {}",
                self.a
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon < self.a) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must lie in (0, a), got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// Start of the blend region.
    #[inline]
    pub fn blend_start(&self) -> f64 {
        self.a - self.epsilon
    }

    /// Premium rate at surplus `x`. Levels below zero get the base rate.
    #[inline]
    pub fn rate(&self, x: f64) -> f64 {
        if x < self.blend_start() {
            self.c_tilde
        } else if x <= self.a {
            // the blend written in the original variables
            let (a, e, c) = (self.a, self.epsilon, self.c_tilde);
            let d = a - x;
            c * d.powi(3) * (15.0 * e * (x - a) + 6.0 * d * d + 10.0 * e * e) / e.powi(5)
        } else {
            0.0
        }
    }

    /// `c'(x)`.
    #[inline]
    pub fn rate_derivative(&self, x: f64) -> f64 {
        if x < self.blend_start() || x > self.a {
            return 0.0;
        }
        let v = (self.a - x) / self.epsilon;
        // d/dx = -(1/eps) d/dv ; S'(v) = 30 v^2 (1 - v)^2
        -self.c_tilde / self.epsilon * 30.0 * v * v * (1.0 - v) * (1.0 - v)
    }

    /// `c''(x)`.
    #[inline]
    pub fn rate_second_derivative(&self, x: f64) -> f64 {
        if x < self.blend_start() || x > self.a {
            return 0.0;
        }
        let v = (self.a - x) / self.epsilon;
        // S''(v) = 60 v (1 - v)(1 - 2v)
        self.c_tilde / (self.epsilon * self.epsilon) * 60.0 * v * (1.0 - v) * (1.0 - 2.0 * v)
    }

    /// Lipschitz constant of `c`: `c_tilde * max|S'| / epsilon` with `max|S'| = 15/8`.
    pub fn lipschitz(&self) -> f64 {
        self.c_tilde * 1.875 / self.epsilon
    }
}

/// Free-function form of [`BarrierPremium::rate`].
pub fn premium_rate(x: f64, premium: &BarrierPremium) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(crate::error::domain("x", x, "[0, inf)"));
    }
    Ok(premium.rate(x))
}
