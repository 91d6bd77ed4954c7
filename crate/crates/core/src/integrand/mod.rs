//! The level-`k` integrand on `[0,1]^{2k}`.
//!
//! Coordinates are ordered `(alpha_1..alpha_k, beta_1..beta_k)`. Inter-claim
//! times are `t_i = -ln alpha_i`; for `i < k` the claim is the fraction
//! `beta_i` of the pre-claim surplus (survival), and the last claim is
//! `y_k = X_k - ln beta_k` (ruin with deficit `-ln beta_k`). Between claims the
//! surplus follows the premium flow.

mod variation;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::premium_flow::FlowEvaluator;
use crate::risk_model::{Distribution, ModelParams};

pub use variation::{
    boundary_probe, hessian_sweep, variation_bound, HessianSweep, ProbeResult, VariationBound,
};

/// Treatment of coordinates equal to 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryPolicy {
    /// Move 0 to the smallest positive float and 1 to the largest float
    /// below 1. A zero `alpha` yields 0 directly when the discounted
    /// inter-arrival factor vanishes there.
    #[default]
    Nudge,
    /// Reject points on the boundary.
    Reject,
}

/// Log-density with constants folded in.
#[derive(Debug, Clone, Copy)]
enum LogDensity {
    Exponential { ln_rate: f64, rate: f64 },
    Gamma { c: f64, shape_m1: f64, rate: f64 },
}

impl LogDensity {
    fn new(d: &Distribution) -> Self {
        match *d {
            Distribution::Exponential { rate } => LogDensity::Exponential {
                ln_rate: rate.ln(),
                rate,
            },
            Distribution::Gamma { shape, rate } => LogDensity::Gamma {
                c: shape * rate.ln() - ln_gamma(shape),
                shape_m1: shape - 1.0,
                rate,
            },
        }
    }

    #[inline]
    fn eval(&self, v: f64) -> f64 {
        match *self {
            LogDensity::Exponential { ln_rate, rate } => ln_rate - rate * v,
            LogDensity::Gamma { c, shape_m1, rate } => {
                if shape_m1 == 0.0 {
                    c - rate * v
                } else {
                    c + shape_m1 * v.ln() - rate * v
                }
            }
        }
    }
}

/// Everything needed to evaluate the level-`k` integrand.
#[derive(Debug, Clone)]
pub struct IntegrandContext {
    pub model: ModelParams,
    pub flow: FlowEvaluator,
    pub k: usize,
    pub boundary_policy: BoundaryPolicy,
    ln_fw: LogDensity,
    ln_fy: LogDensity,
    alpha_vanishes: bool,
}

/// Recovered path for one point of the cube.
#[derive(Debug, Clone, PartialEq)]
pub struct PathTrace {
    /// Surplus just before each claim, `X_i = phi(t_i, xhat_{i-1})`.
    pub pre_jump: Vec<f64>,
    /// Surplus just after each surviving claim, `xhat_i = X_i (1 - beta_i)`.
    pub post_jump: Vec<f64>,
    pub times: Vec<f64>,
    pub claims: Vec<f64>,
}

#[inline]
fn nudge(v: f64) -> f64 {
    if v <= 0.0 {
        f64::from_bits(1)
    } else if v >= 1.0 {
        crate::lowdisc::ONE_MINUS_EPS
    } else {
        v
    }
}

impl IntegrandContext {
    pub fn new(model: ModelParams, k: usize) -> Result<Self> {
        Self::with_flow(model, FlowEvaluator::new(model.premium), k)
    }

    pub fn with_flow(model: ModelParams, flow: FlowEvaluator, k: usize) -> Result<Self> {
        model.validate()?;
        flow.validate()?;
        if flow.premium != model.premium {
            return Err(Error::InvalidParameter(
                "flow evaluator and model use different premium rates".into(),
            ));
        }
        if k == 0 {
            return Err(Error::InvalidParameter("level k must be at least 1".into()));
        }
        Ok(IntegrandContext {
            model,
            flow,
            k,
            boundary_policy: BoundaryPolicy::Nudge,
            ln_fw: LogDensity::new(&model.interarrival),
            ln_fy: LogDensity::new(&model.claim),
            alpha_vanishes: model.delta + model.interarrival.rate() > 1.0,
        })
    }

    pub fn with_policy(mut self, policy: BoundaryPolicy) -> Self {
        self.boundary_policy = policy;
        self
    }

    /// Same model and policy at another level.
    pub fn at_level(&self, k: usize) -> Result<Self> {
        Ok(IntegrandContext::with_flow(self.model, self.flow, k)?.with_policy(self.boundary_policy))
    }

    pub fn dimension(&self) -> usize {
        2 * self.k
    }

    fn check(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: u.len(),
            });
        }
        for &v in u {
            if !(0.0..=1.0).contains(&v) {
                return Err(crate::error::domain("u", v, "[0, 1]"));
            }
            if self.boundary_policy == BoundaryPolicy::Reject && (v == 0.0 || v == 1.0) {
                return Err(crate::error::domain("u", v, "(0, 1)"));
            }
        }
        Ok(())
    }

    /// Integrand value; `u` must have length `2k` with entries in `[0, 1]`.
    /// Boundary coordinates are nudged regardless of the policy.
    #[inline]
    pub fn evaluate(&self, u: &[f64]) -> f64 {
        debug_assert_eq!(u.len(), 2 * self.k);
        let k = self.k;
        let penalty = self.model.penalty;
        if penalty.is_zero() {
            return 0.0;
        }
        let one_minus_delta = 1.0 - self.model.delta;
        let mut log = 0.0;
        let mut s = self.model.x;
        for i in 0..k {
            if u[i] <= 0.0 && self.alpha_vanishes {
                return 0.0;
            }
            let t = -nudge(u[i]).ln();
            // alpha^(delta - 1) f_W(t) with alpha = e^{-t}
            log += one_minus_delta * t + self.ln_fw.eval(t);
            let x_pre = self.flow.flow_unchecked(t, s);
            if i + 1 < k {
                let beta = nudge(u[k + i]);
                let y = beta * x_pre;
                log += self.ln_fy.eval(y) + x_pre.ln();
                s = x_pre * (1.0 - beta);
            } else {
                let ln_beta = nudge(u[k + i]).ln();
                log += self.ln_fy.eval(x_pre - ln_beta) - ln_beta;
                let w = penalty.eval(-ln_beta, x_pre);
                if w == 0.0 || log == f64::NEG_INFINITY {
                    return 0.0;
                }
                return log.exp() * w;
            }
        }
        unreachable!("loop returns at the last level")
    }

    /// Checked evaluation honouring the boundary policy.
    pub fn try_evaluate(&self, u: &[f64]) -> Result<f64> {
        self.check(u)?;
        Ok(self.evaluate(u))
    }

    /// Evaluates many points, in parallel.
    pub fn evaluate_many(&self, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        points.par_iter().map(|p| self.try_evaluate(p)).collect()
    }
}

/// Recovers claim times, claim sizes and the surplus path encoded by `u`.
pub fn recover_variables(u: &[f64], ctx: &IntegrandContext) -> Result<PathTrace> {
    ctx.check(u)?;
    let k = ctx.k;
    let mut trace = PathTrace {
        pre_jump: Vec::with_capacity(k),
        post_jump: Vec::with_capacity(k.saturating_sub(1)),
        times: Vec::with_capacity(k),
        claims: Vec::with_capacity(k),
    };
    let mut s = ctx.model.x;
    for i in 0..k {
        let t = -nudge(u[i]).ln();
        let x_pre = ctx.flow.flow_unchecked(t, s);
        trace.times.push(t);
        trace.pre_jump.push(x_pre);
        let beta = nudge(u[k + i]);
        if i + 1 < k {
            trace.claims.push(beta * x_pre);
            s = x_pre * (1.0 - beta);
            trace.post_jump.push(s);
        } else {
            trace.claims.push(x_pre - beta.ln());
        }
    }
    Ok(trace)
}

/// The transformed integrand at `u`.
#[allow(non_snake_case)]
pub fn integrand_F(u: &[f64], ctx: &IntegrandContext) -> Result<f64> {
    ctx.try_evaluate(u)
}

/// Central second differences of the integrand at `u` with step `h`.
/// Every coordinate must lie farther than `h` from the cube boundary.
pub fn hessian_entries_numeric(u: &[f64], ctx: &IntegrandContext, h: f64) -> Result<Vec<Vec<f64>>> {
    ctx.check(u)?;
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {h}")));
    }
    if u.iter().any(|&v| v <= h || v >= 1.0 - h) {
        return Err(Error::BoundaryProximity { step: h });
    }
    let n = u.len();
    let mut out = vec![vec![0.0; n]; n];
    for (i, row) in out.iter_mut().enumerate() {
        hessian_row_into(u, ctx, h, i, row);
    }
    Ok(out)
}

/// Row `i` of the numeric Hessian; no boundary checks.
pub(crate) fn hessian_row_into(u: &[f64], ctx: &IntegrandContext, h: f64, i: usize, row: &mut [f64]) {
    let mut p = u.to_vec();
    let f0 = ctx.evaluate(u);
    let inv = 1.0 / (h * h);
    for (j, entry) in row.iter_mut().enumerate() {
        if i == j {
            p[i] = u[i] + h;
            let fp = ctx.evaluate(&p);
            p[i] = u[i] - h;
            let fm = ctx.evaluate(&p);
            p[i] = u[i];
            *entry = (fp - 2.0 * f0 + fm) * inv;
        } else {
            let mut corner = |si: f64, sj: f64| {
                p[i] = u[i] + si * h;
                p[j] = u[j] + sj * h;
                let v = ctx.evaluate(&p);
                p[i] = u[i];
                p[j] = u[j];
                v
            };
            let fpp = corner(1.0, 1.0);
            let fpm = corner(1.0, -1.0);
            let fmp = corner(-1.0, 1.0);
            let fmm = corner(-1.0, -1.0);
            *entry = (fpp - fpm - fmp + fmm) * 0.25 * inv;
        }
    }
}
