//! Inter-arrival and claim-size laws, penalty functions and the model
//! parameter bundle.

use rand::Rng;
use rand_distr::{Distribution as _, Exp, Gamma as GammaSampler};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Gamma};
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Error, Result};
use crate::premium_flow::BarrierPremium;
use crate::quad;

/// A law on `[0, inf)` with a density. Anything implementing this can be fed
/// to [`integrability_bound_for`].
pub trait Law {
    fn density(&self, v: f64) -> f64;
    fn cdf(&self, v: f64) -> f64;
    fn mean(&self) -> f64;
}

/// Built-in positive laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    Exponential { rate: f64 },
    Gamma { shape: f64, rate: f64 },
}

impl Distribution {
    pub fn exponential(rate: f64) -> Self {
        Distribution::Exponential { rate }
    }

    pub fn gamma(shape: f64, rate: f64) -> Self {
        Distribution::Gamma { shape, rate }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Distribution::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            Distribution::Gamma { shape, rate } => {
                shape > 0.0 && shape.is_finite() && rate > 0.0 && rate.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "distribution parameters must be positive and finite: {self:?}"
            )))
        }
    }

    /// Rate parameter (`lambda` or `mu` for the exponential law).
    pub fn rate(&self) -> f64 {
        match *self {
            Distribution::Exponential { rate } | Distribution::Gamma { rate, .. } => rate,
        }
    }

    pub fn density(&self, v: f64) -> f64 {
        if v < 0.0 {
            return 0.0;
        }
        match *self {
            Distribution::Exponential { rate } => rate * (-rate * v).exp(),
            Distribution::Gamma { shape, rate } => {
                if v == 0.0 {
                    return if shape < 1.0 {
                        f64::INFINITY
                    } else if shape == 1.0 {
                        rate
                    } else {
                        0.0
                    };
                }
                self.ln_density(v).exp()
            }
        }
    }

    /// `ln f(v)` for `v > 0`.
    #[inline]
    pub fn ln_density(&self, v: f64) -> f64 {
        match *self {
            Distribution::Exponential { rate } => rate.ln() - rate * v,
            Distribution::Gamma { shape, rate } => {
                shape * rate.ln() + (shape - 1.0) * v.ln() - rate * v - ln_gamma(shape)
            }
        }
    }

    pub fn cdf(&self, v: f64) -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        match *self {
            Distribution::Exponential { rate } => -(-rate * v).exp_m1(),
            Distribution::Gamma { shape, rate } => Gamma::new(shape, rate)
                .map(|g| g.cdf(v))
                .unwrap_or(f64::NAN),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Distribution::Exponential { rate } => 1.0 / rate,
            Distribution::Gamma { shape, rate } => shape / rate,
        }
    }

    /// `E[exp(-delta W)]`.
    pub fn laplace(&self, delta: f64) -> f64 {
        match *self {
            Distribution::Exponential { rate } => rate / (rate + delta),
            Distribution::Gamma { shape, rate } => (rate / (rate + delta)).powf(shape),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Distribution::Exponential { rate } => Exp::new(rate).expect("validated rate").sample(rng),
            Distribution::Gamma { shape, rate } => GammaSampler::new(shape, 1.0 / rate)
                .expect("validated parameters")
                .sample(rng),
        }
    }
}

impl Law for Distribution {
    fn density(&self, v: f64) -> f64 {
        Distribution::density(self, v)
    }
    fn cdf(&self, v: f64) -> f64 {
        Distribution::cdf(self, v)
    }
    fn mean(&self) -> f64 {
        Distribution::mean(self)
    }
}

/// Closed-form density; `0` for `v < 0`.
pub fn density(d: &Distribution, v: f64) -> f64 {
    d.density(v)
}

/// Penalty `w(y, z)` of the deficit `y` and the surplus `z` just before ruin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Penalty {
    /// `w = 1`: the Laplace transform of the ruin time.
    ConstantOne,
    /// `w = y`.
    Deficit,
    /// `w = y^k z^l`.
    Monomial { k: u32, l: u32 },
    /// `w = 0`.
    Zero,
}

impl Penalty {
    /// Unchecked evaluation.
    #[inline]
    pub fn eval(&self, y: f64, z: f64) -> f64 {
        match *self {
            Penalty::ConstantOne => 1.0,
            Penalty::Deficit => y,
            Penalty::Monomial { k, l } => y.powi(k as i32) * z.powi(l as i32),
            Penalty::Zero => 0.0,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Penalty::ConstantOne => "constant_one".into(),
            Penalty::Deficit => "deficit".into(),
            Penalty::Monomial { k, l } => format!("monomial({k},{l})"),
            Penalty::Zero => "zero".into(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Penalty::Zero)
    }
}

/// `w(y, z)` for `y >= 0`, `z` in `[0, a)`.
pub fn penalty_eval(p: &Penalty, y: f64, z: f64, a: f64) -> Result<f64> {
    if !(y >= 0.0) {
        return Err(domain("y", y, "[0, inf)"));
    }
    if !(z >= 0.0 && z < a) {
        return Err(domain("z", z, format!("[0, {a})")));
    }
    Ok(p.eval(y, z))
}

/// Everything that defines one Gerber-Shiu function value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub x: f64,
    pub premium: BarrierPremium,
    pub interarrival: Distribution,
    pub claim: Distribution,
    pub delta: f64,
    pub penalty: Penalty,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        self.premium.validate()?;
        self.interarrival.validate()?;
        self.claim.validate()?;
        if !(self.x >= 0.0 && self.x < self.premium.a) {
            return Err(domain("x", self.x, format!("[0, {})", self.premium.a)));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(domain("delta", self.delta, "[0, inf)"));
        }
        Ok(())
    }

    pub fn with_x(mut self, x: f64) -> Self {
        self.x = x;
        self
    }
}

const TAIL_MASS: f64 = 1e-12;
const MAX_DOUBLINGS: usize = 80;

pub(crate) fn truncation_point<L: Law + ?Sized>(law: &L) -> Result<f64> {
    let mut b = 1.0f64;
    for _ in 0..1100 {
        if law.cdf(b) >= 1.0 - TAIL_MASS {
            return Ok(b);
        }
        b *= 2.0;
    }
    Err(Error::Integrability("law has no finite truncation point".into()))
}

fn piece<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> f64 {
    quad::integrate(f, lo, hi, 1e-14, 1e-11).0
}

/// `integral_0^inf |w(|z - y|, z)| f(y) dy`, truncated where the remaining
/// mass is below `1e-12` and extended by doubling until the increments are
/// negligible. Increments that stop shrinking signal divergence.
pub fn penalty_moment<L: Law + ?Sized>(penalty: &Penalty, law: &L, z: f64) -> Result<f64> {
    let integrand = |y: f64| penalty.eval((z - y).abs(), z).abs() * law.density(y);
    let cut = truncation_point(law)?.max(z + 1.0);
    let mut total = piece(&integrand, 0.0, z);
    let mut lo = z;
    let mut hi = z + 1.0;
    while hi < cut {
        total += piece(&integrand, lo, hi);
        lo = hi;
        hi = z + 2.0 * (hi - z);
    }
    total += piece(&integrand, lo, cut);
    let mut last = f64::INFINITY;
    let mut rising = 0;
    let mut lo = cut;
    for _ in 0..MAX_DOUBLINGS {
        let hi = 2.0 * lo;
        let inc = piece(&integrand, lo, hi);
        if !inc.is_finite() {
            return Err(Error::Integrability(format!("tail integral at z = {z} is not finite")));
        }
        total += inc;
        if inc <= 1e-12 * (1.0 + total) {
            return Ok(total);
        }
        rising = if inc >= last { rising + 1 } else { 0 };
        if rising >= 3 {
            break;
        }
        last = inc;
        lo = hi;
    }
    Err(Error::Integrability(format!(
        "integral of |w(|z - y|, z)| f_Y(y) grows without bound at z = {z}"
    )))
}

/// Supremum over `z = a i / grid_size`, `i < grid_size`, of the penalty
/// moment. Doubling `grid_size` keeps all previous grid points.
pub fn integrability_bound_for<L: Law + ?Sized>(
    penalty: &Penalty,
    law: &L,
    a: f64,
    grid_size: usize,
) -> Result<f64> {
    if grid_size < 2 {
        return Err(Error::InvalidParameter(format!(
            "grid_size must be at least 2, got {grid_size}"
        )));
    }
    let mut sup = 0.0f64;
    for i in 0..grid_size {
        let z = a * i as f64 / grid_size as f64;
        sup = sup.max(penalty_moment(penalty, law, z)?);
    }
    Ok(sup)
}

/// The bound `M` on `sup_z integral |w(|z - y|, z)| f_Y(y) dy` for the
/// model's penalty and claim law.
pub fn integrability_bound(model: &ModelParams, grid_size: usize) -> Result<f64> {
    model.validate()?;
    integrability_bound_for(&model.penalty, &model.claim, model.premium.a, grid_size)
}
