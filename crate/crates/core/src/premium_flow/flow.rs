use serde::{Deserialize, Serialize};

use super::rk;
use super::BarrierPremium;
use crate::error::{domain, Error, Result};

pub const DEFAULT_ODE_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_STEP: f64 = 0.1;

/// How [`FlowEvaluator::flow`] obtains `phi(t, s)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowMethod {
    /// Invert the closed-form travel time through the blend region.
    #[default]
    TimePotential,
    /// Adaptive Dormand-Prince integration through the blend region.
    RungeKutta,
}

/// Flow value with its first and second derivative in the initial value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowState {
    pub value: f64,
    pub first: f64,
    pub second: f64,
}

/// Evaluates `phi(t, s)`, the solution of `x' = c(x)`, `x(0) = s`.
///
/// Below `a - epsilon` the flow is the straight line `s + c_tilde t`; the
/// entry time into the blend region is computed exactly. Inside the blend the
/// surplus approaches `a` without reaching it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowEvaluator {
    pub premium: BarrierPremium,
    pub ode_tolerance: f64,
    pub max_step: f64,
    #[serde(default)]
    pub method: FlowMethod,
}

// Antiderivative of 1 / (v^3 (6v^2 - 15v + 10)).
const LOG_V: f64 = 33.0 / 200.0;
const LOG_Q: f64 = 33.0 / 400.0;
const INV_V: f64 = 3.0 / 20.0;
const INV_V2: f64 = 1.0 / 20.0;

#[inline]
fn potential(v: f64) -> f64 {
    let sqrt15 = 15f64.sqrt();
    LOG_V * v.ln() - LOG_Q * (v * v - 2.5 * v + 5.0 / 3.0).ln()
        + 9.0 * sqrt15 / 200.0 * (sqrt15 * (4.0 * v - 5.0) / 5.0).atan()
        - INV_V / v
        - INV_V2 / (v * v)
}

/// `potential(1.0)`.
const POTENTIAL_AT_ONE: f64 = -0.1670432796509789;

/// Normalized travel time from the blend entry (`v = 1`) to gap `v`:
/// `H(v) = integral_v^1 du / S(u)`, `S(u) = u^3 (6u^2 - 15u + 10)`.
#[inline]
pub(crate) fn travel_time(v: f64) -> f64 {
    POTENTIAL_AT_ONE - potential(v)
}

/// Solves `travel_time(v) = h` for `v` in `(0, 1]`, Newton in `w = 1/v`
/// safeguarded by bisection on a bracket.
pub(crate) fn invert_travel_time(h: f64) -> f64 {
    if h <= 0.0 {
        return 1.0;
    }
    // H(w) >= (w^2 - 1) / 20 on w >= 1
    let mut lo = 1.0f64;
    let mut hi = (1.0 + 20.0 * h).sqrt().max(1.0 + 1e-12);
    // leading asymptotics H ~ w^2/20 + 3w/20
    let mut w = (0.5 * (-3.0 + (9.0 + 80.0 * h).sqrt())).clamp(lo, hi);
    for _ in 0..100 {
        let v = 1.0 / w;
        let g = travel_time(v) - h;
        if g > 0.0 {
            hi = w;
        } else {
            lo = w;
        }
        let slope = w * w * w / (10.0 * w * w - 15.0 * w + 6.0);
        let mut next = w - g / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - w).abs() <= 4.0 * f64::EPSILON * w || hi - lo <= 4.0 * f64::EPSILON * hi {
            w = next;
            break;
        }
        w = next;
    }
    1.0 / w
}

impl FlowEvaluator {
    pub fn new(premium: BarrierPremium) -> Self {
        FlowEvaluator {
            premium,
            ode_tolerance: DEFAULT_ODE_TOLERANCE,
            max_step: DEFAULT_MAX_STEP,
            method: FlowMethod::TimePotential,
        }
    }

    pub fn with_method(mut self, method: FlowMethod) -> Self {
        self.method = method;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.premium.validate()?;
        if !(self.ode_tolerance > 0.0) || !(self.max_step > 0.0) {
            return Err(Error::InvalidParameter(
                "ode_tolerance and max_step must be positive".into(),
            ));
        }
        Ok(())
    }

    fn check(&self, t: f64, s: f64) -> Result<()> {
        if !(t >= 0.0) {
            return Err(domain("t", t, "[0, inf)"));
        }
        if !(s >= 0.0 && s <= self.premium.a) {
            return Err(domain("s", s, format!("[0, {}]", self.premium.a)));
        }
        Ok(())
    }

    /// `phi(t, s)` for `t >= 0`, `s` in `[0, a]`.
    pub fn flow(&self, t: f64, s: f64) -> Result<f64> {
        self.check(t, s)?;
        match self.method {
            FlowMethod::TimePotential => Ok(self.premium.a - self.gap_unchecked(t, s)),
            FlowMethod::RungeKutta => Ok(self.integrate(t, s)?.value),
        }
    }

    /// Distance to the barrier, `a - phi(t, s)`, evaluated without the
    /// cancellation of forming `phi` first.
    pub fn gap(&self, t: f64, s: f64) -> Result<f64> {
        self.check(t, s)?;
        Ok(self.gap_unchecked(t, s))
    }

    /// Hot-path flow value; inputs are assumed valid.
    #[inline]
    pub(crate) fn flow_unchecked(&self, t: f64, s: f64) -> f64 {
        let p = &self.premium;
        let entry = p.blend_start();
        if s < entry {
            let reach = s + p.c_tilde * t;
            if reach <= entry {
                return reach;
            }
        }
        p.a - self.gap_unchecked(t, s)
    }

    #[inline]
    pub(crate) fn gap_unchecked(&self, t: f64, s: f64) -> f64 {
        let p = &self.premium;
        let entry = p.blend_start();
        let (v0, remaining) = if s < entry {
            let t_entry = (entry - s) / p.c_tilde;
            if t <= t_entry {
                return p.a - (s + p.c_tilde * t);
            }
            (1.0, t - t_entry)
        } else {
            ((p.a - s) / p.epsilon, t)
        };
        if v0 <= 0.0 {
            return 0.0;
        }
        let h = travel_time(v0) + p.c_tilde * remaining / p.epsilon;
        p.epsilon * invert_travel_time(h)
    }

    /// Flow with `y = d phi / ds` and `z = d^2 phi / ds^2`, from the first and
    /// second variational equations integrated jointly with the state.
    pub fn flow_with_sensitivities(&self, t: f64, s: f64) -> Result<FlowState> {
        self.check(t, s)?;
        self.integrate(t, s)
    }

    pub fn flow_sensitivity_first(&self, t: f64, s: f64) -> Result<f64> {
        Ok(self.flow_with_sensitivities(t, s)?.first)
    }

    pub fn flow_sensitivity_second(&self, t: f64, s: f64) -> Result<f64> {
        Ok(self.flow_with_sensitivities(t, s)?.second)
    }

    /// Piecewise integration: analytic through the linear region (where
    /// `c' = c'' = 0`, so `y = 1`, `z = 0`), Dormand-Prince on the gap
    /// `u = a - x` inside the blend with steps capped at `epsilon / 10`.
    fn integrate(&self, t: f64, s: f64) -> Result<FlowState> {
        let p = self.premium;
        let entry = p.blend_start();
        let (u0, remaining) = if s < entry {
            let t_entry = (entry - s) / p.c_tilde;
            if t <= t_entry {
                return Ok(FlowState {
                    value: s + p.c_tilde * t,
                    first: 1.0,
                    second: 0.0,
                });
            }
            (p.epsilon, t - t_entry)
        } else {
            (p.a - s, t)
        };
        if u0 <= 0.0 {
            // c(a) = c'(a) = c''(a) = 0: the barrier is a fixed point with y = 1, z = 0
            return Ok(FlowState {
                value: p.a,
                first: 1.0,
                second: 0.0,
            });
        }
        let rhs = |state: &[f64; 3]| -> [f64; 3] {
            let x = p.a - state[0];
            let d1 = p.rate_derivative(x);
            let d2 = p.rate_second_derivative(x);
            [
                -p.rate(x),
                d1 * state[1],
                d2 * state[1] * state[1] + d1 * state[2],
            ]
        };
        let cap = self.max_step.min(p.epsilon / 10.0);
        let end = rk::integrate(rhs, [u0, 1.0, 0.0], remaining, self.ode_tolerance * 1e-2, cap)?;
        Ok(FlowState {
            value: p.a - end[0],
            first: end[1],
            second: end[2],
        })
    }
}

#[cfg(test)]
mod tests {
    #[test]
    fn cached_potential_constant() {
        assert!((POTENTIAL_AT_ONE - potential(1.0)).abs() <= 1e-16);
    }

    use super::*;

    fn base() -> FlowEvaluator {
        FlowEvaluator::new(BarrierPremium::new(2.0, 3.0, 0.001).unwrap())
    }

    /// `H(v)` by composite Simpson on a geometric grid, independent of the
    /// closed-form antiderivative.
    fn travel_time_quadrature(v: f64) -> f64 {
        let s = |u: f64| 1.0 / (u * u * u * (6.0 * u * u - 15.0 * u + 10.0));
        let n = 20_000;
        let (la, lb) = (v.ln(), 0.0f64);
        let h = (lb - la) / n as f64;
        let g = |l: f64| s(l.exp()) * l.exp();
        let mut acc = g(la) + g(lb);
        for i in 1..n {
            acc += g(la + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    #[test]
    fn closed_form_travel_time_matches_quadrature() {
        for v in [0.999, 0.9, 0.5, 0.1, 0.01, 0.001] {
            let q = travel_time_quadrature(v);
            assert!((travel_time(v) - q).abs() <= 1e-9 * q.max(1.0), "v={v}");
        }
        assert!(travel_time(1.0).abs() < 1e-15);
    }

    #[test]
    fn inversion_round_trips() {
        for v in [1.0, 0.9999, 0.7, 0.3, 0.05, 1e-3, 1e-5] {
            let back = invert_travel_time(travel_time(v));
            assert!((back - v).abs() <= 1e-13 * v.max(1e-3), "v={v} back={back}");
        }
    }

    #[test]
    fn linear_region() {
        let ev = base();
        assert_eq!(ev.flow(1.0, 0.0).unwrap(), 2.0);
        assert_eq!(ev.flow(0.0, 1.7).unwrap(), 1.7);
        assert_eq!(ev.flow(10.0, 3.0).unwrap(), 3.0);
    }

    #[test]
    fn domain_errors() {
        let ev = base();
        assert!(ev.flow(1.0, -0.1).is_err());
        assert!(ev.flow(1.0, 3.1).is_err());
        assert!(ev.flow(-1.0, 1.0).is_err());
        assert!(ev.flow_with_sensitivities(1.0, 3.5).is_err());
    }

    #[test]
    fn methods_agree() {
        let tp = base();
        let rk = base().with_method(FlowMethod::RungeKutta);
        for &s in &[0.0, 1.2, 2.9985, 2.999, 2.9995, 2.99999] {
            for &t in &[0.0, 0.3, 0.9, 1.0, 2.5, 7.0] {
                let a = tp.flow(t, s).unwrap();
                let b = rk.flow(t, s).unwrap();
                assert!((a - b).abs() <= 1e-10, "t={t} s={s}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn entering_the_blend_region() {
        let ev = base();
        let x = ev.flow(1.0, 1.2).unwrap();
        assert!(x > 2.999 && x < 3.0);
        // after entering at t = 0.8995 the gap closes like 1 / sqrt(2 * 10 c t / eps^3)
        let gap = ev.gap(1.0, 1.2).unwrap();
        let approx = (0.001f64.powi(3) / (2.0 * 10.0 * 2.0 * 0.1005)).sqrt();
        assert!((gap / approx - 1.0).abs() < 0.2, "gap {gap} approx {approx}");
    }

    #[test]
    fn sensitivities_in_linear_region() {
        let ev = base();
        let st = ev.flow_with_sensitivities(0.5, 1.0).unwrap();
        assert_eq!((st.value, st.first, st.second), (2.0, 1.0, 0.0));
        let st0 = ev.flow_with_sensitivities(0.0, 2.9995).unwrap();
        assert_eq!((st0.value, st0.first, st0.second), (2.9995, 1.0, 0.0));
    }

    #[test]
    fn sensitivities_match_autonomous_identity() {
        // for x' = c(x): y = c(phi)/c(s), z = c'(phi) y / c(s) - c(phi) c'(s) / c(s)^2
        let ev = base();
        let p = ev.premium;
        for &(t, s) in &[(1.0, 2.9995), (0.2, 2.9991), (3.0, 2.9999), (1.0, 2.5), (0.6, 1.9)] {
            let st = ev.flow_with_sensitivities(t, s).unwrap();
            let phi = st.value;
            let y = p.rate(phi) / p.rate(s);
            let z = p.rate_derivative(phi) * y / p.rate(s)
                - p.rate(phi) * p.rate_derivative(s) / (p.rate(s) * p.rate(s));
            assert!((st.first - y).abs() <= 1e-8 * (1.0 + y.abs()), "t={t} s={s} y {} vs {y}", st.first);
            assert!((st.second - z).abs() <= 1e-6 * (1.0 + z.abs()), "t={t} s={s} z {} vs {z}", st.second);
        }
    }
}
