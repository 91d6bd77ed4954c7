//! Known values for two parameter sets.

use serde::Serialize;

use crate::risk_model::{Distribution, ModelParams, Penalty};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceValue {
    pub label: &'static str,
    pub value: f64,
    pub provenance: &'static str,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * b.abs().max(1.0)
}

/// Reference value for `model`, if it is one of the anchored cases:
///
/// * `w = 1`, `x = 1.2`, `lambda = 1`, `mu = 0.8`, `delta = 0.05`,
///   `c_tilde = 2`, `a = 3` (both laws exponential): 0.7577;
/// * `w = y`, `delta = 0`, exponential claims with rate `mu`: `1 / mu`.
///
/// Both refer to the process with a hard barrier; the smooth premium adds a
/// small methodic difference.
pub fn reference_for(model: &ModelParams) -> Option<ReferenceValue> {
    let p = &model.premium;
    if let (Distribution::Exponential { rate: lam }, Distribution::Exponential { rate: mu }) =
        (model.interarrival, model.claim)
    {
        if model.penalty == Penalty::ConstantOne
            && close(model.x, 1.2)
            && close(lam, 1.0)
            && close(mu, 0.8)
            && close(model.delta, 0.05)
            && close(p.c_tilde, 2.0)
            && close(p.a, 3.0)
        {
            return Some(ReferenceValue {
                label: "discounted time of ruin",
                value: 0.7577,
                provenance: "analytic value for the process reflected at the barrier a = 3",
            });
        }
    }
    if let Distribution::Exponential { rate: mu } = model.claim {
        let deficit = matches!(model.penalty, Penalty::Deficit | Penalty::Monomial { k: 1, l: 0 });
        if deficit && model.delta == 0.0 {
            return Some(ReferenceValue {
                label: "expected deficit at ruin",
                value: 1.0 / mu,
                provenance: "memorylessness of exponential claims; ruin is certain below a barrier",
            });
        }
    }
    None
}
