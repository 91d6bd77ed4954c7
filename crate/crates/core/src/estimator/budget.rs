use serde::{Deserialize, Serialize};

use super::{contraction_factor, tail_bound, TailBound};
use crate::error::{Error, Result};
use crate::integrand::{variation_bound, IntegrandContext, VariationBound};
use crate::lowdisc::{generate, isotropic_discrepancy_lower_bound, PointSetSpec};
use crate::premium_flow::FlowEvaluator;
use crate::quad;
use crate::risk_model::{truncation_point, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetOptions {
    /// Points per axis for the Hessian sweep of the variation bound.
    pub variation_grid: usize,
    /// Levels above this get no variation estimate.
    pub variation_max_level: usize,
    /// Effort passed to the isotropic-discrepancy lower bound.
    pub discrepancy_effort: usize,
    /// At most this many points of each level enter the discrepancy bound.
    pub discrepancy_max_points: usize,
    /// Grid size in `z` for `sup_z H(z)`.
    pub banach_grid: usize,
}

impl Default for BudgetOptions {
    fn default() -> Self {
        BudgetOptions {
            variation_grid: 10,
            variation_max_level: 2,
            discrepancy_effort: 64,
            discrepancy_max_points: 4096,
            banach_grid: 16,
        }
    }
}

/// One level's Koksma-Hlawka type term. The discrepancy is a lower bound on
/// the isotropic discrepancy, so the product is indicative only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QmcTerm {
    pub k: usize,
    /// `None` when the level exceeds `variation_max_level`.
    pub variation: Option<VariationBound>,
    pub discrepancy: f64,
    pub product: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub qmc_terms: Vec<QmcTerm>,
    /// `L^n / (1 - L) sup_z H(z)`; absent when `delta = 0`.
    pub banach_term: Option<f64>,
    pub tail_term: TailBound,
    pub contraction: f64,
    /// Estimate of `sup_z H(z)`, the sup norm of one application of the
    /// operator to `v = 0`.
    pub one_claim_sup: f64,
    pub notes: String,
}

/// Geometric pieces `[lo, lo+1], [lo+1, lo+2], [lo+2, lo+4], ...` up to `cut`.
fn pieces(lo: f64, cut: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut a = lo;
    let mut width = 1.0;
    while a < cut {
        let b = (a + width).min(cut);
        out.push((a, b));
        a = b;
        width *= 2.0;
    }
    out
}

/// `H(z) = E_z[e^{-delta W} w(Y - X, X); Y > X]` with `X = phi(W, z)`:
/// the discounted penalty for ruin at the first claim, by nested adaptive
/// quadrature in `(t, s)` with `y = X + s`.
pub fn one_claim_value(model: &ModelParams, z: f64) -> Result<f64> {
    let m = model.with_x(z);
    m.validate()?;
    let flow = FlowEvaluator::new(m.premium);
    let cut_y = truncation_point(&m.claim)?;
    let cut_w = truncation_point(&m.interarrival)?;
    let inner = |x: f64| -> f64 {
        let f = |s: f64| m.penalty.eval(s, x) * m.claim.density(x + s);
        pieces(0.0, (cut_y - x).max(1.0))
            .into_iter()
            .map(|(a, b)| quad::integrate(f, a, b, 1e-15, 1e-11).0)
            .sum()
    };
    let outer = |t: f64| -> f64 {
        let w = (-m.delta * t).exp() * m.interarrival.density(t);
        if w == 0.0 {
            return 0.0;
        }
        w * inner(flow.flow_unchecked(t, z))
    };
    let p = m.premium;
    let t_entry = ((p.blend_start() - z) / p.c_tilde).max(0.0);
    let mut total = 0.0;
    if t_entry > 0.0 {
        total += quad::integrate(outer, 0.0, t_entry.min(cut_w), 1e-14, 1e-10).0;
    }
    if cut_w > t_entry {
        // the blend is crossed within about epsilon / c_tilde of entry
        let fast = (t_entry + 10.0 * p.epsilon / p.c_tilde).min(cut_w);
        total += quad::integrate(outer, t_entry, fast, 1e-14, 1e-10).0;
        for (a, b) in pieces(fast, cut_w) {
            total += quad::integrate(outer, a, b, 1e-14, 1e-10).0;
        }
    }
    Ok(total)
}

/// `max_z H(z)` over `z = a i / grid`, `i < grid`.
pub fn one_claim_sup(model: &ModelParams, grid: usize) -> Result<f64> {
    if grid < 2 {
        return Err(Error::InvalidParameter(format!("grid must be at least 2, got {grid}")));
    }
    let a = model.premium.a;
    let mut sup = 0.0f64;
    for i in 0..grid {
        sup = sup.max(one_claim_value(model, a * i as f64 / grid as f64)?);
    }
    Ok(sup)
}

/// Three-part error budget for the estimate built from `specs` (one per
/// level, starting at level 1) with the model and flow of `template`.
pub fn error_budget(
    specs: &[PointSetSpec],
    template: &IntegrandContext,
    m_prime: f64,
    options: &BudgetOptions,
) -> Result<ErrorBudget> {
    let model = &template.model;
    let n = specs.len();
    let mut qmc_terms = Vec::with_capacity(n);
    for (i, spec) in specs.iter().enumerate() {
        let k = i + 1;
        let ctx = template.at_level(k)?;
        if spec.dimension != ctx.dimension() {
            return Err(Error::DimensionMismatch {
                expected: ctx.dimension(),
                got: spec.dimension,
            });
        }
        let variation = (k <= options.variation_max_level || model.penalty.is_zero())
            .then(|| variation_bound(&ctx, options.variation_grid));
        let mut sub = spec.clone();
        sub.count = spec.count.min(options.discrepancy_max_points);
        let points = generate(&sub)?;
        let discrepancy = isotropic_discrepancy_lower_bound(&points, options.discrepancy_effort)?;
        let product = variation.and_then(|v| v.value()).map(|v| v * discrepancy);
        qmc_terms.push(QmcTerm {
            k,
            variation,
            discrepancy,
            product,
        });
    }
    let contraction = contraction_factor(model);
    let h_sup = if model.penalty.is_zero() {
        0.0
    } else {
        one_claim_sup(model, options.banach_grid)?
    };
    let banach_term = (model.delta > 0.0 && contraction < 1.0)
        .then(|| contraction.powi(n as i32) / (1.0 - contraction) * h_sup);
    let tail_term = tail_bound(n, model, m_prime);
    let mut notes = String::from(
        "qmc terms pair a variation estimate with a lower bound on the isotropic discrepancy; indicative only",
    );
    if banach_term.is_none() {
        notes.push_str("; delta = 0: no contraction, banach term omitted");
    }
    if qmc_terms.iter().any(|t| t.variation.is_some_and(|v| v.is_unbounded())) {
        notes.push_str("; some levels have an integrand of unbounded variation");
    }
    Ok(ErrorBudget {
        qmc_terms,
        banach_term,
        tail_term,
        contraction,
        one_claim_sup: h_sup,
        notes,
    })
}
