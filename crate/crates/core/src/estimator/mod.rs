//! Per-level (Q)MC estimates, their truncated sum, and error bounds.

mod budget;
mod simulate;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrand::IntegrandContext;
use crate::lowdisc::{mix_seed, PointSet, PointSetSpec, SequenceKind};
use crate::risk_model::ModelParams;

pub use budget::{
    error_budget, one_claim_value, one_claim_sup, BudgetOptions, ErrorBudget, QmcTerm,
};
pub use simulate::mc_reference_simulator;

/// Points per accumulation chunk. Chunks are summed in index order, so
/// results do not depend on the number of threads.
const CHUNK: usize = 1024;

/// Normal quantile for two-sided 95% intervals.
pub const Z95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelEstimate {
    pub k: usize,
    pub value: f64,
    pub points: usize,
    /// Sample standard error; pseudo-random point sets only.
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub per_level: Vec<LevelEstimate>,
    pub stderr: Option<f64>,
    pub ci95: Option<(f64, f64)>,
    pub budget: Option<ErrorBudget>,
}

impl Estimate {
    /// Sums level estimates. The standard error is the root-sum-square of
    /// the level errors when every level has one.
    pub fn combine(per_level: Vec<LevelEstimate>) -> Self {
        let all_mc = !per_level.is_empty() && per_level.iter().all(|l| l.stderr.is_some());
        let stderr = all_mc.then(|| {
            per_level
                .iter()
                .map(|l| l.stderr.unwrap().powi(2))
                .sum::<f64>()
                .sqrt()
        });
        Self::from_levels(per_level, stderr)
    }

    pub(crate) fn from_levels(per_level: Vec<LevelEstimate>, stderr: Option<f64>) -> Self {
        let value = per_level.iter().map(|l| l.value).sum();
        Estimate {
            value,
            per_level,
            stderr,
            ci95: stderr.map(|s| (value - Z95 * s, value + Z95 * s)),
            budget: None,
        }
    }
}

/// Running count, mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Moments {
    pub n: usize,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    #[inline]
    pub fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    pub fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * other.n as f64 / n as f64,
            m2: self.m2 + other.m2 + d * d * (self.n as f64 * other.n as f64) / n as f64,
        }
    }

    pub fn stderr(&self) -> Option<f64> {
        (self.n > 1).then(|| (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt())
    }
}

/// Average of the level-`ctx.k` integrand over the point set of `spec`.
pub fn estimate_level(spec: &PointSetSpec, ctx: &IntegrandContext) -> Result<LevelEstimate> {
    Ok(estimate_level_prefixes(spec, ctx, &[spec.count])?.remove(0))
}

/// Level estimates over the first `counts[j]` points of `spec`'s sequence.
/// Entry `j` is bit-identical to [`estimate_level`] on `spec` with
/// `count = counts[j]`, but full chunks are evaluated only once.
pub fn estimate_level_prefixes(
    spec: &PointSetSpec,
    ctx: &IntegrandContext,
    counts: &[usize],
) -> Result<Vec<LevelEstimate>> {
    if spec.dimension != ctx.dimension() {
        return Err(Error::DimensionMismatch {
            expected: ctx.dimension(),
            got: spec.dimension,
        });
    }
    if counts.contains(&0) {
        return Err(Error::EmptyPointSet);
    }
    let n_max = counts.iter().copied().max().unwrap_or(0);
    let mut full = spec.clone();
    full.count = n_max.max(spec.count);
    let set = PointSet::new(&full)?;
    let dim = ctx.dimension();
    let chunk = |lo: usize, hi: usize| {
        let mut u = vec![0.0; dim];
        let mut m = Moments::default();
        for i in lo..hi {
            set.fill(i, &mut u);
            m.push(ctx.evaluate(&u));
        }
        m
    };
    let whole: Vec<Moments> = (0..n_max / CHUNK)
        .into_par_iter()
        .map(|c| chunk(c * CHUNK, (c + 1) * CHUNK))
        .collect();
    counts
        .iter()
        .map(|&n| {
            let full_chunks = n / CHUNK;
            let mut total = whole[..full_chunks]
                .iter()
                .fold(Moments::default(), |acc, &m| acc.merge(m));
            if n % CHUNK != 0 {
                total = total.merge(chunk(full_chunks * CHUNK, n));
            }
            if !total.mean.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "level {} average is not finite",
                    ctx.k
                )));
            }
            Ok(LevelEstimate {
                k: ctx.k,
                value: total.mean,
                points: n,
                stderr: match spec.kind {
                    SequenceKind::Pseudorandom => total.stderr(),
                    _ => None,
                },
            })
        })
        .collect()
}

/// One point-set spec per level `k = 1..=n_levels`, dimension `2k`.
///
/// Level `k` gets the scramble seed `mix(seed, k)`. Pseudo-random sets
/// without a seed use seed 0, so levels are still independent streams.
pub fn level_specs(
    kind: SequenceKind,
    n_levels: usize,
    count: usize,
    seed: Option<u64>,
    skip: u64,
) -> Vec<PointSetSpec> {
    (1..=n_levels)
        .map(|k| {
            let base = PointSetSpec::new(kind, 2 * k, count).with_skip(skip);
            let seed = match (seed, kind) {
                (Some(s), _) => Some(s),
                (None, SequenceKind::Pseudorandom) => Some(0),
                (None, _) => None,
            };
            match seed {
                Some(s) => base.with_seed(mix_seed(s, k as u64)),
                None => base,
            }
        })
        .collect()
}

/// Sum of the per-level estimates for levels `1..=specs.len()`, using the
/// flow and boundary policy of `template` (its level is ignored).
pub fn estimate_levels(specs: &[PointSetSpec], template: &IntegrandContext) -> Result<Estimate> {
    let mut per_level = Vec::with_capacity(specs.len());
    for (i, spec) in specs.iter().enumerate() {
        let ctx = template.at_level(i + 1)?;
        per_level.push(estimate_level(spec, &ctx)?);
    }
    Ok(Estimate::combine(per_level))
}

/// Truncated Gerber-Shiu estimate `sum_{k=1}^{n_levels}` of the level
/// integrals. `per_level_specs[k-1]` must have dimension `2k`.
pub fn estimate_gerber_shiu(
    n_levels: usize,
    per_level_specs: &[PointSetSpec],
    model: &ModelParams,
) -> Result<Estimate> {
    if per_level_specs.len() != n_levels {
        return Err(Error::InvalidParameter(format!(
            "expected {n_levels} point-set specs, got {}",
            per_level_specs.len()
        )));
    }
    if n_levels == 0 {
        model.validate()?;
        return Ok(Estimate::from_levels(Vec::new(), None));
    }
    let template = IntegrandContext::new(*model, 1)?;
    estimate_levels(per_level_specs, &template)
}

/// Lipschitz constant of the one-claim operator, `E[exp(-delta W)]`.
pub fn contraction_factor(model: &ModelParams) -> f64 {
    model.interarrival.laplace(model.delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    pub value: f64,
    /// Set when `delta = 0`: the bound does not decay with `n`.
    pub no_decay: bool,
}

/// `M' L^n` with `L` the contraction factor.
pub fn tail_bound(n: usize, model: &ModelParams, m_prime: f64) -> TailBound {
    if model.delta == 0.0 {
        return TailBound {
            value: m_prime,
            no_decay: true,
        };
    }
    TailBound {
        value: m_prime * contraction_factor(model).powi(n as i32),
        no_decay: false,
    }
}

#[cfg(test)]
mod tests;
