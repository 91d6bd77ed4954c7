//! Numeric stand-in for the convex-set variation bound
//! `V(F) <= sup F - inf F + max_u ||Hess F(u)||_F`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{hessian_row_into, IntegrandContext};
use crate::lowdisc::{PointSet, PointSetSpec, SequenceKind};

/// Grids with more points than this are replaced by a Halton sample of
/// this size.
pub const MAX_SWEEP_POINTS: usize = 200_000;

const PROBE_DISTANCES: [f64; 3] = [1e-2, 1e-3, 1e-4];
const PROBE_GROWTH: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VariationBound {
    Finite { value: f64 },
    /// The integrand or its Hessian blows up at a face of the cube.
    Unbounded,
}

impl VariationBound {
    pub fn value(&self) -> Option<f64> {
        match *self {
            VariationBound::Finite { value } => Some(value),
            VariationBound::Unbounded => None,
        }
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self, VariationBound::Unbounded)
    }
}

/// Extremes of the integrand and its numeric Hessian over a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HessianSweep {
    pub sup_f: f64,
    pub inf_f: f64,
    pub max_abs_entry: f64,
    pub max_frobenius: f64,
    pub points: usize,
    /// `false` when a Halton sample replaced the full grid.
    pub exhaustive: bool,
}

/// Outcome of probing one face along one line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub coordinate: usize,
    pub upper_face: bool,
    /// `max(|F|, max_j |H_ij|)` at each probe distance.
    pub magnitudes: [f64; 3],
    pub growth: f64,
}

fn grid_point(mut index: usize, grid: usize, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = ((index % grid) as f64 + 0.5) / grid as f64;
        index /= grid;
    }
}

/// Sweeps cell centres of a `grid^{2k}` lattice, computing the integrand
/// and its full numeric Hessian at each.
pub fn hessian_sweep(ctx: &IntegrandContext, grid: usize) -> HessianSweep {
    let grid = grid.max(2);
    let dim = ctx.dimension();
    let total = (grid as f64).powi(dim as i32);
    let exhaustive = total <= MAX_SWEEP_POINTS as f64;
    let count = if exhaustive { total as usize } else { MAX_SWEEP_POINTS };
    let halton = if exhaustive {
        None
    } else {
        Some(
            PointSet::new(&PointSetSpec::new(SequenceKind::Halton, dim, count))
                .expect("halton supports any dimension"),
        )
    };
    let h = (0.1 / grid as f64).min(1e-4);
    let per_point = |idx: usize| {
        let mut u = vec![0.0; dim];
        match &halton {
            None => grid_point(idx, grid, &mut u),
            Some(ps) => {
                ps.fill(idx, &mut u);
                for v in u.iter_mut() {
                    *v = v.clamp(2.0 * h, 1.0 - 2.0 * h);
                }
            }
        }
        let f = ctx.evaluate(&u);
        let mut row = vec![0.0; dim];
        let mut frob = 0.0;
        let mut max_abs = 0.0f64;
        for i in 0..dim {
            hessian_row_into(&u, ctx, h, i, &mut row);
            for &e in &row {
                frob += e * e;
                max_abs = max_abs.max(e.abs());
            }
        }
        (f, f, max_abs, frob.sqrt())
    };
    let (sup_f, inf_f, max_abs_entry, max_frobenius) = (0..count)
        .into_par_iter()
        .map(per_point)
        .reduce(
            || (f64::NEG_INFINITY, f64::INFINITY, 0.0, 0.0),
            |a, b| (a.0.max(b.0), a.1.min(b.1), a.2.max(b.2), a.3.max(b.3)),
        );
    HessianSweep {
        sup_f,
        inf_f,
        max_abs_entry,
        max_frobenius,
        points: count,
        exhaustive,
    }
}

/// Approaches every face of the cube along lines through a few interior
/// base points and records how `|F|` and the Hessian row of the normal
/// coordinate grow. Returns the probe with the largest growth.
pub fn boundary_probe(ctx: &IntegrandContext) -> ProbeResult {
    let dim = ctx.dimension();
    let bases = [0.5, 0.3, 0.7];
    let mut worst: Option<ProbeResult> = None;
    let mut row = vec![0.0; dim];
    for &b in &bases {
        for j in 0..dim {
            for upper in [false, true] {
                let mut magnitudes = [0.0; 3];
                for (m, &d) in magnitudes.iter_mut().zip(PROBE_DISTANCES.iter()) {
                    let mut u = vec![b; dim];
                    u[j] = if upper { 1.0 - d } else { d };
                    hessian_row_into(&u, ctx, d / 10.0, j, &mut row);
                    let f = ctx.evaluate(&u).abs();
                    *m = row.iter().fold(f, |acc, e| acc.max(e.abs()));
                    if !m.is_finite() {
                        *m = f64::INFINITY;
                    }
                }
                let floor = 1e-12;
                let growth = if magnitudes[2] <= floor {
                    0.0
                } else {
                    magnitudes[2] / magnitudes[0].max(floor)
                };
                let probe = ProbeResult {
                    coordinate: j,
                    upper_face: upper,
                    magnitudes,
                    growth,
                };
                if worst.map_or(true, |w| !(probe.growth <= w.growth)) {
                    worst = Some(probe);
                }
            }
        }
    }
    worst.expect("dimension is at least 2")
}

/// `sup F - inf F + max ||Hess F||_F` over the grid, or the unbounded flag
/// when the boundary probe sees the integrand or its Hessian grow by more
/// than a factor 10 over two decades of distance to a face.
pub fn variation_bound(ctx: &IntegrandContext, grid: usize) -> VariationBound {
    if ctx.model.penalty.is_zero() {
        return VariationBound::Finite { value: 0.0 };
    }
    let probe = boundary_probe(ctx);
    if !(probe.growth <= PROBE_GROWTH) {
        return VariationBound::Unbounded;
    }
    let sweep = hessian_sweep(ctx, grid);
    let value = sweep.sup_f - sweep.inf_f + sweep.max_frobenius;
    if value.is_finite() {
        VariationBound::Finite { value }
    } else {
        VariationBound::Unbounded
    }
}
