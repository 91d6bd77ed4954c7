//! Star discrepancy (exact by critical-box enumeration when affordable) and
//! lower-bound estimates of the isotropic discrepancy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of critical corners enumerated exactly.
pub const DEFAULT_STAR_BUDGET: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarDiscrepancy {
    pub value: f64,
    /// `false` when the value is a lower bound from sampled corners.
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub star_value: f64,
    pub star_exact: bool,
    pub isotropic_lower_bound: f64,
    pub notes: String,
}

fn check(points: &[Vec<f64>]) -> Result<usize> {
    let first = points.first().ok_or(Error::EmptyPointSet)?;
    let dim = first.len();
    if dim == 0 || points.iter().any(|p| p.len() != dim) {
        return Err(Error::InvalidPointSet("ragged or zero-dimensional points".into()));
    }
    Ok(dim)
}

/// Star discrepancy over anchored boxes `[0, y)`.
///
/// The supremum is attained (as a limit) at corners whose coordinates are
/// point coordinates or 1; at each corner both the open box and its closure
/// are counted. If the corner grid exceeds `budget` entries, `budget` corners
/// are sampled instead and the result is flagged as a lower bound.
pub fn star_discrepancy(points: &[Vec<f64>], budget: usize) -> Result<StarDiscrepancy> {
    let dim = check(points)?;
    let n = points.len() as f64;
    let grids: Vec<Vec<f64>> = (0..dim)
        .map(|j| {
            let mut g: Vec<f64> = points.iter().map(|p| p[j]).collect();
            g.push(1.0);
            g.sort_by(f64::total_cmp);
            g.dedup();
            g
        })
        .collect();

    let local = |corner: &[f64]| -> f64 {
        let volume: f64 = corner.iter().product();
        let mut open = 0usize;
        let mut closed = 0usize;
        for p in points {
            let mut inside_closed = true;
            let mut inside_open = true;
            for (x, y) in p.iter().zip(corner) {
                if x > y {
                    inside_closed = false;
                    inside_open = false;
                    break;
                }
                if x == y {
                    inside_open = false;
                }
            }
            closed += inside_closed as usize;
            open += inside_open as usize;
        }
        (volume - open as f64 / n).max(closed as f64 / n - volume)
    };

    let total = grids
        .iter()
        .try_fold(1usize, |acc, g| acc.checked_mul(g.len()));
    let mut corner = vec![0.0; dim];
    match total {
        Some(total) if total <= budget => {
            let mut idx = vec![0usize; dim];
            let mut best = 0.0f64;
            for _ in 0..total {
                for j in 0..dim {
                    corner[j] = grids[j][idx[j]];
                }
                best = best.max(local(&corner));
                for j in 0..dim {
                    idx[j] += 1;
                    if idx[j] < grids[j].len() {
                        break;
                    }
                    idx[j] = 0;
                }
            }
            Ok(StarDiscrepancy {
                value: best,
                exact: true,
            })
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x57A2);
            let mut best = 0.0f64;
            for _ in 0..budget.max(1) {
                for j in 0..dim {
                    corner[j] = grids[j][rng.random_range(0..grids[j].len())];
                }
                best = best.max(local(&corner));
            }
            Ok(StarDiscrepancy {
                value: best,
                exact: false,
            })
        }
    }
}

/// Area of `{ (u, v) in [0,1]^2 : nu*u + nv*v <= s }`.
fn halfplane_area(nu: f64, nv: f64, s: f64) -> f64 {
    let square = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
    let mut clipped: Vec<(f64, f64)> = Vec::with_capacity(6);
    let g = |p: (f64, f64)| nu * p.0 + nv * p.1 - s;
    for i in 0..4 {
        let a = square[i];
        let b = square[(i + 1) % 4];
        let (ga, gb) = (g(a), g(b));
        if ga <= 0.0 {
            clipped.push(a);
        }
        if (ga < 0.0 && gb > 0.0) || (ga > 0.0 && gb < 0.0) {
            let t = ga / (ga - gb);
            clipped.push((a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)));
        }
    }
    polygon_area(&clipped).clamp(0.0, 1.0)
}

fn polygon_area(poly: &[(f64, f64)]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        twice += a.0 * b.1 - b.0 * a.1;
    }
    0.5 * twice.abs()
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Counter-clockwise convex hull (monotone chain), collinear points dropped.
fn convex_hull(mut pts: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * pts.len());
    for &p in pts.iter().chain(pts.iter().rev().skip(1)) {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Deterministic stream of index pairs: every pair when there are at most
/// `effort` of them, otherwise `effort` seeded random pairs. Either way a
/// larger effort yields a superset of candidates.
fn candidate_pairs(n: usize, effort: usize, seed: u64) -> Vec<(usize, usize)> {
    let all = n * n.saturating_sub(1) / 2;
    if all <= effort {
        let mut out = Vec::with_capacity(all);
        for i in 0..n {
            for j in i + 1..n {
                out.push((i, j));
            }
        }
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..effort)
        .map(|_| {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            (i, j)
        })
        .collect()
}

fn coordinate_pairs(dim: usize, count: usize, seed: u64) -> Vec<(usize, usize)> {
    if dim == 2 {
        return vec![(0, 1); count];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let i = rng.random_range(0..dim);
            let mut j = rng.random_range(0..dim - 1);
            if j >= i {
                j += 1;
            }
            (i, j)
        })
        .collect()
}

/// Sweeps every threshold of the projection `values` and returns the largest
/// local discrepancy of `{ value < s }` / `{ value <= s }`, whose volume is
/// `volume(s)`.
fn threshold_sweep(mut values: Vec<f64>, volume: impl Fn(f64) -> f64) -> f64 {
    let n = values.len() as f64;
    values.sort_by(f64::total_cmp);
    let mut best = 0.0f64;
    let mut i = 0;
    while i < values.len() {
        let s = values[i];
        let mut j = i;
        while j < values.len() && values[j] == s {
            j += 1;
        }
        let vol = volume(s);
        best = best
            .max((i as f64 / n - vol).abs())
            .max((j as f64 / n - vol).abs());
        i = j;
    }
    best
}

fn one_dimensional_halflines(points: &[Vec<f64>]) -> f64 {
    threshold_sweep(points.iter().map(|p| p[0]).collect(), |s| s.clamp(0.0, 1.0))
}

/// Lower bound for the isotropic discrepancy using half-spaces only.
///
/// Dimension 1 sweeps all half-lines. Dimension 2 tests half-planes whose
/// boundary is parallel to a line through two points (all pairs when there are
/// at most `effort` of them), every offset included. Higher dimensions test
/// `effort` such half-spaces in sampled two-coordinate projections; their
/// volume is the exact planar area.
pub fn halfspace_discrepancy_lower_bound(points: &[Vec<f64>], effort: usize) -> Result<f64> {
    let dim = check(points)?;
    if dim == 1 {
        return Ok(one_dimensional_halflines(points));
    }
    let pairs = candidate_pairs(points.len(), effort, 0x4A1F);
    let coords = coordinate_pairs(dim, pairs.len(), 0x4A20);
    let mut best = 0.0f64;
    for (&(i, j), &(cu, cv)) in pairs.iter().zip(&coords) {
        let (du, dv) = (points[j][cu] - points[i][cu], points[j][cv] - points[i][cv]);
        if du == 0.0 && dv == 0.0 {
            continue;
        }
        let (nu, nv) = (-dv, du);
        let values: Vec<f64> = points.iter().map(|p| nu * p[cu] + nv * p[cv]).collect();
        best = best.max(threshold_sweep(values, |s| halfplane_area(nu, nv, s)));
    }
    Ok(best)
}

fn hull_discrepancy(points: &[Vec<f64>], effort: usize) -> f64 {
    let dim = points[0].len();
    let n = points.len() as f64;
    let mut best = 0.0f64;
    if dim == 1 {
        for (i, j) in candidate_pairs(points.len(), effort, 0x4B11) {
            let (lo, hi) = {
                let (a, b) = (points[i][0], points[j][0]);
                (a.min(b), a.max(b))
            };
            if hi <= lo {
                continue;
            }
            let closed = points.iter().filter(|p| p[0] >= lo && p[0] <= hi).count();
            let open = points.iter().filter(|p| p[0] > lo && p[0] < hi).count();
            let len = hi - lo;
            best = best
                .max((closed as f64 / n - len).abs())
                .max((open as f64 / n - len).abs());
        }
        return best;
    }
    if points.len() < 3 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x4B12);
    let coords = coordinate_pairs(dim, effort, 0x4B13);
    for &(cu, cv) in &coords {
        let size = rng.random_range(3..=points.len().min(8));
        let subset: Vec<(f64, f64)> = (0..size)
            .map(|_| {
                let p = &points[rng.random_range(0..points.len())];
                (p[cu], p[cv])
            })
            .collect();
        let hull = convex_hull(subset);
        let area = polygon_area(&hull);
        if hull.len() < 3 || area <= 0.0 {
            continue;
        }
        let mut closed = 0usize;
        let mut open = 0usize;
        for p in points {
            let q = (p[cu], p[cv]);
            let mut min_cross = f64::INFINITY;
            for k in 0..hull.len() {
                min_cross = min_cross.min(cross(hull[k], hull[(k + 1) % hull.len()], q));
                if min_cross < 0.0 {
                    break;
                }
            }
            if min_cross >= 0.0 {
                closed += 1;
                if min_cross > 0.0 {
                    open += 1;
                }
            }
        }
        best = best
            .max((closed as f64 / n - area).abs())
            .max((open as f64 / n - area).abs());
    }
    best
}

/// Lower bound for the isotropic discrepancy: the largest local discrepancy
/// over the half-spaces of [`halfspace_discrepancy_lower_bound`] and over
/// `effort` convex hulls (closed and open) of random point subsets.
/// Degenerate hulls are skipped. Nondecreasing in `effort`.
pub fn isotropic_discrepancy_lower_bound(points: &[Vec<f64>], effort: usize) -> Result<f64> {
    let halfspaces = halfspace_discrepancy_lower_bound(points, effort)?;
    Ok(halfspaces.max(hull_discrepancy(points, effort)))
}

pub fn discrepancy_report(
    points: &[Vec<f64>],
    star_budget: usize,
    effort: usize,
) -> Result<DiscrepancyReport> {
    let star = star_discrepancy(points, star_budget)?;
    let iso = isotropic_discrepancy_lower_bound(points, effort)?;
    let mut notes = String::new();
    if star.exact {
        notes.push_str("star: exact over critical boxes; ");
    } else {
        notes.push_str(&format!("star: lower bound from {star_budget} sampled corners; "));
    }
    notes.push_str(&format!(
        "isotropic: lower bound from half-spaces and convex hulls (effort {effort}), indicative only"
    ));
    Ok(DiscrepancyReport {
        star_value: star.value,
        star_exact: star.exact,
        isotropic_lower_bound: iso,
        notes,
    })
}
