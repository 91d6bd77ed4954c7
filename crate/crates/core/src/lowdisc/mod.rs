//! Low-discrepancy and pseudo-random point sets on the unit cube, plus
//! discrepancy estimators used in error reporting.
//!
//! Every generator is random access: point `i` of a set depends only on the
//! [`PointSetSpec`] and `i`, so points can be consumed in any order and from
//! any number of threads with bit-identical results.

mod discrepancy;
mod halton;
mod pseudo;
mod sobol;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use discrepancy::{
    discrepancy_report, halfspace_discrepancy_lower_bound, isotropic_discrepancy_lower_bound,
    star_discrepancy, DiscrepancyReport, StarDiscrepancy, DEFAULT_STAR_BUDGET,
};
pub use halton::{first_primes, Halton};
pub use pseudo::PseudoRandom;
pub use sobol::{Sobol, SOBOL_MAX_DIMENSION};

/// Which sequence a point set is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SequenceKind {
    Halton,
    Sobol,
    #[serde(rename = "mc", alias = "pseudorandom")]
    Pseudorandom,
}

impl SequenceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SequenceKind::Halton => "halton",
            SequenceKind::Sobol => "sobol",
            SequenceKind::Pseudorandom => "mc",
        }
    }
}

/// Full description of a point set.
///
/// For `Pseudorandom` the `scramble_seed` is the generator seed (`None` means 0).
/// For Halton and Sobol a seed switches scrambling on. `skip` drops that many
/// leading elements of the underlying sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSetSpec {
    pub kind: SequenceKind,
    pub dimension: usize,
    pub count: usize,
    pub scramble_seed: Option<u64>,
    pub skip: u64,
}

impl PointSetSpec {
    pub fn new(kind: SequenceKind, dimension: usize, count: usize) -> Self {
        PointSetSpec {
            kind,
            dimension,
            count,
            scramble_seed: None,
            skip: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.scramble_seed = Some(seed);
        self
    }

    pub fn with_skip(mut self, skip: u64) -> Self {
        self.skip = skip;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::InvalidPointSet("dimension must be at least 1".into()));
        }
        if self.count == 0 {
            return Err(Error::InvalidPointSet("count must be at least 1".into()));
        }
        Ok(())
    }
}

/// A constructed, immutable point set. Precomputed tables (digit permutations,
/// direction numbers) live here; evaluation is pure.
#[derive(Debug, Clone)]
pub enum PointSet {
    Halton(Halton),
    Sobol(Sobol),
    Pseudorandom(PseudoRandom),
}

impl PointSet {
    pub fn new(spec: &PointSetSpec) -> Result<Self> {
        spec.validate()?;
        Ok(match spec.kind {
            SequenceKind::Halton => PointSet::Halton(Halton::new(spec)?),
            SequenceKind::Sobol => PointSet::Sobol(Sobol::new(spec)?),
            SequenceKind::Pseudorandom => PointSet::Pseudorandom(PseudoRandom::new(spec)),
        })
    }

    pub fn dimension(&self) -> usize {
        match self {
            PointSet::Halton(g) => g.dimension(),
            PointSet::Sobol(g) => g.dimension(),
            PointSet::Pseudorandom(g) => g.dimension(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            PointSet::Halton(g) => g.len(),
            PointSet::Sobol(g) => g.len(),
            PointSet::Pseudorandom(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes point `index` (0-based within the set) into `out`.
    ///
    /// Panics if `out.len()` differs from the dimension or `index >= len()`.
    #[inline]
    pub fn fill(&self, index: usize, out: &mut [f64]) {
        assert!(index < self.len(), "point index {index} out of range");
        assert_eq!(out.len(), self.dimension());
        match self {
            PointSet::Halton(g) => g.fill(index, out),
            PointSet::Sobol(g) => g.fill(index, out),
            PointSet::Pseudorandom(g) => g.fill(index, out),
        }
    }

    pub fn point(&self, index: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.dimension()];
        self.fill(index, &mut p);
        p
    }

    pub fn to_vec(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }
}

/// Materializes every point of `spec`.
pub fn generate(spec: &PointSetSpec) -> Result<Vec<Vec<f64>>> {
    Ok(PointSet::new(spec)?.to_vec())
}

/// Dumps points as CSV, one point per row, 17 significant digits.
pub fn write_points_csv<W: Write>(points: &[Vec<f64>], mut out: W) -> std::io::Result<()> {
    if let Some(first) = points.first() {
        let header: Vec<String> = (1..=first.len()).map(|j| format!("u{j}")).collect();
        writeln!(out, "{}", header.join(","))?;
    }
    for p in points {
        let row: Vec<String> = p.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// SplitMix64 finalizer; derives independent seeds from (seed, stream).
pub(crate) fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Largest double strictly below one.
pub(crate) const ONE_MINUS_EPS: f64 = 1.0 - f64::EPSILON / 2.0;
