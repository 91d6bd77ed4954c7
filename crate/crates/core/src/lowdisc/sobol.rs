use std::sync::OnceLock;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{mix_seed, PointSetSpec};
use crate::error::{Error, Result};

/// Joe & Kuo "new-joe-kuo-6" primitive polynomials and initial direction
/// numbers, first 1024 dimensions (dimension 1 is implicit).
/// Source: https://web.maths.unsw.edu.au/~fkuo/sobol/
const JOE_KUO: &str = include_str!("../../data/new-joe-kuo-6.1024.txt");

pub const SOBOL_MAX_DIMENSION: usize = 1024;

const BITS: usize = 32;

#[derive(Debug)]
struct Primitive {
    degree: usize,
    coeff: u32,
    m: Vec<u32>,
}

fn table() -> &'static [Primitive] {
    static TABLE: OnceLock<Vec<Primitive>> = OnceLock::new();
    TABLE.get_or_init(|| {
        JOE_KUO
            .lines()
            .skip(1)
            .filter(|l| !l.trim().is_empty())
            .map(|line| {
                let fields: Vec<u32> = line
                    .split_whitespace()
                    .map(|f| f.parse().expect("malformed direction-number table"))
                    .collect();
                let degree = fields[1] as usize;
                Primitive {
                    degree,
                    coeff: fields[2],
                    m: fields[3..3 + degree].to_vec(),
                }
            })
            .collect()
    })
}

fn direction_numbers(dim: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim == 0 {
        for (i, vi) in v.iter_mut().enumerate() {
            *vi = 1 << (BITS - 1 - i);
        }
        return v;
    }
    let p = &table()[dim - 1];
    let s = p.degree;
    for i in 0..s.min(BITS) {
        v[i] = p.m[i] << (BITS - 1 - i);
    }
    for i in s..BITS {
        let mut value = v[i - s] ^ (v[i - s] >> s);
        for k in 1..s {
            if (p.coeff >> (s - 1 - k)) & 1 == 1 {
                value ^= v[i - k];
            }
        }
        v[i] = value;
    }
    v
}

/// Sobol sequence in natural (non Gray-code) order: point `i` of the set is
/// the sequence element with index `skip + i + 1`, computed directly from the
/// binary digits of that index. A seed applies a per-coordinate random
/// digital shift (XOR of a 32-bit word).
#[derive(Debug, Clone)]
pub struct Sobol {
    directions: Vec<[u32; BITS]>,
    shifts: Option<Vec<u32>>,
    count: usize,
    skip: u64,
}

impl Sobol {
    pub fn new(spec: &PointSetSpec) -> Result<Self> {
        spec.validate()?;
        if spec.dimension > SOBOL_MAX_DIMENSION {
            return Err(Error::UnsupportedDimension {
                requested: spec.dimension,
                supported: SOBOL_MAX_DIMENSION,
            });
        }
        let last = spec.skip.checked_add(spec.count as u64);
        if last.is_none_or(|l| l >= 1u64 << BITS) {
            return Err(Error::InvalidPointSet(
                "sobol indices must stay below 2^32".into(),
            ));
        }
        let directions = (0..spec.dimension).map(direction_numbers).collect();
        let shifts = spec.scramble_seed.map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x50b0));
            (0..spec.dimension).map(|_| rng.next_u32()).collect()
        });
        Ok(Sobol {
            directions,
            shifts,
            count: spec.count,
            skip: spec.skip,
        })
    }

    pub fn dimension(&self) -> usize {
        self.directions.len()
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Integer coordinates (scaled by 2^32) of the element with sequence index `n`.
    pub fn integer_point(&self, n: u64, out: &mut [u32]) {
        for (o, v) in out.iter_mut().zip(&self.directions) {
            let mut x = 0u32;
            let mut bits = n;
            let mut b = 0;
            while bits != 0 {
                if bits & 1 == 1 {
                    x ^= v[b];
                }
                bits >>= 1;
                b += 1;
            }
            *o = x;
        }
        if let Some(shifts) = &self.shifts {
            for (o, s) in out.iter_mut().zip(shifts) {
                *o ^= s;
            }
        }
    }

    #[inline]
    pub fn fill(&self, index: usize, out: &mut [f64]) {
        const SCALE: f64 = 1.0 / (1u64 << BITS) as f64;
        let n = self.skip + index as u64 + 1;
        for (j, o) in out.iter_mut().enumerate() {
            let v = &self.directions[j];
            let mut x = 0u32;
            let mut bits = n;
            let mut b = 0;
            while bits != 0 {
                if bits & 1 == 1 {
                    x ^= v[b];
                }
                bits >>= 1;
                b += 1;
            }
            if let Some(shifts) = &self.shifts {
                x ^= shifts[j];
            }
            *o = x as f64 * SCALE;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lowdisc::{generate, SequenceKind};

    #[test]
    fn table_has_expected_size() {
        assert_eq!(table().len(), SOBOL_MAX_DIMENSION - 1);
        let last = &table()[SOBOL_MAX_DIMENSION - 2];
        assert_eq!(last.degree, 13);
        assert_eq!(last.coeff, 3538);
    }

    #[test]
    fn first_dimension_is_van_der_corput() {
        let pts = generate(&PointSetSpec::new(SequenceKind::Sobol, 1, 3)).unwrap();
        assert_eq!(pts, vec![vec![0.5], vec![0.25], vec![0.75]]);
    }

    // Frozen from an independent Joe-Kuo implementation (Gray-code order,
    // re-indexed to natural order), coordinates scaled by 2^32.
    #[test]
    fn matches_reference_points_in_200_dimensions() {
        let sobol = Sobol::new(&PointSetSpec::new(SequenceKind::Sobol, 200, 1)).unwrap();
        let cases: [(u64, [u32; 6]); 7] = [
            (1, [2147483648, 2147483648, 2147483648, 2147483648, 2147483648, 2147483648]),
            (2, [1073741824, 3221225472, 3221225472, 3221225472, 1073741824, 3221225472]),
            (3, [3221225472, 1073741824, 1073741824, 1073741824, 3221225472, 1073741824]),
            (5, [2684354560, 536870912, 3758096384, 2684354560, 536870912, 2684354560]),
            (100, [637534208, 3321888768, 2986344448, 2516582400, 3992977408, 1845493760]),
            (1023, [4290772992, 1094713344, 3141533696, 1228931072, 3091202048, 1195376640]),
            (2047, [4292870144, 3789553664, 1428160512, 3831496704, 1679818752, 1608515584]),
        ];
        let mut buf = vec![0u32; 200];
        for (n, expected) in cases {
            sobol.integer_point(n, &mut buf);
            let got = [buf[0], buf[1], buf[2], buf[39], buf[99], buf[199]];
            assert_eq!(got, expected, "index {n}");
        }
    }

    #[test]
    fn unsupported_dimension() {
        let err = Sobol::new(&PointSetSpec::new(SequenceKind::Sobol, 1025, 4)).unwrap_err();
        assert_eq!(
            err,
            Error::UnsupportedDimension {
                requested: 1025,
                supported: 1024
            }
        );
    }

    #[test]
    fn digital_shift_preserves_elementary_intervals() {
        let spec = PointSetSpec::new(SequenceKind::Sobol, 4, 64).with_skip(63).with_seed(3);
        let pts = generate(&spec).unwrap();
        // indices 64..127 form a (0,6)-sequence block in each coordinate
        for j in 0..4 {
            let mut bins = [0usize; 64];
            for p in &pts {
                bins[(p[j] * 64.0) as usize] += 1;
            }
            assert!(bins.iter().all(|&c| c == 1), "coordinate {j}: {bins:?}");
        }
    }
}
