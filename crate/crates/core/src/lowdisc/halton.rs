use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{mix_seed, PointSetSpec, ONE_MINUS_EPS};
use crate::error::{Error, Result};

/// The first `n` primes, by trial division.
pub fn first_primes(n: usize) -> Vec<u64> {
    let mut primes: Vec<u64> = Vec::with_capacity(n);
    let mut candidate = 2u64;
    while primes.len() < n {
        if primes
            .iter()
            .take_while(|&&p| p * p <= candidate)
            .all(|&p| candidate % p != 0)
        {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes
}

/// Digits needed so that every index below 2^53 has a full expansion.
fn digits_for(base: u64) -> usize {
    let mut digits = 0;
    let mut span: u128 = 1;
    while span < (1u128 << 53) {
        span *= base as u128;
        digits += 1;
    }
    digits
}

#[derive(Debug, Clone)]
struct DigitScramble {
    digits: usize,
    /// `digits` consecutive permutations of `0..base`.
    table: Vec<u32>,
}

/// Halton sequence in the first `dimension` prime bases. Point `i` of the set
/// is the radical inverse of `skip + i + 1`, so the zero point never appears.
///
/// With a seed, every digit position of every base gets its own random
/// permutation. Trailing zero digits are permuted too, up to the digit count
/// that resolves 2^53 indices.
#[derive(Debug, Clone)]
pub struct Halton {
    bases: Vec<u64>,
    count: usize,
    skip: u64,
    scramble: Option<Vec<DigitScramble>>,
}

impl Halton {
    pub fn new(spec: &PointSetSpec) -> Result<Self> {
        spec.validate()?;
        let last = spec.skip.checked_add(spec.count as u64);
        if last.is_none_or(|l| l >= 1u64 << 53) {
            return Err(Error::InvalidPointSet(
                "halton indices must stay below 2^53".into(),
            ));
        }
        let bases = first_primes(spec.dimension);
        let scramble = spec.scramble_seed.map(|seed| {
            bases
                .iter()
                .enumerate()
                .map(|(j, &b)| {
                    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, j as u64));
                    let digits = digits_for(b);
                    let mut table = Vec::with_capacity(digits * b as usize);
                    for _ in 0..digits {
                        let mut perm: Vec<u32> = (0..b as u32).collect();
                        perm.shuffle(&mut rng);
                        table.extend_from_slice(&perm);
                    }
                    DigitScramble { digits, table }
                })
                .collect()
        });
        Ok(Halton {
            bases,
            count: spec.count,
            skip: spec.skip,
            scramble,
        })
    }

    pub fn dimension(&self) -> usize {
        self.bases.len()
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    #[inline]
    pub fn fill(&self, index: usize, out: &mut [f64]) {
        let n = self.skip + index as u64 + 1;
        match &self.scramble {
            None => {
                for (o, &b) in out.iter_mut().zip(&self.bases) {
                    *o = radical_inverse(n, b);
                }
            }
            Some(perms) => {
                for ((o, &b), s) in out.iter_mut().zip(&self.bases).zip(perms) {
                    *o = scrambled_radical_inverse(n, b, s);
                }
            }
        }
    }
}

/// Van der Corput radical inverse of `n` in `base`.
pub(crate) fn radical_inverse(mut n: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut reversed: u64 = 0;
    let mut inv_pow = 1.0;
    while n > 0 {
        let next = n / base;
        reversed = reversed * base + (n - next * base);
        inv_pow *= inv;
        n = next;
    }
    (reversed as f64 * inv_pow).min(ONE_MINUS_EPS)
}

fn scrambled_radical_inverse(mut n: u64, base: u64, s: &DigitScramble) -> f64 {
    let b = base as usize;
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut acc = 0.0;
    for level in 0..s.digits {
        let next = n / base;
        let digit = (n - next * base) as usize;
        acc += s.table[level * b + digit] as f64 * scale;
        scale *= inv;
        n = next;
    }
    acc.min(ONE_MINUS_EPS)
}
