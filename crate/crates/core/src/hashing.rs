//! `t`-wise independent hash families: uniformly random polynomials of degree
//! `t - 1` over a prime field, reduced into a small range.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Coloring;

/// Field size is at least `range << RANGE_SLACK_BITS`, which keeps the bias of
/// the final range reduction below `2^-20`.
const RANGE_SLACK_BITS: u32 = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyHash {
    prime: u64,
    /// Coefficients, constant term first.
    coeffs: Vec<u64>,
    range: u64,
}

impl PolyHash {
    /// Builds a hash from explicit parts; coefficients are reduced mod `prime`.
    pub fn from_parts(prime: u64, coeffs: Vec<u64>, range: u64) -> Result<Self> {
        if !is_prime(prime) {
            return Err(Error::InvalidParameter(format!("{prime} is not prime")));
        }
        if range == 0 || coeffs.is_empty() {
            return Err(Error::InvalidParameter(
                "hash needs a nonzero range and at least one coefficient".into(),
            ));
        }
        let coeffs = coeffs.into_iter().map(|c| c % prime).collect();
        Ok(Self {
            prime,
            coeffs,
            range,
        })
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn coefficients(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn independence(&self) -> usize {
        self.coeffs.len()
    }

    pub fn range(&self) -> u64 {
        self.range
    }

    /// Polynomial value in the field, before range reduction.
    pub fn eval_field(&self, x: u64) -> u64 {
        let p = self.prime as u128;
        let x = x as u128 % p;
        self.coeffs
            .iter()
            .rev()
            .fold(0u128, |acc, &c| (acc * x + c as u128) % p) as u64
    }

    /// Hash value in `0..range`, taken from the high end of the field value.
    /// Reducing with `% range` instead makes small consecutive keys collide
    /// all at once whenever the slope is a multiple of `range`.
    pub fn eval(&self, x: u64) -> u64 {
        (self.eval_field(x) as u128 * self.range as u128 / self.prime as u128) as u64
    }

    /// Words of state: the coefficients plus prime and range.
    pub fn words(&self) -> usize {
        self.coeffs.len() + 2
    }
}

/// Samples a uniformly random member of the `t`-wise independent family on
/// `domain` keys with outputs in `0..range`.
pub fn sample_hash<R: Rng + ?Sized>(t: usize, domain: u64, range: u64, rng: &mut R) -> Result<PolyHash> {
    if t == 0 {
        return Err(Error::InvalidParameter("independence must be at least 1".into()));
    }
    if range == 0 {
        return Err(Error::InvalidParameter("range must be positive".into()));
    }
    if range > domain.max(1) {
        return Err(Error::InvalidParameter(format!(
            "range {range} exceeds domain {domain}"
        )));
    }
    let floor = domain.max(range.saturating_mul(1 << RANGE_SLACK_BITS));
    let prime = next_prime(floor)?;
    let coeffs = (0..t).map(|_| rng.random_range(0..prime)).collect();
    PolyHash::from_parts(prime, coeffs, range)
}

/// A pairwise independent (not necessarily proper) coloring of `1..=n` with
/// `k` colors; only the two hash coefficients are stored.
pub fn sample_coloring<R: Rng + ?Sized>(n: usize, k: u32, rng: &mut R) -> Result<Coloring> {
    if k < 2 {
        return Err(Error::InvalidParameter("need at least two colors".into()));
    }
    let domain = (n as u64 + 1).max(k as u64);
    Ok(Coloring::from_hash(sample_hash(2, domain, k as u64, rng)?))
}

/// Smallest prime `>= n`, searched over 64-bit candidates.
pub fn next_prime(n: u64) -> Result<u64> {
    let mut c = n.max(2);
    loop {
        if is_prime(c) {
            return Ok(c);
        }
        c = c
            .checked_add(1)
            .ok_or_else(|| Error::InvalidParameter("no 64-bit prime above bound".into()))?;
    }
}

/// Deterministic Miller-Rabin; the fixed bases are exact for all 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &BASES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}
