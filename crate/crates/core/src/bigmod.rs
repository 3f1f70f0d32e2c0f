//! Modular arithmetic kernel with explicit operation counting.
//!
//! Every routine that multiplies takes an [`OpCounter`] so that callers can
//! attribute cost to a phase (exponentiation, proving, verification rounds,
//! base case) without global state. Squarings and general multiplications are
//! tallied separately; a product counts as a squaring only when it goes through
//! [`mod_sqr`].

use std::fmt;
use std::ops::{Add, AddAssign, Sub};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("modulus must be at least 2")]
    ModulusTooSmall,
    /// `gcd(x, m) = g > 1`; `g` is a nontrivial divisor of `m` unless `x ≡ 0`.
    #[error("not invertible: gcd = {g}")]
    NotInvertible { g: BigUint },
}

/// A modulus `m ≥ 2`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Modulus(BigUint);

impl Modulus {
    pub fn new(m: BigUint) -> Result<Self, ArithError> {
        if m < BigUint::from(2u32) {
            return Err(ArithError::ModulusTooSmall);
        }
        Ok(Modulus(m))
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn bits(&self) -> u64 {
        self.0.bits()
    }

    /// Byte length of the minimal big-endian magnitude of `m`.
    pub fn byte_len(&self) -> usize {
        self.0.bits().div_ceil(8) as usize
    }

    pub fn reduce(&self, x: &BigUint) -> BigUint {
        x % &self.0
    }

    pub fn contains(&self, x: &BigUint) -> bool {
        x < &self.0
    }
}

impl fmt::Debug for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Modulus({})", self.0)
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Running tally of modular products.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounter {
    pub squarings: u64,
    pub general_multiplications: u64,
}

impl OpCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn snapshot(&self) -> OpCounter {
        *self
    }

    pub fn reset(&mut self) -> OpCounter {
        std::mem::take(self)
    }

    pub fn total(&self) -> u64 {
        self.squarings + self.general_multiplications
    }
}

impl Add for OpCounter {
    type Output = OpCounter;

    fn add(self, rhs: OpCounter) -> OpCounter {
        OpCounter {
            squarings: self.squarings + rhs.squarings,
            general_multiplications: self.general_multiplications + rhs.general_multiplications,
        }
    }
}

impl AddAssign for OpCounter {
    fn add_assign(&mut self, rhs: OpCounter) {
        *self = *self + rhs;
    }
}

impl Sub for OpCounter {
    type Output = OpCounter;

    fn sub(self, rhs: OpCounter) -> OpCounter {
        OpCounter {
            squarings: self.squarings - rhs.squarings,
            general_multiplications: self.general_multiplications - rhs.general_multiplications,
        }
    }
}

/// `x·y mod m`, counted as a general multiplication.
pub fn mod_mul(x: &BigUint, y: &BigUint, m: &Modulus, ctr: &mut OpCounter) -> BigUint {
    ctr.general_multiplications += 1;
    (x * y) % &m.0
}

/// `x² mod m`, counted as a squaring.
pub fn mod_sqr(x: &BigUint, m: &Modulus, ctr: &mut OpCounter) -> BigUint {
    ctr.squarings += 1;
    (x * x) % &m.0
}

/// Left-to-right square-and-multiply. Uses at most `bits(exp) - 1` squarings
/// and `popcount(exp) - 1` multiplications.
pub fn mod_pow(base: &BigUint, exp: &BigUint, m: &Modulus, ctr: &mut OpCounter) -> BigUint {
    let bits = exp.bits();
    if bits == 0 {
        return BigUint::one() % &m.0;
    }
    let base = m.reduce(base);
    let mut acc = base.clone();
    for i in (0..bits - 1).rev() {
        acc = mod_sqr(&acc, m, ctr);
        if exp.bit(i) {
            acc = mod_mul(&acc, &base, m, ctr);
        }
    }
    acc
}

/// Inverse of `x` modulo `m` by the extended Euclidean algorithm.
pub fn mod_inv(x: &BigUint, m: &Modulus) -> Result<BigUint, ArithError> {
    let x = m.reduce(x);
    if x.is_zero() {
        return Err(ArithError::NotInvertible { g: m.0.clone() });
    }
    let xi = BigInt::from_biguint(Sign::Plus, x);
    let mi = BigInt::from_biguint(Sign::Plus, m.0.clone());
    let egcd = xi.extended_gcd(&mi);
    if !egcd.gcd.is_one() {
        return Err(ArithError::NotInvertible {
            g: egcd.gcd.magnitude().clone(),
        });
    }
    let inv = egcd.x.mod_floor(&mi);
    Ok(inv.magnitude().clone())
}

/// Simultaneous multi-exponentiation `∏ bases[i]^exps[i] mod m`.
///
/// Fixed-window interleaving: one shared squaring chain over the longest
/// exponent and per-base tables of `2^w - 1` powers. The window is chosen to
/// minimize the worst-case product count for the given shape.
pub fn multi_exp(bases: &[BigUint], exps: &[BigUint], m: &Modulus, ctr: &mut OpCounter) -> BigUint {
    assert_eq!(bases.len(), exps.len(), "multi_exp: length mismatch");

    let terms: Vec<(&BigUint, &BigUint)> = bases
        .iter()
        .zip(exps)
        .filter(|(_, e)| !e.is_zero())
        .collect();
    if terms.is_empty() {
        return BigUint::one() % &m.0;
    }
    let max_bits = terms.iter().map(|(_, e)| e.bits()).max().unwrap_or(0);
    let window = choose_window(terms.len() as u64, max_bits);

    let tables: Vec<Vec<BigUint>> = terms
        .iter()
        .map(|(b, _)| power_table(&m.reduce(b), window, m, ctr))
        .collect();

    let digits = max_bits.div_ceil(window as u64);
    let mut acc: Option<BigUint> = None;
    for d in (0..digits).rev() {
        if let Some(a) = acc.as_mut() {
            for _ in 0..window {
                *a = mod_sqr(a, m, ctr);
            }
        }
        for ((_, e), table) in terms.iter().zip(&tables) {
            let digit = window_digit(e, d * window as u64, window);
            if digit == 0 {
                continue;
            }
            let factor = &table[digit - 1];
            acc = Some(match acc.take() {
                None => factor.clone(),
                Some(a) => mod_mul(&a, factor, m, ctr),
            });
        }
    }
    acc.unwrap_or_else(|| BigUint::one() % &m.0)
}

fn choose_window(count: u64, bits: u64) -> u32 {
    (1u32..=6)
        .min_by_key(|&w| {
            let precompute = count * ((1u64 << w) - 2);
            let digits = bits.div_ceil(w as u64);
            precompute + count * digits + (digits.saturating_sub(1)) * w as u64
        })
        .unwrap_or(1)
}

/// `[b, b², …, b^(2^w - 1)]`.
fn power_table(base: &BigUint, window: u32, m: &Modulus, ctr: &mut OpCounter) -> Vec<BigUint> {
    let size = (1usize << window) - 1;
    let mut table = Vec::with_capacity(size);
    table.push(base.clone());
    if size >= 2 {
        table.push(mod_sqr(base, m, ctr));
    }
    for k in 2..size {
        let next = mod_mul(&table[k - 1], base, m, ctr);
        table.push(next);
    }
    table
}

fn window_digit(e: &BigUint, offset: u64, width: u32) -> usize {
    (0..width as u64)
        .filter(|&k| e.bit(offset + k))
        .fold(0usize, |acc, k| acc | (1 << k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::RandBigInt;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn m(v: u64) -> Modulus {
        Modulus::new(BigUint::from(v)).unwrap()
    }

    fn b(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn mod_mul_examples() {
        let mut ctr = OpCounter::new();
        assert_eq!(mod_mul(&b(7), &b(8), &m(100), &mut ctr), b(56));
        assert_eq!(mod_mul(&b(42), &b(1), &m(100), &mut ctr), b(42));
        assert_eq!(mod_mul(&b(0), &b(99), &m(100), &mut ctr), b(0));
        assert_eq!(ctr.general_multiplications, 3);
        assert_eq!(ctr.squarings, 0);
    }

    #[test]
    fn mod_pow_examples() {
        let mut ctr = OpCounter::new();
        assert_eq!(mod_pow(&b(3), &b(11), &m(100), &mut ctr), b(47));
        assert!(ctr.total() <= 2 * 4, "3^11 cost {ctr:?}");
        assert_eq!(mod_pow(&b(3), &b(11), &m(1000), &mut ctr), b(147));
        assert_eq!(mod_pow(&b(5), &b(0), &m(7), &mut ctr), b(1));
        assert_eq!(mod_pow(&b(5), &b(0), &m(2), &mut ctr), b(1));
    }

    #[test]
    fn mod_inv_examples() {
        assert_eq!(mod_inv(&b(3), &m(10)).unwrap(), b(7));
        assert_eq!(mod_inv(&b(1), &m(97)).unwrap(), b(1));
        assert_eq!(
            mod_inv(&b(4), &m(10)),
            Err(ArithError::NotInvertible { g: b(2) })
        );
    }

    #[test]
    fn counter_snapshot_and_reset() {
        let mut ctr = OpCounter::new();
        for _ in 0..5 {
            mod_sqr(&b(3), &m(100), &mut ctr);
        }
        assert_eq!(ctr.snapshot().squarings, 5);
        let before = ctr.reset();
        assert_eq!(before.squarings, 5);
        assert_eq!(ctr, OpCounter::default());
    }

    #[test]
    fn rejects_tiny_modulus() {
        assert_eq!(Modulus::new(b(1)), Err(ArithError::ModulusTooSmall));
        assert_eq!(Modulus::new(b(0)), Err(ArithError::ModulusTooSmall));
    }

    #[test]
    fn multi_exp_matches_individual_powers() {
        let mut rng = StdRng::seed_from_u64(7);
        for count in [1usize, 2, 5, 17] {
            for bits in [1u64, 8, 64, 200] {
                let modulus = Modulus::new(rng.gen_biguint(128) | BigUint::from(3u32)).unwrap();
                let bases: Vec<BigUint> = (0..count)
                    .map(|_| rng.gen_biguint_below(modulus.value()))
                    .collect();
                let exps: Vec<BigUint> = (0..count).map(|_| rng.gen_biguint(bits)).collect();
                let expected = bases.iter().zip(&exps).fold(BigUint::one(), |acc, (b, e)| {
                    acc * b.modpow(e, modulus.value()) % modulus.value()
                });
                let mut ctr = OpCounter::new();
                assert_eq!(multi_exp(&bases, &exps, &modulus, &mut ctr), expected);
            }
        }
    }

    #[test]
    fn multi_exp_empty_and_zero_exponents() {
        let mut ctr = OpCounter::new();
        assert_eq!(multi_exp(&[], &[], &m(11), &mut ctr), b(1));
        assert_eq!(multi_exp(&[b(5)], &[b(0)], &m(11), &mut ctr), b(1));
        assert_eq!(ctr.total(), 0);
    }
}
