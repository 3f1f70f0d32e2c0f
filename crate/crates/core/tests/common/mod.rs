#![allow(dead_code)]

use mxcert::{CheckpointTable, ExpInstance, OpCounter};
use num_bigint::{BigUint, RandBigInt};
use num_traits::One;
use rand::Rng;

pub fn b(v: u64) -> BigUint {
    BigUint::from(v)
}

/// Right-to-left binary powering with plain `%` reductions.
pub fn naive_pow(a: &BigUint, n: &BigUint, m: &BigUint) -> BigUint {
    let mut acc = BigUint::one() % m;
    let mut sq = a % m;
    for i in 0..n.bits() {
        if n.bit(i) {
            acc = (&acc * &sq) % m;
        }
        sq = (&sq * &sq) % m;
    }
    acc
}

/// Random instance with an exponent that fills between half and all of the grid.
pub fn random_instance<R: Rng>(
    rng: &mut R,
    lambda: u16,
    m_bits: u64,
    segment_bits: u32,
    depth: u8,
) -> ExpInstance {
    let m = loop {
        let m = rng.gen_biguint(m_bits);
        if m.bits() == m_bits && m > b(2) {
            break m;
        }
    };
    let capacity = u64::from(segment_bits) << depth;
    let n_bits = rng.gen_range(1..=capacity);
    let n = rng.gen_biguint(n_bits);
    let a = loop {
        let a = rng.gen_biguint_below(&m);
        if a > BigUint::one() && num_integer::Integer::gcd(&a, &m).is_one() {
            break a;
        }
    };
    ExpInstance::new(lambda, m, segment_bits, a, n, depth).expect("valid instance")
}

pub fn table(inst: &ExpInstance) -> (BigUint, CheckpointTable) {
    mxcert::ltr_modexp(inst, &mut OpCounter::new())
}

/// Miller–Rabin with 24 random bases.
pub fn is_probable_prime<R: Rng>(rng: &mut R, n: &BigUint) -> bool {
    let two = b(2);
    if *n < two {
        return false;
    }
    for p in [2u32, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if *n == BigUint::from(p) {
            return true;
        }
        if (n % p) == BigUint::from(0u32) {
            return false;
        }
    }
    let n1 = n - 1u32;
    let s = n1.trailing_zeros().unwrap_or(0);
    let d = &n1 >> s;
    'witness: for _ in 0..24 {
        let a = rng.gen_biguint_range(&two, &n1);
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
