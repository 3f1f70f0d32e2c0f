//! Weighted batch check of a checkpoint table.
//!
//! Every segment claim `u_{lB} = u_{(l+1)B}^(2^B) · S(lB, B)` is raised to a
//! random weight and all of them are multiplied together:
//!
//! `∏ u_{lB}^(w_l) ≟ (∏ u_{(l+1)B}^(w_l))^(2^B) · a^(Σ w_l · (⌊n/2^(Bl)⌋ mod 2^B))`
//!
//! so the whole table is checked with `B` squarings plus two
//! multi-exponentiations instead of redoing the `B·2^x` squarings.

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use rand::Rng;
use thiserror::Error;

use crate::bigmod::{mod_mul, mod_pow, mod_sqr, multi_exp, OpCounter};
use crate::exponentiation::{bit_window, CheckpointTable, ExpInstance};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DoubleCheckError {
    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("weight {index} outside [1, 2^lambda]")]
    WeightRange { index: usize },
    #[error("at least one weight is required")]
    NoWeights,
    #[error("checkpoint table does not belong to this instance")]
    TableMismatch,
}

/// Outcome with per-phase operation counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DoubleCheckReport {
    pub accepted: bool,
    /// The `(…)^(2^B)` chain; always exactly `B` squarings.
    pub chain: OpCounter,
    /// Both multi-exponentiations, `a^Σ` and the final product.
    pub other: OpCounter,
}

impl DoubleCheckReport {
    pub fn total(&self) -> OpCounter {
        self.chain + self.other
    }
}

/// `count` independent uniform weights in `[1, 2^λ]`.
pub fn sample_weights<R: Rng + ?Sized>(
    rng: &mut R,
    count: usize,
    lambda: u16,
) -> Result<Vec<BigUint>, DoubleCheckError> {
    if count == 0 {
        return Err(DoubleCheckError::NoWeights);
    }
    let bound = BigUint::one() << lambda;
    Ok((0..count)
        .map(|_| rng.gen_biguint_below(&bound) + 1u32)
        .collect())
}

pub fn double_check(
    inst: &ExpInstance,
    table: &CheckpointTable,
    weights: &[BigUint],
) -> Result<DoubleCheckReport, DoubleCheckError> {
    let count = inst.segment_count();
    if weights.len() != count {
        return Err(DoubleCheckError::WeightCount {
            expected: count,
            got: weights.len(),
        });
    }
    let bound = BigUint::one() << inst.lambda();
    if let Some(index) = weights.iter().position(|w| w.is_zero() || *w > bound) {
        return Err(DoubleCheckError::WeightRange { index });
    }
    if !table.matches(inst) {
        return Err(DoubleCheckError::TableMismatch);
    }

    let m = inst.modulus();
    let segment = u64::from(inst.segment_bits());
    let entries = table.entries();
    let mut other = OpCounter::new();
    let mut chain = OpCounter::new();

    let lhs = multi_exp(&entries[..count], weights, m, &mut other);
    let mut mid = multi_exp(&entries[1..=count], weights, m, &mut other);
    for _ in 0..segment {
        mid = mod_sqr(&mid, m, &mut chain);
    }

    let n = inst.exponent();
    let mut sigma = BigUint::zero();
    for (l, w) in weights.iter().enumerate() {
        let window = bit_window(n, l as u64 * segment, segment);
        if !window.is_zero() {
            sigma += w * window;
        }
    }
    let a_sigma = mod_pow(inst.base(), &sigma, m, &mut other);
    let rhs = mod_mul(&mid, &a_sigma, m, &mut other);

    Ok(DoubleCheckReport {
        accepted: lhs == rhs,
        chain,
        other,
    })
}
