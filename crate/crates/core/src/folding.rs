//! Protocol states and the round fold shared by prover and verifier.
//!
//! A state `(b, r, t, w)` asserts
//! `r ≡ b^(2^(B·2^t)) · ∏ S(i·B·2^t, B·2^t)^(w_i)  (mod m)`,
//! i.e. `r ≡ b^(2^(B·2^t)) · a^C` with `C` the weighted sum of the
//! `B·2^t`-bit windows of `n`. Folding with the midpoint aggregate `μ` and a
//! challenge `Q` halves the window width and doubles the number of weights.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::bigmod::{mod_mul, mod_pow, Modulus, OpCounter};
use crate::exponentiation::{bit_window, ExpInstance};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FoldError {
    #[error("state is already at level 0")]
    LevelZero,
    #[error("mu must satisfy 1 <= mu < m")]
    InvalidMu,
    #[error("challenge outside [1, 2^lambda]")]
    ChallengeRange,
}

/// A verifier challenge `Q ∈ [1, 2^λ]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Challenge(BigUint);

impl Challenge {
    pub fn new(q: BigUint, lambda: u16) -> Result<Self, FoldError> {
        if q.is_zero() || q > (BigUint::one() << lambda) {
            return Err(FoldError::ChallengeRange);
        }
        Ok(Challenge(q))
    }

    pub fn from_u64(q: u64, lambda: u16) -> Result<Self, FoldError> {
        Self::new(BigUint::from(q), lambda)
    }

    pub(crate) fn new_unchecked(q: BigUint) -> Self {
        Challenge(q)
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }
}

/// A point `(b, r, t, w_0 … w_{2^(x−t)−1})` of the protocol recursion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofState {
    b: BigUint,
    r: BigUint,
    level: u32,
    weights: Vec<BigUint>,
}

impl ProofState {
    pub fn new(b: BigUint, r: BigUint, level: u32, weights: Vec<BigUint>) -> Self {
        ProofState {
            b,
            r,
            level,
            weights,
        }
    }

    /// The starting claim `(b, r, x, [1])`; the plain protocol uses `b = 1`.
    pub fn initial(b: BigUint, r: BigUint, depth: u8) -> Self {
        ProofState::new(b, r, u32::from(depth), vec![BigUint::one()])
    }

    pub fn b(&self) -> &BigUint {
        &self.b
    }

    pub fn r(&self) -> &BigUint {
        &self.r
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn weights(&self) -> &[BigUint] {
        &self.weights
    }

    /// Range and shape checks: `1 ≤ b, r < m`, `t ≤ x`, `2^(x−t)` weights.
    pub fn is_well_formed(&self, inst: &ExpInstance) -> bool {
        let m = inst.modulus();
        let in_range = |v: &BigUint| !v.is_zero() && m.contains(v);
        self.level <= u32::from(inst.depth())
            && in_range(&self.b)
            && in_range(&self.r)
            && self.weights.len() == 1usize << (u32::from(inst.depth()) - self.level)
    }

    /// Returns a copy with `r` replaced; used to build corrupted claims.
    pub fn with_r(&self, r: BigUint) -> Self {
        ProofState { r, ..self.clone() }
    }
}

fn window_width(inst: &ExpInstance, level: u32) -> u64 {
    u64::from(inst.segment_bits()) << level
}

/// `C(I) = Σ w_i · (⌊n / 2^(i·B·2^t)⌋ mod 2^(B·2^t))`.
pub fn aggregate_exponent(inst: &ExpInstance, state: &ProofState) -> BigUint {
    weighted_windows(
        inst.exponent(),
        window_width(inst, state.level),
        0,
        1,
        &state.weights,
    )
}

/// Splits `C(I)` by even and odd half-windows of width `B·2^(t−1)`, so that
/// `c1 + 2^(B·2^(t−1))·c2 = C(I)`.
pub fn split_exponents(
    inst: &ExpInstance,
    state: &ProofState,
) -> Result<(BigUint, BigUint), FoldError> {
    if state.level == 0 {
        return Err(FoldError::LevelZero);
    }
    let half = window_width(inst, state.level - 1);
    let c1 = weighted_windows(inst.exponent(), half, 0, 2, &state.weights);
    let c2 = weighted_windows(inst.exponent(), half, 1, 2, &state.weights);
    Ok((c1, c2))
}

/// `Σ_i w_i · window(first + stride·i)` over `width`-bit windows of `n`.
fn weighted_windows(
    n: &BigUint,
    width: u64,
    first: u64,
    stride: u64,
    weights: &[BigUint],
) -> BigUint {
    let bits = n.bits();
    let mut sum = BigUint::zero();
    for (i, w) in weights.iter().enumerate() {
        let offset = (first + stride * i as u64).saturating_mul(width);
        if offset >= bits {
            break;
        }
        let window = bit_window(n, offset, width);
        if !window.is_zero() {
            sum += w * window;
        }
    }
    sum
}

/// One round: `(b, r, t, w) → (μ·b^Q, r·μ^Q, t−1, w_0, Q·w_0, w_1, Q·w_1, …)`.
///
/// The even half-windows keep weight `w_i` and relate `r` to `μ`; the odd
/// half-windows get `Q·w_i` and relate `μ` to `b`.
pub fn fold(
    state: &ProofState,
    mu: &BigUint,
    q: &Challenge,
    m: &Modulus,
    ctr: &mut OpCounter,
) -> Result<ProofState, FoldError> {
    if state.level == 0 {
        return Err(FoldError::LevelZero);
    }
    if mu.is_zero() || !m.contains(mu) {
        return Err(FoldError::InvalidMu);
    }
    let q = q.value();
    let b_q = mod_pow(&state.b, q, m, ctr);
    let mu_q = mod_pow(mu, q, m, ctr);
    let b = mod_mul(mu, &b_q, m, ctr);
    let r = mod_mul(&state.r, &mu_q, m, ctr);

    let mut weights = Vec::with_capacity(state.weights.len() * 2);
    for w in &state.weights {
        weights.push(w.clone());
        weights.push(w * q);
    }
    Ok(ProofState {
        b,
        r,
        level: state.level - 1,
        weights,
    })
}

/// Weight `i` after folding with `challenges = [Q_x, …, Q_(t+1)]`:
/// `∏_j Q_(t+1+j)^(bit_j(i))`, bit 0 being the least significant.
pub fn closed_form_weight(challenges: &[Challenge], index: usize) -> BigUint {
    // bit j of the index selects the challenge applied j+1 rounds before the end
    let depth = challenges.len();
    (0..depth)
        .filter(|j| index >> j & 1 == 1)
        .fold(BigUint::one(), |acc, j| {
            acc * challenges[depth - 1 - j].value()
        })
}

/// Exact membership test: `r ≡ b^(2^(B·2^t)) · a^C(I) (mod m)` with range checks.
///
/// Costs `B·2^t` squarings, so it is only meant as a test oracle.
#[cfg(any(test, feature = "testing-oracle"))]
pub fn in_language(inst: &ExpInstance, state: &ProofState) -> bool {
    if !state.is_well_formed(inst) {
        return false;
    }
    let m = inst.modulus();
    let mut ctr = OpCounter::new();
    let mut lhs = state.b.clone();
    for _ in 0..window_width(inst, state.level) {
        lhs = crate::bigmod::mod_sqr(&lhs, m, &mut ctr);
    }
    let c = aggregate_exponent(inst, state);
    let rhs = mod_mul(&lhs, &mod_pow(inst.base(), &c, m, &mut ctr), m, &mut ctr);
    rhs == state.r
}
