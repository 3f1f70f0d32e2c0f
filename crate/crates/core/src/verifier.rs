//! Certificate verification.
//!
//! The verifier replays the `x` fold rounds (two `λ`-bit powers each) and then
//! checks the level-0 claim `r ≡ b^(2^B) · a^c` directly, or hands it to the
//! nested certificate when one is attached.

use num_bigint::BigUint;
use num_traits::Zero;
use thiserror::Error;

use crate::bigmod::{mod_mul, mod_pow, mod_sqr, OpCounter};
use crate::certificate::{Certificate, CertificateError};
use crate::exponentiation::{bit_window, ExpInstance};
use crate::folding::{aggregate_exponent, fold, ProofState};
use crate::transcript::Transcript;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Rejection {
    #[error("certificate header does not match the instance")]
    HeaderMismatch,
    #[error("certificate residue outside [1, m)")]
    RangeViolation,
    #[error("base-case congruence failed")]
    BaseCaseFailed,
    #[error("nested certificate rejected: {0}")]
    NestedFailed(Box<Rejection>),
    #[error("certificate format: {0}")]
    FormatError(String),
}

impl From<CertificateError> for Rejection {
    fn from(e: CertificateError) -> Self {
        Rejection::FormatError(e.to_string())
    }
}

/// Per-phase operation counts of one verification.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VerificationCost {
    /// Fold rounds of the outer certificate.
    pub rounds: OpCounter,
    /// Fold rounds of the nested certificate, if any.
    pub nested_rounds: OpCounter,
    /// The `b^(2^B)` chain of whichever base case was checked.
    pub base_chain_squarings: u64,
    /// Everything else in the base case: `a^c` and the final product.
    pub base_other: OpCounter,
    /// Bit length of the aggregate exponent `c` of the checked base case.
    pub base_exponent_bits: u64,
}

impl VerificationCost {
    pub fn total(&self) -> OpCounter {
        self.rounds
            + self.nested_rounds
            + self.base_other
            + OpCounter {
                squarings: self.base_chain_squarings,
                general_multiplications: 0,
            }
    }
}

/// Work done by one base-case check.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BaseCaseCost {
    pub chain_squarings: u64,
    pub other: OpCounter,
    pub exponent_bits: u64,
}

pub fn verify(inst: &ExpInstance, cert: &Certificate) -> Result<(), Rejection> {
    verify_with_cost(inst, cert).0
}

pub fn verify_bytes(inst: &ExpInstance, bytes: &[u8]) -> Result<(), Rejection> {
    let cert = Certificate::from_bytes(bytes)?;
    verify(inst, &cert)
}

/// Runs [`verify`] with fresh counters and returns the per-phase breakdown.
pub fn verification_cost_report(
    inst: &ExpInstance,
    cert: &Certificate,
) -> Result<VerificationCost, Rejection> {
    let (verdict, cost) = verify_with_cost(inst, cert);
    verdict.map(|_| cost)
}

pub fn verify_with_cost(
    inst: &ExpInstance,
    cert: &Certificate,
) -> (Result<(), Rejection>, VerificationCost) {
    let mut cost = VerificationCost::default();
    let verdict = verify_inner(inst, cert, &mut cost);
    (verdict, cost)
}

fn verify_inner(
    inst: &ExpInstance,
    cert: &Certificate,
    cost: &mut VerificationCost,
) -> Result<(), Rejection> {
    if !cert.header.matches(inst) || cert.mus.len() != usize::from(inst.depth()) {
        return Err(Rejection::HeaderMismatch);
    }
    let m = inst.modulus();
    let in_range = |v: &BigUint| !v.is_zero() && m.contains(v);
    let residues = |c: &Certificate| {
        std::iter::once(&c.claimed_r)
            .chain(c.mus.iter())
            .all(in_range)
    };
    if !residues(cert)
        || cert
            .nested
            .as_deref()
            .is_some_and(|n| !residues(n) || n.header.modulus != *m.value())
    {
        return Err(Rejection::RangeViolation);
    }

    let start = ProofState::initial(BigUint::from(1u32), cert.claimed_r.clone(), inst.depth());
    let base_state = replay_rounds(inst, &start, cert, &mut cost.rounds);

    match cert.nested.as_deref() {
        None => {
            let mut base = BaseCaseCost::default();
            let ok = verify_base_case(inst, &base_state, &mut base);
            cost.record_base(base);
            ok.then_some(()).ok_or(Rejection::BaseCaseFailed)
        }
        Some(inner) => verify_nested(inst, &base_state, inner, cost)
            .map_err(|e| Rejection::NestedFailed(Box::new(e))),
    }
}

impl VerificationCost {
    fn record_base(&mut self, base: BaseCaseCost) {
        self.base_chain_squarings = base.chain_squarings;
        self.base_other = base.other;
        self.base_exponent_bits = base.exponent_bits;
    }
}

fn replay_rounds(
    inst: &ExpInstance,
    start: &ProofState,
    cert: &Certificate,
    ctr: &mut OpCounter,
) -> ProofState {
    let m = inst.modulus();
    let mut transcript = Transcript::new(inst, &cert.claimed_r);
    let mut state = start.clone();
    for mu in &cert.mus {
        let (q, next) = transcript.derive_challenge(state.level(), state.b(), state.r(), mu);
        transcript = next;
        // mu is range-checked and level > 0 while mus remain
        state = fold(&state, mu, &q, m, ctr).expect("range-checked round");
    }
    state
}

fn verify_nested(
    inst: &ExpInstance,
    base_state: &ProofState,
    inner: &Certificate,
    cost: &mut VerificationCost,
) -> Result<(), Rejection> {
    let h = &inner.header;
    if (u64::from(h.segment_bits) << h.depth) != u64::from(inst.segment_bits())
        || h.lambda != inst.lambda()
        || h.base != *inst.base()
        || h.exponent != aggregate_exponent(inst, base_state)
        || inner.mus.len() != usize::from(h.depth)
    {
        return Err(Rejection::HeaderMismatch);
    }
    let inner_inst = h.instance().map_err(|_| Rejection::HeaderMismatch)?;
    if inner.claimed_r != *base_state.r() {
        return Err(Rejection::BaseCaseFailed);
    }

    let start = ProofState::initial(base_state.b().clone(), inner.claimed_r.clone(), h.depth);
    let inner_base = replay_rounds(&inner_inst, &start, inner, &mut cost.nested_rounds);
    let mut base = BaseCaseCost::default();
    let ok = verify_base_case(&inner_inst, &inner_base, &mut base);
    cost.record_base(base);
    ok.then_some(()).ok_or(Rejection::BaseCaseFailed)
}

/// Checks `r ≡ b^(2^B) · a^c (mod m)` for a level-0 state.
///
/// Evaluated as `(b · a^⌊c/2^B⌋)^(2^B) · a^(c mod 2^B)` left to right, so the
/// chain is exactly `B` squarings and the low bits of `c` cost one
/// multiplication by `a` each.
pub fn verify_base_case(inst: &ExpInstance, state: &ProofState, cost: &mut BaseCaseCost) -> bool {
    assert_eq!(state.level(), 0, "base case needs a level-0 state");
    let m = inst.modulus();
    let segment = u64::from(inst.segment_bits());
    let c = aggregate_exponent(inst, state);
    cost.exponent_bits = c.bits();

    let high = &c >> segment;
    let mut acc = if high.is_zero() {
        m.reduce(state.b())
    } else {
        let a_high = mod_pow(inst.base(), &high, m, &mut cost.other);
        mod_mul(state.b(), &a_high, m, &mut cost.other)
    };
    let low = bit_window(&c, 0, segment);
    let mut chain = OpCounter::new();
    for pos in (0..segment).rev() {
        acc = mod_sqr(&acc, m, &mut chain);
        if low.bit(pos) {
            acc = mod_mul(&acc, inst.base(), m, &mut cost.other);
        }
    }
    cost.chain_squarings = chain.squarings;
    acc == *state.r()
}
