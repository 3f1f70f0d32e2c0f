//! Certificate generation.
//!
//! The prover walks the same fold sequence as the verifier, deriving each
//! challenge from the transcript. The round message `μ` is read off the
//! checkpoint table as a multi-exponentiation over the odd midpoints, so the
//! prover never redoes any of the `B·2^x` squarings.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::bigmod::{multi_exp, OpCounter};
use crate::certificate::{Certificate, CertificateHeader};
use crate::exponentiation::{ltr_modexp_from, CheckpointTable, ExpInstance, InstanceError};
use crate::folding::{aggregate_exponent, fold, FoldError, ProofState};
use crate::transcript::Transcript;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProveError {
    #[error("checkpoint table does not cover the instance grid")]
    GridMismatch,
    #[error("aggregate exponent has {c_bits} bits, more than the segment length allows")]
    NestedUnavailable { c_bits: u64 },
    #[error("inner grid must satisfy B' * 2^x' = B")]
    NestedShape,
    #[error("a residue in the certificate would be 0 (gcd(a, m) > 1)")]
    ZeroResidue,
    #[error("base state must be at level 0")]
    NotBaseState,
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Fold(#[from] FoldError),
}

/// `μ = ∏ u_{(2i+1)·B·2^(t−1)}^(w_i)` for a state at level `t ≥ 1`.
pub fn compute_mu(
    inst: &ExpInstance,
    table: &CheckpointTable,
    state: &ProofState,
    ctr: &mut OpCounter,
) -> Result<BigUint, ProveError> {
    if state.level() == 0 {
        return Err(FoldError::LevelZero.into());
    }
    if table.segment_bits() != inst.segment_bits()
        || table.depth() != inst.depth()
        || table.entries().len() != inst.segment_count() + 1
    {
        return Err(ProveError::GridMismatch);
    }
    let stride = 1usize << state.level();
    let half = stride / 2;
    let bases = (0..state.weights().len())
        .map(|i| {
            table
                .entry(i * stride + half)
                .cloned()
                .ok_or(ProveError::GridMismatch)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(multi_exp(&bases, state.weights(), inst.modulus(), ctr))
}

/// Builds the non-interactive certificate for `a^n mod m`.
pub fn prove(inst: &ExpInstance, table: &CheckpointTable) -> Result<Certificate, ProveError> {
    prove_counted(inst, table, &mut OpCounter::new())
}

pub fn prove_counted(
    inst: &ExpInstance,
    table: &CheckpointTable,
    ctr: &mut OpCounter,
) -> Result<Certificate, ProveError> {
    if !table.matches(inst) || !table.entries()[inst.segment_count()].is_one() {
        return Err(ProveError::GridMismatch);
    }
    let one = BigUint::one();
    run_rounds(inst, table, &one, ctr).map(|(cert, _)| cert)
}

/// Certificate for the generalized claim `(b, r, x, [1])`, where `table` was
/// produced by [`ltr_modexp_from`] starting at `b`. This certifies one interval
/// of a longer left-to-right run.
pub fn prove_from(
    inst: &ExpInstance,
    table: &CheckpointTable,
    start: &BigUint,
    ctr: &mut OpCounter,
) -> Result<(Certificate, ProofState), ProveError> {
    if !table.matches(inst) || &table.entries()[inst.segment_count()] != start {
        return Err(ProveError::GridMismatch);
    }
    run_rounds(inst, table, start, ctr)
}

fn run_rounds(
    inst: &ExpInstance,
    table: &CheckpointTable,
    start: &BigUint,
    ctr: &mut OpCounter,
) -> Result<(Certificate, ProofState), ProveError> {
    let m = inst.modulus();
    let claimed_r = table.result().clone();
    if claimed_r.is_zero() || start.is_zero() {
        return Err(ProveError::ZeroResidue);
    }

    let mut state = ProofState::initial(start.clone(), claimed_r.clone(), inst.depth());
    let mut transcript = Transcript::new(inst, &claimed_r);
    let mut mus = Vec::with_capacity(usize::from(inst.depth()));
    while state.level() > 0 {
        let mu = compute_mu(inst, table, &state, ctr)?;
        if mu.is_zero() {
            return Err(ProveError::ZeroResidue);
        }
        let (q, next) = transcript.derive_challenge(state.level(), state.b(), state.r(), &mu);
        transcript = next;
        state = fold(&state, &mu, &q, m, ctr)?;
        mus.push(mu);
    }

    let cert = Certificate {
        header: CertificateHeader::of(inst),
        claimed_r,
        mus,
        nested: None,
    };
    Ok((cert, state))
}

/// The instance whose certificate replaces the base-case check
/// `r ≡ b^(2^B) · a^c`: same `λ, m, a`, grid `(B', x')` with `B'·2^x' = B`, exponent `c`.
pub fn nested_instance(
    inst: &ExpInstance,
    base_state: &ProofState,
    inner_segment_bits: u32,
    inner_depth: u8,
) -> Result<ExpInstance, ProveError> {
    if base_state.level() != 0 {
        return Err(ProveError::NotBaseState);
    }
    if (u64::from(inner_segment_bits) << inner_depth) != u64::from(inst.segment_bits()) {
        return Err(ProveError::NestedShape);
    }
    let c = aggregate_exponent(inst, base_state);
    if c.bits() > u64::from(inst.segment_bits()) {
        return Err(ProveError::NestedUnavailable { c_bits: c.bits() });
    }
    Ok(ExpInstance::new(
        inst.lambda(),
        inst.modulus().value().clone(),
        inner_segment_bits,
        inst.base().clone(),
        c,
        inner_depth,
    )?)
}

/// Evaluates `b^(2^B) · a^c` left to right from the base state, capturing
/// checkpoints every `B'` steps. Costs exactly `B` squarings.
pub fn nested_trace(
    inst: &ExpInstance,
    base_state: &ProofState,
    inner_segment_bits: u32,
    inner_depth: u8,
    ctr: &mut OpCounter,
) -> Result<(ExpInstance, CheckpointTable), ProveError> {
    let inner = nested_instance(inst, base_state, inner_segment_bits, inner_depth)?;
    let table = ltr_modexp_from(&inner, base_state.b(), ctr);
    Ok((inner, table))
}

/// Certificate for the base-case claim of `inst` at `base_state`, from
/// checkpoints produced by [`nested_trace`].
pub fn nested_prove(
    inst: &ExpInstance,
    base_state: &ProofState,
    trace: &CheckpointTable,
    ctr: &mut OpCounter,
) -> Result<Certificate, ProveError> {
    let inner = nested_instance(inst, base_state, trace.segment_bits(), trace.depth())?;
    if trace.result() != base_state.r() {
        return Err(ProveError::GridMismatch);
    }
    prove_from(&inner, trace, base_state.b(), ctr).map(|(cert, _)| cert)
}

/// Cost breakdown of a nested proof.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NestedProofCost {
    pub outer: OpCounter,
    pub trace: OpCounter,
    pub inner: OpCounter,
}

/// Outer certificate with one nested certificate for its base case.
pub fn prove_nested(
    inst: &ExpInstance,
    table: &CheckpointTable,
    inner_segment_bits: u32,
    inner_depth: u8,
) -> Result<(Certificate, NestedProofCost), ProveError> {
    let mut cost = NestedProofCost::default();
    if !table.matches(inst) || !table.entries()[inst.segment_count()].is_one() {
        return Err(ProveError::GridMismatch);
    }
    let (mut cert, base_state) = run_rounds(inst, table, &BigUint::one(), &mut cost.outer)?;
    let (_, trace) = nested_trace(
        inst,
        &base_state,
        inner_segment_bits,
        inner_depth,
        &mut cost.trace,
    )?;
    let inner = nested_prove(inst, &base_state, &trace, &mut cost.inner)?;
    cert.nested = Some(Box::new(inner));
    Ok((cert, cost))
}
