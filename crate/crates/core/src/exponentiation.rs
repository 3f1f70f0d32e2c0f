//! Left-to-right modular exponentiation with checkpoint capture.
//!
//! The exponent is treated as zero-padded to `B·2^x` bits. Walking that padded
//! grid from the top, the running value `u_i = a^⌊n/2^i⌋` is squared once per
//! bit and multiplied by `a` on one-bits; every `B` bits the current value is
//! stored, giving `2^x + 1` checkpoints `u_0, u_B, …, u_{B·2^x} = 1`.

use std::io::{Read, Write};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bigmod::{mod_mul, mod_pow, mod_sqr, ArithError, Modulus, OpCounter};
use crate::transcript::encode_int;
use crate::wire::{WireError, WireReader};

/// Largest supported recursion depth; the checkpoint table holds `2^x + 1` residues.
pub const MAX_DEPTH: u8 = 30;
/// Largest supported security parameter (challenge bytes come from one SHA-256 digest).
pub const MAX_LAMBDA: u16 = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error(transparent)]
    Modulus(#[from] ArithError),
    #[error("security parameter {0} outside 1..={MAX_LAMBDA}")]
    Lambda(u16),
    #[error("segment length must be at least 1")]
    SegmentBits,
    #[error("depth {0} exceeds {MAX_DEPTH}")]
    Depth(u8),
    #[error("base must satisfy 1 <= a < m")]
    Base,
    #[error("exponent has {bits} bits but the grid holds only {capacity}")]
    ExponentTooLarge { bits: u64, capacity: u64 },
    #[error("checkpoint table needs 2^x + 1 entries, each below m")]
    TableShape,
}

/// The agreed parameters of one claim `a^n mod m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpInstance {
    lambda: u16,
    modulus: Modulus,
    segment_bits: u32,
    base: BigUint,
    exponent: BigUint,
    depth: u8,
}

impl ExpInstance {
    pub fn new(
        lambda: u16,
        modulus: BigUint,
        segment_bits: u32,
        base: BigUint,
        exponent: BigUint,
        depth: u8,
    ) -> Result<Self, InstanceError> {
        let modulus = Modulus::new(modulus)?;
        if lambda == 0 || lambda > MAX_LAMBDA {
            return Err(InstanceError::Lambda(lambda));
        }
        if segment_bits == 0 {
            return Err(InstanceError::SegmentBits);
        }
        if depth > MAX_DEPTH {
            return Err(InstanceError::Depth(depth));
        }
        if base.is_zero() || !modulus.contains(&base) {
            return Err(InstanceError::Base);
        }
        let capacity = u64::from(segment_bits) << depth;
        if exponent.bits() > capacity {
            return Err(InstanceError::ExponentTooLarge {
                bits: exponent.bits(),
                capacity,
            });
        }
        Ok(ExpInstance {
            lambda,
            modulus,
            segment_bits,
            base,
            exponent,
            depth,
        })
    }

    /// Smallest depth `x` with `bitlen(n) ≤ B·2^x`.
    pub fn auto_depth(exponent: &BigUint, segment_bits: u32) -> u8 {
        let bits = exponent.bits();
        let mut depth = 0u8;
        while (u64::from(segment_bits) << depth) < bits {
            depth += 1;
        }
        depth
    }

    pub fn lambda(&self) -> u16 {
        self.lambda
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn segment_bits(&self) -> u32 {
        self.segment_bits
    }

    pub fn base(&self) -> &BigUint {
        &self.base
    }

    pub fn exponent(&self) -> &BigUint {
        &self.exponent
    }

    pub fn depth(&self) -> u8 {
        self.depth
    }

    /// `L`, the bit length of `n`.
    pub fn exponent_bits(&self) -> u64 {
        self.exponent.bits()
    }

    /// `B·2^x`, the length of the padded exponent grid.
    pub fn padded_bits(&self) -> u64 {
        u64::from(self.segment_bits) << self.depth
    }

    /// `2^x`.
    pub fn segment_count(&self) -> usize {
        1usize << self.depth
    }
}

/// `⌊z / 2^offset⌋ mod 2^len`.
pub fn bit_window(z: &BigUint, offset: u64, len: u64) -> BigUint {
    if len == 0 || offset >= z.bits() {
        return BigUint::zero();
    }
    let shifted = z >> offset;
    if shifted.bits() <= len {
        return shifted;
    }
    let mask = (BigUint::one() << len) - 1u32;
    shifted & mask
}

/// `S(offset, len) = a^(⌊n/2^offset⌋ mod 2^len) mod m`.
pub fn compute_s(inst: &ExpInstance, offset: u64, len: u64, ctr: &mut OpCounter) -> BigUint {
    let e = bit_window(&inst.exponent, offset, len);
    mod_pow(&inst.base, &e, &inst.modulus, ctr)
}

/// Stored residues `u_{iB}` for `i = 0..=2^x`, together with the parameters
/// they were computed for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckpointTable {
    modulus: Modulus,
    base: BigUint,
    exponent: BigUint,
    segment_bits: u32,
    depth: u8,
    entries: Vec<BigUint>,
}

impl CheckpointTable {
    /// Assembles a table from raw parts, checking shape and ranges.
    pub fn from_parts(
        modulus: BigUint,
        base: BigUint,
        exponent: BigUint,
        segment_bits: u32,
        depth: u8,
        entries: Vec<BigUint>,
    ) -> Result<Self, InstanceError> {
        // Reuse the instance validation; lambda is irrelevant here.
        let inst = ExpInstance::new(1, modulus, segment_bits, base, exponent, depth)?;
        if entries.len() != inst.segment_count() + 1
            || entries.iter().any(|e| !inst.modulus.contains(e))
        {
            return Err(InstanceError::TableShape);
        }
        Ok(CheckpointTable {
            modulus: inst.modulus,
            base: inst.base,
            exponent: inst.exponent,
            segment_bits,
            depth,
            entries,
        })
    }

    pub fn entries(&self) -> &[BigUint] {
        &self.entries
    }

    pub fn entry(&self, i: usize) -> Option<&BigUint> {
        self.entries.get(i)
    }

    /// `u_0 = a^n mod m` (for a table started from 1).
    pub fn result(&self) -> &BigUint {
        &self.entries[0]
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn base(&self) -> &BigUint {
        &self.base
    }

    pub fn exponent(&self) -> &BigUint {
        &self.exponent
    }

    pub fn segment_bits(&self) -> u32 {
        self.segment_bits
    }

    pub fn depth(&self) -> u8 {
        self.depth
    }

    /// Whether the table was captured for exactly this instance's parameters.
    pub fn matches(&self, inst: &ExpInstance) -> bool {
        self.modulus == inst.modulus
            && self.base == inst.base
            && self.exponent == inst.exponent
            && self.segment_bits == inst.segment_bits
            && self.depth == inst.depth
    }

    /// Rebuilds the instance this table belongs to under security parameter `lambda`.
    pub fn instance(&self, lambda: u16) -> Result<ExpInstance, InstanceError> {
        ExpInstance::new(
            lambda,
            self.modulus.value().clone(),
            self.segment_bits,
            self.base.clone(),
            self.exponent.clone(),
            self.depth,
        )
    }

    /// Overwrites one entry. Intended for fault-injection experiments.
    pub fn set_entry(&mut self, i: usize, value: BigUint) {
        self.entries[i] = self.modulus.reduce(&value);
    }
}

/// Computes `a^n mod m`, capturing a checkpoint every `B` bits.
///
/// Costs exactly `B·2^x` squarings and `popcount(n)` multiplications by `a`.
pub fn ltr_modexp(inst: &ExpInstance, ctr: &mut OpCounter) -> (BigUint, CheckpointTable) {
    let one = BigUint::one() % inst.modulus.value();
    let table = ltr_modexp_from(inst, &one, ctr);
    (table.result().clone(), table)
}

/// Like [`ltr_modexp`] but the walk starts from `u_{B·2^x} = start` instead of 1,
/// so the final value is `start^(2^(B·2^x)) · a^n`.
pub fn ltr_modexp_from(
    inst: &ExpInstance,
    start: &BigUint,
    ctr: &mut OpCounter,
) -> CheckpointTable {
    let m = &inst.modulus;
    let segment = u64::from(inst.segment_bits);
    let count = inst.segment_count();
    let mut entries = vec![BigUint::zero(); count + 1];

    let mut u = m.reduce(start);
    entries[count] = u.clone();
    for pos in (0..inst.padded_bits()).rev() {
        u = mod_sqr(&u, m, ctr);
        if inst.exponent.bit(pos) {
            u = mod_mul(&u, &inst.base, m, ctr);
        }
        if pos % segment == 0 {
            entries[(pos / segment) as usize] = u.clone();
        }
    }

    CheckpointTable {
        modulus: inst.modulus.clone(),
        base: inst.base.clone(),
        exponent: inst.exponent.clone(),
        segment_bits: inst.segment_bits,
        depth: inst.depth,
        entries,
    }
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"MXCK";
const CHECKPOINT_VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("malformed checkpoint file: {reason}")]
    Format { reason: String },
    #[error("checkpoint checksum mismatch")]
    Checksum,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<WireError> for CheckpointError {
    fn from(e: WireError) -> Self {
        CheckpointError::Format {
            reason: e.to_string(),
        }
    }
}

/// Serializes a table to the `MXCK` format.
pub fn checkpoint_to_bytes(table: &CheckpointTable) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.push(CHECKPOINT_VERSION);
    out.extend(encode_int(table.modulus.value()));
    out.extend(encode_int(&table.base));
    out.extend(encode_int(&table.exponent));
    out.extend_from_slice(&table.segment_bits.to_be_bytes());
    out.push(table.depth);
    out.extend_from_slice(&(table.entries.len() as u32).to_be_bytes());
    for e in &table.entries {
        out.extend(encode_int(e));
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

pub fn checkpoint_write<W: Write>(
    table: &CheckpointTable,
    mut stream: W,
) -> Result<(), CheckpointError> {
    stream.write_all(&checkpoint_to_bytes(table))?;
    stream.flush()?;
    Ok(())
}

pub fn checkpoint_read<R: Read>(mut stream: R) -> Result<CheckpointTable, CheckpointError> {
    let mut bytes = Vec::new();
    stream.read_to_end(&mut bytes)?;
    checkpoint_from_bytes(&bytes)
}

pub fn checkpoint_from_bytes(bytes: &[u8]) -> Result<CheckpointTable, CheckpointError> {
    let format = |reason: &str| CheckpointError::Format {
        reason: reason.to_string(),
    };
    let mut rd = WireReader::new(bytes);
    if rd.take(4)? != CHECKPOINT_MAGIC {
        return Err(format("bad magic"));
    }
    if rd.u8()? != CHECKPOINT_VERSION {
        return Err(format("unsupported version"));
    }
    let modulus = rd.int()?;
    let base = rd.int()?;
    let exponent = rd.int()?;
    let segment_bits = rd.u32()?;
    let depth = rd.u8()?;
    if depth > MAX_DEPTH {
        return Err(format("depth out of range"));
    }
    let count = rd.u32()? as usize;
    if count != (1usize << depth) + 1 {
        return Err(format("entry count does not match depth"));
    }
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        entries.push(rd.int()?);
    }
    let body_len = rd.position();
    let checksum = rd.take(32)?;
    if !rd.is_empty() {
        return Err(format("trailing bytes"));
    }
    if Sha256::digest(&bytes[..body_len]).as_slice() != checksum {
        return Err(CheckpointError::Checksum);
    }

    let inst = ExpInstance::new(1, modulus, segment_bits, base, exponent, depth)
        .map_err(|e| format(&e.to_string()))?;
    if entries.iter().any(|e| !inst.modulus.contains(e)) {
        return Err(format("entry not reduced modulo m"));
    }
    Ok(CheckpointTable {
        modulus: inst.modulus,
        base: inst.base,
        exponent: inst.exponent,
        segment_bits,
        depth,
        entries,
    })
}
