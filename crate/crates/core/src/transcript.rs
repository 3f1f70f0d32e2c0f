//! Canonical integer encoding and the Fiat–Shamir challenge schedule.
//!
//! The transcript is a SHA-256 chain. It is seeded with the domain tag and the
//! full instance plus the claimed result; each round absorbs `(t, b, r, μ)`
//! and the challenge is read from the new chaining value. Because `μ` is
//! absorbed before `Q` is produced, a prover cannot choose `μ` after seeing
//! the challenge it will be folded with.

use num_bigint::BigUint;
use num_traits::One;
use sha2::{Digest, Sha256};

use crate::exponentiation::ExpInstance;
use crate::folding::Challenge;

pub const DOMAIN_TAG: &[u8] = b"MXPC-FS-v1";

/// 4-byte big-endian length followed by the minimal big-endian magnitude.
/// Zero encodes as an empty payload.
pub fn encode_int(z: &BigUint) -> Vec<u8> {
    let payload = if z.bits() == 0 {
        Vec::new()
    } else {
        z.to_bytes_be()
    };
    let mut out = Vec::with_capacity(4 + payload.len());
    out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
    out.extend(payload);
    out
}

/// Inverse of [`encode_int`]. Returns the value and the number of bytes consumed.
pub fn decode_int(bytes: &[u8]) -> Option<(BigUint, usize)> {
    let len = u32::from_be_bytes(bytes.get(..4)?.try_into().ok()?) as usize;
    let payload = bytes.get(4..4usize.checked_add(len)?)?;
    if payload.first() == Some(&0) {
        return None;
    }
    Some((BigUint::from_bytes_be(payload), 4 + len))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    state: [u8; 32],
    lambda: u16,
}

impl Transcript {
    pub fn new(inst: &ExpInstance, claimed_r: &BigUint) -> Self {
        let mut h = Sha256::new();
        h.update(DOMAIN_TAG);
        h.update(encode_int(&BigUint::from(inst.lambda())));
        h.update(encode_int(inst.modulus().value()));
        h.update(encode_int(&BigUint::from(inst.segment_bits())));
        h.update(encode_int(&BigUint::from(inst.depth())));
        h.update(encode_int(inst.base()));
        h.update(encode_int(inst.exponent()));
        h.update(encode_int(claimed_r));
        Transcript {
            state: h.finalize().into(),
            lambda: inst.lambda(),
        }
    }

    pub fn state(&self) -> &[u8; 32] {
        &self.state
    }

    /// Absorbs one round `(t, b, r, μ)` and returns `Q ∈ [1, 2^λ]` with the
    /// advanced transcript.
    pub fn derive_challenge(
        &self,
        level: u32,
        b: &BigUint,
        r: &BigUint,
        mu: &BigUint,
    ) -> (Challenge, Transcript) {
        let mut h = Sha256::new();
        h.update(self.state);
        h.update(encode_int(&BigUint::from(level)));
        h.update(encode_int(b));
        h.update(encode_int(r));
        h.update(encode_int(mu));
        let state: [u8; 32] = h.finalize().into();

        let lambda = u64::from(self.lambda);
        let take = lambda.div_ceil(8) as usize;
        let sample = BigUint::from_bytes_be(&state[..take]);
        let mask = (BigUint::one() << lambda) - 1u32;
        let q = (sample & mask) + 1u32;

        let next = Transcript {
            state,
            lambda: self.lambda,
        };
        (Challenge::new_unchecked(q), next)
    }
}
