//! The `MXPC` certificate and its binary format.
//!
//! ```text
//! "MXPC" | version u8 = 1 | lambda u16 | B u32 | x u8
//!        | enc(m) | enc(a) | enc(n) | enc(r) | x × enc(μ)
//!        | nested u8 (0/1) | [nested certificate] | SHA-256 of everything before
//! ```
//!
//! Multi-byte fixed-width fields are big-endian; `enc` is
//! [`encode_int`](crate::transcript::encode_int). A nested certificate is
//! embedded whole, with its own magic and checksum, and may not nest further.

use num_bigint::BigUint;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::exponentiation::{ExpInstance, InstanceError};
use crate::transcript::encode_int;
use crate::wire::{WireError, WireReader};

const MAGIC: &[u8; 4] = b"MXPC";
const VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertificateError {
    #[error("malformed certificate: {reason}")]
    Format { reason: String },
    #[error("certificate checksum mismatch")]
    Checksum,
}

impl From<WireError> for CertificateError {
    fn from(e: WireError) -> Self {
        CertificateError::Format {
            reason: e.to_string(),
        }
    }
}

fn format_err(reason: &str) -> CertificateError {
    CertificateError::Format {
        reason: reason.to_string(),
    }
}

/// The instance parameters as carried by a certificate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertificateHeader {
    pub lambda: u16,
    pub modulus: BigUint,
    pub segment_bits: u32,
    pub depth: u8,
    pub base: BigUint,
    pub exponent: BigUint,
}

impl CertificateHeader {
    pub fn of(inst: &ExpInstance) -> Self {
        CertificateHeader {
            lambda: inst.lambda(),
            modulus: inst.modulus().value().clone(),
            segment_bits: inst.segment_bits(),
            depth: inst.depth(),
            base: inst.base().clone(),
            exponent: inst.exponent().clone(),
        }
    }

    pub fn instance(&self) -> Result<ExpInstance, InstanceError> {
        ExpInstance::new(
            self.lambda,
            self.modulus.clone(),
            self.segment_bits,
            self.base.clone(),
            self.exponent.clone(),
            self.depth,
        )
    }

    pub fn matches(&self, inst: &ExpInstance) -> bool {
        *self == CertificateHeader::of(inst)
    }

    fn encoded_len(&self) -> usize {
        12 + encode_int(&self.modulus).len()
            + encode_int(&self.base).len()
            + encode_int(&self.exponent).len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub header: CertificateHeader,
    pub claimed_r: BigUint,
    /// `μ_x, μ_(x−1), …, μ_1`.
    pub mus: Vec<BigUint>,
    pub nested: Option<Box<Certificate>>,
}

impl Certificate {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_into(&mut out);
        out
    }

    fn write_into(&self, out: &mut Vec<u8>) {
        let start = out.len();
        let h = &self.header;
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&h.lambda.to_be_bytes());
        out.extend_from_slice(&h.segment_bits.to_be_bytes());
        out.push(h.depth);
        out.extend(encode_int(&h.modulus));
        out.extend(encode_int(&h.base));
        out.extend(encode_int(&h.exponent));
        out.extend(encode_int(&self.claimed_r));
        for mu in &self.mus {
            out.extend(encode_int(mu));
        }
        match &self.nested {
            None => out.push(0),
            Some(inner) => {
                out.push(1);
                inner.write_into(out);
            }
        }
        let digest = Sha256::digest(&out[start..]);
        out.extend_from_slice(&digest);
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CertificateError> {
        let mut rd = WireReader::new(bytes);
        let cert = Self::read_from(bytes, &mut rd, true)?;
        if !rd.is_empty() {
            return Err(format_err("trailing bytes"));
        }
        Ok(cert)
    }

    fn read_from(
        bytes: &[u8],
        rd: &mut WireReader<'_>,
        allow_nested: bool,
    ) -> Result<Self, CertificateError> {
        let start = rd.position();
        if rd.take(4)? != MAGIC {
            return Err(format_err("bad magic"));
        }
        if rd.u8()? != VERSION {
            return Err(format_err("unsupported version"));
        }
        let lambda = rd.u16()?;
        let segment_bits = rd.u32()?;
        let depth = rd.u8()?;
        let modulus = rd.int()?;
        let base = rd.int()?;
        let exponent = rd.int()?;
        let claimed_r = rd.int()?;
        let mut mus = Vec::with_capacity(usize::from(depth));
        for _ in 0..depth {
            mus.push(rd.int()?);
        }
        let nested = match rd.u8()? {
            0 => None,
            1 if allow_nested => Some(Box::new(Self::read_from(bytes, rd, false)?)),
            1 => return Err(format_err("nested certificate may not nest again")),
            _ => return Err(format_err("bad nested flag")),
        };
        let body_end = rd.position();
        let checksum = rd.take(32)?;
        if Sha256::digest(&bytes[start..body_end]).as_slice() != checksum {
            return Err(CertificateError::Checksum);
        }
        Ok(Certificate {
            header: CertificateHeader {
                lambda,
                modulus,
                segment_bits,
                depth,
                base,
                exponent,
            },
            claimed_r,
            mus,
            nested,
        })
    }

    /// Number of residues carried (claimed result plus one per round), nested included.
    pub fn residue_count(&self) -> usize {
        1 + self.mus.len() + self.nested.as_ref().map_or(0, |n| n.residue_count())
    }

    /// Serialized length of the fixed header fields plus `enc(m)`, `enc(a)`, `enc(n)`.
    pub fn header_len(&self) -> usize {
        self.header.encoded_len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(v: u64) -> BigUint {
        BigUint::from(v)
    }

    fn sample() -> Certificate {
        Certificate {
            header: CertificateHeader {
                lambda: 8,
                modulus: b(1000),
                segment_bits: 1,
                depth: 2,
                base: b(3),
                exponent: b(11),
            },
            claimed_r: b(147),
            mus: vec![b(9), b(500)],
            nested: None,
        }
    }

    #[test]
    fn layout() {
        let bytes = sample().to_bytes();
        assert_eq!(&bytes[..4], b"MXPC");
        assert_eq!(bytes[4], 1);
        assert_eq!(&bytes[5..7], &[0, 8]);
        assert_eq!(&bytes[7..11], &[0, 0, 0, 1]);
        assert_eq!(bytes[11], 2);
        // m = 1000 = 0x03e8
        assert_eq!(&bytes[12..18], &[0, 0, 0, 2, 0x03, 0xe8]);
        assert_eq!(bytes[bytes.len() - 33], 0);
        assert_eq!(bytes.len(), sample().header_len() + 5 + 5 + 6 + 1 + 32);
    }

    #[test]
    fn round_trip_with_nesting() {
        let mut outer = sample();
        let mut inner = sample();
        inner.header.segment_bits = 2;
        inner.header.depth = 0;
        inner.mus.clear();
        outer.nested = Some(Box::new(inner));
        let bytes = outer.to_bytes();
        assert_eq!(Certificate::from_bytes(&bytes).unwrap(), outer);
        assert_eq!(outer.residue_count(), 4);
    }

    #[test]
    fn rejects_double_nesting() {
        let mut inner = sample();
        inner.nested = Some(Box::new(sample()));
        let mut outer = sample();
        outer.nested = Some(Box::new(inner));
        assert!(matches!(
            Certificate::from_bytes(&outer.to_bytes()),
            Err(CertificateError::Format { .. })
        ));
    }

    #[test]
    fn corruption_is_detected() {
        let bytes = sample().to_bytes();
        assert!(matches!(
            Certificate::from_bytes(&bytes[..bytes.len() - 1]),
            Err(CertificateError::Format { .. })
        ));
        let mut flipped = bytes.clone();
        // low byte of claimed_r
        let idx = sample().header_len() + 4;
        flipped[idx] ^= 0x10;
        assert_eq!(
            Certificate::from_bytes(&flipped),
            Err(CertificateError::Checksum)
        );
        let mut extended = bytes;
        extended.push(0);
        assert!(matches!(
            Certificate::from_bytes(&extended),
            Err(CertificateError::Format { .. })
        ));
    }
}
