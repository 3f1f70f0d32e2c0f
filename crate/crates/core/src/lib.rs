//! Certificates for left-to-right modular exponentiation.
//!
//! A prover computes `a^n mod m` once, storing a residue every `B` exponent
//! bits, and then emits a certificate of `x = log2(L/B)` residues. A verifier
//! checks the certificate with `x` cheap fold rounds and a single `B`-squaring
//! base case instead of recomputing the exponentiation.
//!
//! Module map:
//! - [`bigmod`]: modular arithmetic with operation counting
//! - [`exponentiation`]: checkpointed exponentiation and the `MXCK` file
//! - [`doublecheck`]: randomized batch check of a checkpoint table
//! - [`folding`]: protocol states and the round fold
//! - [`transcript`]: integer encoding and Fiat–Shamir challenges
//! - [`prover`] / [`verifier`] / [`certificate`]: the `MXPC` certificate
//! - `soundness` (feature `testing-oracle`): extractor and forgery experiments

pub mod bigmod;
pub mod certificate;
pub mod doublecheck;
pub mod exponentiation;
pub mod folding;
pub mod prover;
#[cfg(any(test, feature = "testing-oracle"))]
pub mod soundness;
pub mod transcript;
pub mod verifier;
mod wire;

pub use bigmod::{Modulus, OpCounter};
pub use certificate::{Certificate, CertificateError, CertificateHeader};
pub use exponentiation::{ltr_modexp, CheckpointTable, ExpInstance, InstanceError};
pub use folding::{Challenge, ProofState};
pub use prover::{prove, ProveError};
pub use verifier::{verify, Rejection};
