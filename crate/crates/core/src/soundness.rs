//! Soundness laboratory: low-order extraction, a low-order forgery, and a
//! rewinding experiment.
//!
//! These routines exercise the algebra behind the protocol's soundness at toy
//! sizes (small primes, `λ ≤ 8`). They rely on the exact membership oracle and
//! are only compiled with the `testing-oracle` feature.
//!
//! Two children of the same state `I = (b, r, t, w)` under challenges `Q ≠ Q'`
//! are both valid only if
//! `r / (μ^(2^h) · a^c1) ≡ (b^(2^h) · a^c2 / μ)^Q ≡ (b^(2^h) · a^c2 / μ)^Q'`
//! with `h = B·2^(t−1)`. When `I` itself is invalid, `E = b^(2^h) · a^c2 / μ`
//! is therefore a nontrivial element with `E^|Q−Q'| ≡ 1`.

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use rand::Rng;
use thiserror::Error;

use crate::bigmod::{mod_inv, mod_mul, mod_pow, mod_sqr, ArithError, Modulus, OpCounter};
use crate::exponentiation::{ltr_modexp, ExpInstance};
use crate::folding::{fold, in_language, split_exponents, Challenge, FoldError, ProofState};
use crate::prover::compute_mu;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabError {
    #[error("precondition failed: {0}")]
    PreconditionFailed(&'static str),
    #[error("found a factor of the modulus: {g}")]
    NotInvertible { g: BigUint },
    #[error("element does not have the stated order")]
    BadOrder,
    #[error("no forging exponent exists for this challenge")]
    NoSolution,
    #[error(transparent)]
    Fold(#[from] FoldError),
}

impl From<ArithError> for LabError {
    fn from(e: ArithError) -> Self {
        match e {
            ArithError::NotInvertible { g } => LabError::NotInvertible { g },
            ArithError::ModulusTooSmall => LabError::PreconditionFailed("modulus too small"),
        }
    }
}

/// One prover message accepted under two different challenges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForkSample {
    pub round: u32,
    pub state: ProofState,
    pub mu: BigUint,
    pub q: Challenge,
    pub q_prime: Challenge,
    pub child: ProofState,
    pub child_prime: ProofState,
}

impl ForkSample {
    pub fn new(
        inst: &ExpInstance,
        state: ProofState,
        mu: BigUint,
        q: Challenge,
        q_prime: Challenge,
    ) -> Result<Self, LabError> {
        if q == q_prime {
            return Err(LabError::PreconditionFailed("challenges must differ"));
        }
        let m = inst.modulus();
        let mut ctr = OpCounter::new();
        let child = fold(&state, &mu, &q, m, &mut ctr)?;
        let child_prime = fold(&state, &mu, &q_prime, m, &mut ctr)?;
        Ok(ForkSample {
            round: state.level(),
            state,
            mu,
            q,
            q_prime,
            child,
            child_prime,
        })
    }
}

/// `b^(2^h) · a^c2`: the midpoint value that makes the odd half of the claim
/// true, computed from `b` alone. Costs `h` squarings.
pub fn midpoint_from_b(inst: &ExpInstance, state: &ProofState) -> Result<BigUint, LabError> {
    let (_, c2) = split_exponents(inst, state)?;
    let m = inst.modulus();
    let mut ctr = OpCounter::new();
    let half = u64::from(inst.segment_bits()) << (state.level() - 1);
    let mut acc = state.b().clone();
    for _ in 0..half {
        acc = mod_sqr(&acc, m, &mut ctr);
    }
    Ok(mod_mul(
        &acc,
        &mod_pow(inst.base(), &c2, m, &mut ctr),
        m,
        &mut ctr,
    ))
}

/// Recovers `E = B(I)^(2^h) · a^c2 · μ^(−1)` from a fork on an invalid state.
/// `E ≢ 1` and `E^|Q−Q'| ≡ 1`.
pub fn extract_low_order(inst: &ExpInstance, sample: &ForkSample) -> Result<BigUint, LabError> {
    if sample.q == sample.q_prime {
        return Err(LabError::PreconditionFailed("challenges must differ"));
    }
    if in_language(inst, &sample.state) {
        return Err(LabError::PreconditionFailed("forked state is valid"));
    }
    if !in_language(inst, &sample.child) || !in_language(inst, &sample.child_prime) {
        return Err(LabError::PreconditionFailed("a child state is invalid"));
    }
    let m = inst.modulus();
    let mu_inv = mod_inv(&sample.mu, m)?;
    let odd_half = midpoint_from_b(inst, &sample.state)?;
    Ok(mod_mul(&odd_half, &mu_inv, m, &mut OpCounter::new()))
}

/// `|Q − Q'|`.
pub fn challenge_gap(sample: &ForkSample) -> BigUint {
    let (a, b) = (sample.q.value(), sample.q_prime.value());
    if a > b {
        a - b
    } else {
        b - a
    }
}

/// A corrupted top claim together with a message that survives the fold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Forgery {
    /// `(1, r·E, x, [1])` where `r = a^n mod m`.
    pub state: ProofState,
    /// `μ_honest · E^j`.
    pub mu: BigUint,
    pub j: u64,
}

/// The exponent `j ≡ (2^h − Q)^(−1) (mod d)` with `h = B·2^(x−1)`.
pub fn forging_exponent(inst: &ExpInstance, d: u64, q: &Challenge) -> Result<u64, LabError> {
    if inst.depth() == 0 {
        return Err(LabError::PreconditionFailed("depth 0 has no rounds"));
    }
    let dm = Modulus::new(BigUint::from(d)).map_err(|_| LabError::BadOrder)?;
    let half = BigUint::from(u64::from(inst.segment_bits()) << (inst.depth() - 1));
    let two_h = BigUint::from(2u32).modpow(&half, dm.value());
    let diff = (two_h + dm.value() - (q.value() % dm.value())) % dm.value();
    let j = mod_inv(&diff, &dm).map_err(|_| LabError::NoSolution)?;
    Ok(u64::try_from(j).expect("j < d"))
}

/// Forges a top claim `a^n ≡ r·E` that folds into a valid state for every
/// challenge congruent to `q` modulo `d`.
pub fn forge_low_order(
    inst: &ExpInstance,
    e: &BigUint,
    d: u64,
    q: &Challenge,
) -> Result<Forgery, LabError> {
    let m = inst.modulus();
    let mut ctr = OpCounter::new();
    if !m.contains(e)
        || e.is_one()
        || e.is_zero()
        || !mod_pow(e, &BigUint::from(d), m, &mut ctr).is_one()
    {
        return Err(LabError::BadOrder);
    }
    if BigUint::from(d) > BigUint::one() << inst.lambda() {
        return Err(LabError::PreconditionFailed("order exceeds 2^lambda"));
    }
    let j = forging_exponent(inst, d, q)?;

    let (r, table) = ltr_modexp(inst, &mut ctr);
    let honest = ProofState::initial(BigUint::one(), r.clone(), inst.depth());
    let mu_honest = compute_mu(inst, &table, &honest, &mut ctr)
        .map_err(|_| LabError::PreconditionFailed("table"))?;
    let mu = mod_mul(
        &mu_honest,
        &mod_pow(e, &BigUint::from(j), m, &mut ctr),
        m,
        &mut ctr,
    );
    let state = honest.with_r(mod_mul(&r, e, m, &mut ctr));
    Ok(Forgery { state, mu, j })
}

/// A complete interaction `I_x, (μ_x, I_(x−1)), …, (μ_1, I_0)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interaction {
    pub top: ProofState,
    pub rounds: Vec<(BigUint, ProofState)>,
}

impl Interaction {
    /// State at level `t` (`I_t`).
    pub fn state_at(&self, level: u32) -> &ProofState {
        let x = self.top.level();
        if level == x {
            &self.top
        } else {
            &self.rounds[(x - level - 1) as usize].1
        }
    }

    /// Message `μ_t` sent at level `t ≥ 1`.
    pub fn mu_at(&self, level: u32) -> &BigUint {
        &self.rounds[(self.top.level() - level) as usize].0
    }
}

/// A prover strategy that is deterministic given its random tape and sees the
/// challenges `[Q_x, …, Q_1]`.
pub trait Adversary {
    fn run(&self, inst: &ExpInstance, challenges: &[Challenge], tape: u64) -> Interaction;
}

/// Follows the protocol.
pub struct HonestProver;

impl Adversary for HonestProver {
    fn run(&self, inst: &ExpInstance, challenges: &[Challenge], _tape: u64) -> Interaction {
        let mut ctr = OpCounter::new();
        let (r, table) = ltr_modexp(inst, &mut ctr);
        let top = ProofState::initial(BigUint::one(), r, inst.depth());
        let mut state = top.clone();
        let mut rounds = Vec::new();
        for q in challenges {
            let mu = compute_mu(inst, &table, &state, &mut ctr).expect("honest table");
            state = fold(&state, &mu, q, inst.modulus(), &mut ctr).expect("honest fold");
            rounds.push((mu, state.clone()));
        }
        Interaction { top, rounds }
    }
}

/// Claims `a^n ≡ r·E` for an element `E` of order `d`. The tape picks a
/// residue class `k` of challenges (committing to `μ` before seeing `Q_x`);
/// later rounds are answered consistently from `b`.
pub struct LowOrderCheater {
    pub element: BigUint,
    pub order: u64,
}

impl LowOrderCheater {
    /// Challenge classes modulo `d` the cheater can target.
    pub fn target_classes(&self, inst: &ExpInstance) -> Vec<u64> {
        (0..self.order)
            .filter(|&k| {
                Challenge::from_u64(if k == 0 { self.order } else { k }, inst.lambda())
                    .ok()
                    .is_some_and(|q| forging_exponent(inst, self.order, &q).is_ok())
            })
            .collect()
    }

    pub fn class_for_tape(&self, inst: &ExpInstance, tape: u64) -> u64 {
        let classes = self.target_classes(inst);
        classes[(tape % classes.len() as u64) as usize]
    }
}

impl Adversary for LowOrderCheater {
    fn run(&self, inst: &ExpInstance, challenges: &[Challenge], tape: u64) -> Interaction {
        let m = inst.modulus();
        let mut ctr = OpCounter::new();
        let class = self.class_for_tape(inst, tape);
        // any challenge value in the target class yields the same forgery
        let representative =
            Challenge::from_u64(if class == 0 { self.order } else { class }, inst.lambda())
                .expect("class representative within range");
        let forgery = forge_low_order(inst, &self.element, self.order, &representative)
            .expect("valid forgery setup");

        let mut state = forgery.state.clone();
        let mut rounds = Vec::new();
        let mut mu = forgery.mu;
        for q in challenges {
            let next = fold(&state, &mu, q, m, &mut ctr).expect("unit residues");
            rounds.push((mu, next.clone()));
            state = next;
            mu = if state.level() > 0 {
                midpoint_from_b(inst, &state).expect("level > 0")
            } else {
                BigUint::one()
            };
        }
        Interaction {
            top: forgery.state,
            rounds,
        }
    }
}

/// Whether the interaction starts from a false claim and ends at a true one.
/// Returns the least level `y` with `I_y` invalid.
pub fn deceiving_round(inst: &ExpInstance, interaction: &Interaction) -> Option<u32> {
    let x = interaction.top.level();
    if interaction.rounds.len() != x as usize || in_language(inst, &interaction.top) {
        return None;
    }
    if !in_language(inst, interaction.state_at(0)) {
        return None;
    }
    (1..=x).find(|&y| !in_language(inst, interaction.state_at(y)))
}

/// Exact probabilities, over uniform challenges and tapes, that a top-round
/// cheater deceives the verifier and that a rewinding run forks, found by
/// enumerating every top challenge in `[1, 2^λ]` for each tape class.
pub fn exhaustive_rates(inst: &ExpInstance, cheater: &LowOrderCheater) -> (f64, f64) {
    let lambda = inst.lambda();
    let space = 1u64 << lambda;
    let classes = cheater.target_classes(inst).len() as u64;
    let filler: Vec<Challenge> = (1..u64::from(inst.depth()))
        .map(|i| Challenge::from_u64(i, lambda).expect("small challenge"))
        .collect();
    let (mut accept, mut fork) = (0.0, 0.0);
    for tape in 0..classes {
        let mut hits = 0u64;
        for q in 1..=space {
            let mut challenges = vec![Challenge::from_u64(q, lambda).expect("in range")];
            challenges.extend(filler.iter().cloned());
            let run = cheater.run(inst, &challenges, tape);
            if deceiving_round(inst, &run) == Some(u32::from(inst.depth())) {
                hits += 1;
            }
        }
        let (h, s) = (hits as f64, space as f64);
        accept += h / s / classes as f64;
        fork += h * (h - 1.0) / (s * s) / classes as f64;
    }
    (accept, fork)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ForkStats {
    pub trials: u64,
    /// First runs in which the adversary deceived the verifier.
    pub accepted: u64,
    /// Second runs that deceived at the same round with a different challenge.
    pub forks: u64,
    /// Forks from which a low-order element was recovered and checked.
    pub extracted: u64,
}

fn sample_challenge<R: Rng + ?Sized>(rng: &mut R, lambda: u16) -> Challenge {
    let bound = BigUint::one() << lambda;
    Challenge::new(rng.gen_biguint_below(&bound) + 1u32, lambda).expect("in range")
}

/// Rewinding experiment: run the adversary, find the round `y` where it first
/// moved from an invalid to a valid state, rerun with the same tape and fresh
/// challenges from round `y` down, and try to extract from the fork.
pub fn fork_experiment<A: Adversary + ?Sized, R: Rng + ?Sized>(
    inst: &ExpInstance,
    adversary: &A,
    trials: u64,
    rng: &mut R,
) -> ForkStats {
    let x = usize::from(inst.depth());
    let lambda = inst.lambda();
    let mut stats = ForkStats {
        trials,
        ..ForkStats::default()
    };
    for _ in 0..trials {
        let challenges: Vec<Challenge> = (0..x).map(|_| sample_challenge(rng, lambda)).collect();
        let tape: u64 = rng.gen();
        let first = adversary.run(inst, &challenges, tape);
        let Some(y) = deceiving_round(inst, &first) else {
            continue;
        };
        stats.accepted += 1;

        // challenges[k] is Q_(x−k); resample Q_y … Q_1
        let split = x - y as usize;
        let mut forked = challenges[..split].to_vec();
        forked.extend((split..x).map(|_| sample_challenge(rng, lambda)));
        let second = adversary.run(inst, &forked, tape);
        if deceiving_round(inst, &second) != Some(y) || challenges[split] == forked[split] {
            continue;
        }
        if second.state_at(y) != first.state_at(y) || second.mu_at(y) != first.mu_at(y) {
            continue;
        }
        stats.forks += 1;

        let sample = ForkSample {
            round: y,
            state: first.state_at(y).clone(),
            mu: first.mu_at(y).clone(),
            q: challenges[split].clone(),
            q_prime: forked[split].clone(),
            child: first.state_at(y - 1).clone(),
            child_prime: second.state_at(y - 1).clone(),
        };
        if let Ok(e) = extract_low_order(inst, &sample) {
            let mut ctr = OpCounter::new();
            if !e.is_one()
                && mod_pow(&e, &challenge_gap(&sample), inst.modulus(), &mut ctr).is_one()
            {
                stats.extracted += 1;
            }
        }
    }
    stats
}
