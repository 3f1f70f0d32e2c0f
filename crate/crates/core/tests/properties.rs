//! Property tests for the arithmetic, folding and encoding invariants.

mod common;

use common::{b, naive_pow, random_instance, table};
use mxcert::bigmod::{mod_inv, mod_mul, mod_pow, multi_exp, Modulus, OpCounter};
use mxcert::exponentiation::compute_s;
use mxcert::folding::{aggregate_exponent, closed_form_weight, fold, in_language, split_exponents};
use mxcert::prover::compute_mu;
use mxcert::transcript::{decode_int, encode_int, Transcript};
use mxcert::{Challenge, ExpInstance, ProofState};
use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn biguint(max_bits: u64) -> impl Strategy<Value = BigUint> {
    (any::<u64>(), 1..=max_bits)
        .prop_map(|(seed, bits)| ChaCha8Rng::seed_from_u64(seed).gen_biguint(bits))
}

fn modulus(max_bits: u64) -> impl Strategy<Value = BigUint> {
    biguint(max_bits).prop_map(|m| m + 2u32)
}

/// Schoolbook product over 32-bit limbs.
fn limb_product(x: &BigUint, y: &BigUint) -> BigUint {
    let (xs, ys) = (x.to_u32_digits(), y.to_u32_digits());
    let mut out = vec![0u32; xs.len() + ys.len() + 1];
    for (i, &xi) in xs.iter().enumerate() {
        let mut carry = 0u64;
        for (j, &yj) in ys.iter().enumerate() {
            let t = u64::from(xi) * u64::from(yj) + u64::from(out[i + j]) + carry;
            out[i + j] = t as u32;
            carry = t >> 32;
        }
        let mut k = i + ys.len();
        while carry != 0 {
            let t = u64::from(out[k]) + carry;
            out[k] = t as u32;
            carry = t >> 32;
            k += 1;
        }
    }
    BigUint::from_slice(&out)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn mod_mul_matches_limb_oracle(x in biguint(4096), y in biguint(4096), m in modulus(4096)) {
        let md = Modulus::new(m.clone()).unwrap();
        let (x, y) = (&x % &m, &y % &m);
        let mut ctr = OpCounter::new();
        prop_assert_eq!(mod_mul(&x, &y, &md, &mut ctr), limb_product(&x, &y) % &m);
        prop_assert_eq!(ctr.general_multiplications, 1);
    }

    #[test]
    fn mod_pow_matches_iterated_multiplication(a in biguint(256), e in 0u32..300, m in modulus(256)) {
        let md = Modulus::new(m.clone()).unwrap();
        let mut expected = BigUint::one() % &m;
        for _ in 0..e {
            expected = (expected * &a) % &m;
        }
        prop_assert_eq!(mod_pow(&a, &b(u64::from(e)), &md, &mut OpCounter::new()), expected);
    }

    #[test]
    fn mod_pow_matches_iterated_multiplication_on_64_bits(a in any::<u64>(), e in 0u32..=65536, m in 2u64..) {
        let md = Modulus::new(b(m)).unwrap();
        let (a, mut ctr) = (b(a) % md.value(), OpCounter::new());
        let mut expected = BigUint::one() % md.value();
        for _ in 0..e {
            expected = mod_mul(&expected, &a, &md, &mut ctr);
        }
        prop_assert_eq!(mod_pow(&a, &b(u64::from(e)), &md, &mut ctr), expected);
    }

    #[test]
    fn mod_inv_inverts_or_reports_factor(x in biguint(512), m in modulus(512)) {
        let md = Modulus::new(m.clone()).unwrap();
        let x = &x % &m;
        match mod_inv(&x, &md) {
            Ok(inv) => prop_assert!((&x * inv % &m).is_one()),
            Err(mxcert::bigmod::ArithError::NotInvertible { g }) => {
                prop_assert!(g > BigUint::one());
                prop_assert!((&m % &g).is_zero());
                prop_assert!((&x % &g).is_zero());
            }
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn multi_exp_matches_product_of_powers(seed in any::<u64>(), k in 1usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rng.gen_biguint(300) + 2u32;
        let md = Modulus::new(m.clone()).unwrap();
        let bases: Vec<BigUint> = (0..k).map(|_| rng.gen_biguint_below(&m)).collect();
        let exps: Vec<BigUint> = (0..k).map(|_| rng.gen_biguint(200)).collect();
        let expected = bases
            .iter()
            .zip(&exps)
            .fold(BigUint::one() % &m, |acc, (x, e)| acc * naive_pow(x, e, &m) % &m);
        prop_assert_eq!(multi_exp(&bases, &exps, &md, &mut OpCounter::new()), expected);
    }

    #[test]
    fn encoding_round_trips(z in biguint(4096), tail in proptest::collection::vec(any::<u8>(), 0..8)) {
        let mut bytes = encode_int(&z);
        let len = bytes.len();
        bytes.extend(tail);
        prop_assert_eq!(decode_int(&bytes), Some((z, len)));
    }
}

#[test]
fn encoding_round_trips_on_1e5_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xe0c0de);
    for _ in 0..100_000 {
        let bits = rng.gen_range(0..=4096);
        let z = rng.gen_biguint(bits);
        let enc = encode_int(&z);
        assert_eq!(decode_int(&enc), Some((z, enc.len())));
    }
}

#[test]
fn chain_identity_on_200_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    for _ in 0..200 {
        let seg = [1u32, 2, 3, 5, 8][rng.gen_range(0..5)];
        let depth = rng.gen_range(0..=5);
        let m_bits = rng.gen_range(8..=128);
        let inst = random_instance(&mut rng, 8, m_bits, seg, depth);
        let (r, t) = table(&inst);
        let m = inst.modulus().value();
        assert_eq!(r, naive_pow(inst.base(), inst.exponent(), m));
        assert_eq!(
            r,
            compute_s(&inst, 0, inst.padded_bits(), &mut OpCounter::new())
        );
        let entries = t.entries();
        let count = inst.segment_count();
        let i = rng.gen_range(0..=count);
        let j = rng.gen_range(0..=count - i);
        let sq = naive_pow(
            &entries[i + j],
            &(BigUint::one() << (u64::from(seg) * j as u64)),
            m,
        );
        let s = compute_s(
            &inst,
            i as u64 * u64::from(seg),
            j as u64 * u64::from(seg),
            &mut OpCounter::new(),
        );
        assert_eq!(entries[i], sq * s % m);
    }
}

fn random_state<R: Rng>(rng: &mut R, inst: &ExpInstance) -> ProofState {
    let level = rng.gen_range(1..=u32::from(inst.depth()));
    let count = 1usize << (u32::from(inst.depth()) - level);
    let weights = (0..count).map(|_| rng.gen_biguint(64) + 1u32).collect();
    let m = inst.modulus().value();
    ProofState::new(
        rng.gen_biguint_below(m),
        rng.gen_biguint_below(m),
        level,
        weights,
    )
}

#[test]
fn split_identity_on_500_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    for _ in 0..500 {
        let depth = rng.gen_range(1..=6);
        let seg = rng.gen_range(1..=9);
        let inst = random_instance(&mut rng, 64, 64, seg, depth);
        let state = random_state(&mut rng, &inst);
        let (c1, c2) = split_exponents(&inst, &state).unwrap();
        let h = u64::from(seg) << (state.level() - 1);
        assert_eq!(c1 + (c2 << h), aggregate_exponent(&inst, &state));
    }
}

#[test]
fn folded_weights_follow_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for depth in 1..=6u8 {
        let inst = random_instance(&mut rng, 16, 32, 2, depth);
        let mut state = ProofState::initial(b(1), b(1), depth);
        let mut seen = Vec::new();
        while state.level() > 0 {
            let q = Challenge::from_u64(rng.gen_range(1..=1 << 16), 16).unwrap();
            state = fold(&state, &b(1), &q, inst.modulus(), &mut OpCounter::new()).unwrap();
            seen.push(q);
            assert!(state.weights()[0].is_one());
            for (i, w) in state.weights().iter().enumerate() {
                assert_eq!(*w, closed_form_weight(&seen, i));
            }
        }
    }
}

#[test]
fn honest_fold_preserves_membership_for_all_lambda4_challenges() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..6 {
        let seg = rng.gen_range(1..=3);
        let inst = random_instance(&mut rng, 4, 24, seg, 3);
        let (r, t) = table(&inst);
        let top = ProofState::initial(b(1), r, 3);
        assert!(in_language(&inst, &top));
        let mu = compute_mu(&inst, &t, &top, &mut OpCounter::new()).unwrap();
        for q in 1..=16u64 {
            let q = Challenge::from_u64(q, 4).unwrap();
            let child = fold(&top, &mu, &q, inst.modulus(), &mut OpCounter::new()).unwrap();
            assert!(in_language(&inst, &child));
            let mu2 = compute_mu(&inst, &t, &child, &mut OpCounter::new()).unwrap();
            for q2 in 1..=16u64 {
                let q2 = Challenge::from_u64(q2, 4).unwrap();
                let grand = fold(&child, &mu2, &q2, inst.modulus(), &mut OpCounter::new()).unwrap();
                assert!(in_language(&inst, &grand));
            }
        }
    }
}

#[test]
fn challenge_distribution_is_uniform_at_lambda8() {
    let inst = ExpInstance::new(8, b(1_000_003), 4, b(3), b(12345), 2).unwrap();
    let tr = Transcript::new(&inst, &b(77));
    let mut counts = [0u64; 256];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let samples = 10_000u64;
    for _ in 0..samples {
        let mu = rng.gen_biguint_below(inst.modulus().value());
        let (q, _) = tr.derive_challenge(2, &b(1), &b(77), &mu);
        let q = usize::try_from(q.value()).unwrap();
        assert!((1..=256).contains(&q));
        counts[q - 1] += 1;
    }
    let expected = samples as f64 / 256.0;
    let chi2: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    // 255 degrees of freedom, p = 0.001 critical value
    assert!(chi2 < 330.5, "chi2 = {chi2}");
}
