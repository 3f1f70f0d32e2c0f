//! End-to-end prover, verifier and double-check behaviour.

mod common;

use common::{b, naive_pow, random_instance, table};
use mxcert::doublecheck::{double_check, sample_weights};
use mxcert::exponentiation::{bit_window, ltr_modexp_from};
use mxcert::folding::{aggregate_exponent, fold, in_language};
use mxcert::prover::{prove_counted, prove_from, prove_nested};
use mxcert::transcript::Transcript;
use mxcert::verifier::{verify_base_case, verify_with_cost, BaseCaseCost};
use mxcert::{prove, verify, ExpInstance, OpCounter, ProofState};
use num_bigint::{BigUint, RandBigInt};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn prover_and_verifier_derive_the_same_challenges() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..30 {
        let depth = rng.gen_range(1..=5);
        let inst = random_instance(&mut rng, 64, 128, 4, depth);
        let (_, t) = table(&inst);
        let (cert, prover_base) = prove_from(&inst, &t, &b(1), &mut OpCounter::new()).unwrap();

        let mut tr = Transcript::new(&inst, &cert.claimed_r);
        let mut state = ProofState::initial(b(1), cert.claimed_r.clone(), depth);
        for mu in &cert.mus {
            let (q, next) = tr.derive_challenge(state.level(), state.b(), state.r(), mu);
            tr = next;
            state = fold(&state, mu, &q, inst.modulus(), &mut OpCounter::new()).unwrap();
        }
        assert_eq!(state, prover_base);
        assert!(in_language(&inst, &state));
    }
}

#[test]
fn costs_stay_under_ceilings() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..40 {
        let lambda = [8u16, 32, 64][rng.gen_range(0..3)];
        let seg = rng.gen_range(1..=32);
        let depth = rng.gen_range(0..=6);
        let inst = random_instance(&mut rng, lambda, 256, seg, depth);
        let (_, t) = table(&inst);

        let mut prover = OpCounter::new();
        let cert = prove_counted(&inst, &t, &mut prover).unwrap();
        let (lam, x) = (u64::from(lambda), u64::from(depth));
        assert!(prover.total() <= (4 * lam * x) << depth, "{prover:?}");

        let (verdict, cost) = verify_with_cost(&inst, &cert);
        assert_eq!(verdict, Ok(()));
        assert_eq!(cost.base_chain_squarings, u64::from(seg));
        let c_bits = cost.base_exponent_bits;
        let mults = cost.total().general_multiplications;
        assert!(mults <= 2 * x * (lam + 2) + 2 * c_bits + 8, "{cost:?}");
    }
}

#[test]
fn double_check_cost_ceiling() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..30 {
        let seg = rng.gen_range(1..=16);
        let depth = rng.gen_range(0..=5);
        let inst = random_instance(&mut rng, 64, 128, seg, depth);
        let (_, t) = table(&inst);
        let w = sample_weights(&mut rng, inst.segment_count(), 64).unwrap();
        let rep = double_check(&inst, &t, &w).unwrap();
        assert!(rep.accepted);
        assert_eq!(rep.chain.squarings, u64::from(seg));

        let mut sigma = BigUint::zero();
        for (l, wl) in w.iter().enumerate() {
            sigma += wl * bit_window(inst.exponent(), l as u64 * u64::from(seg), u64::from(seg));
        }
        let total = rep.total();
        let ceiling = 2 * 64 * (1u64 << depth) + u64::from(seg) + 2 * sigma.bits() + 16;
        assert!(
            total.general_multiplications <= ceiling,
            "{total:?} > {ceiling}"
        );
        // per multi-exponentiation: one shared chain plus one table squaring per base
        let squarings = u64::from(seg) + 2 * (65 + (1u64 << depth)) + sigma.bits();
        assert!(total.squarings <= squarings, "{total:?} > {squarings}");
    }
}

#[test]
fn double_check_detects_single_corruptions() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..100 {
        let inst = random_instance(&mut rng, 64, 128, 8, 4);
        let (_, mut t) = table(&inst);
        let i = rng.gen_range(0..=inst.segment_count());
        let old = t.entries()[i].clone();
        let fresh = loop {
            let v = rng.gen_biguint_below(inst.modulus().value());
            if v != old {
                break v;
            }
        };
        t.set_entry(i, fresh);
        let w = sample_weights(&mut rng, inst.segment_count(), 64).unwrap();
        assert!(!double_check(&inst, &t, &w).unwrap().accepted, "entry {i}");
    }
}

#[test]
fn proving_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let inst = random_instance(&mut rng, 64, 512, 16, 5);
    let (_, t) = table(&inst);
    assert_eq!(
        prove(&inst, &t).unwrap().to_bytes(),
        prove(&inst, &t).unwrap().to_bytes()
    );
}

#[test]
fn generalized_start_is_certified() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..20 {
        let inst = random_instance(&mut rng, 32, 96, 4, 3);
        let start = rng.gen_biguint_below(inst.modulus().value()) + 1u32;
        let t = ltr_modexp_from(&inst, &start, &mut OpCounter::new());
        let m = inst.modulus().value();
        let expected = naive_pow(&start, &(BigUint::from(1u32) << inst.padded_bits()), m)
            * naive_pow(inst.base(), inst.exponent(), m)
            % m;
        assert_eq!(*t.result(), expected);
        if expected.is_zero() {
            continue;
        }
        let (_, base) = prove_from(&inst, &t, &start, &mut OpCounter::new()).unwrap();
        assert!(verify_base_case(&inst, &base, &mut BaseCaseCost::default()));
    }
}

#[test]
fn nested_certificate_accepts_and_shortens_base_case() {
    // windows above the lowest one are short, so the aggregate exponent fits in B bits
    let n = (b(0x2f) << 192) + (b(0x1d) << 128) + (b(0x33) << 64) + b(0xdead_beef_0bad_f00d);
    let inst = ExpInstance::new(8, b(1_000_000_007), 64, b(3), n, 2).unwrap();
    let (_, t) = table(&inst);
    let (cert, cost) = prove_nested(&inst, &t, 8, 3).unwrap();
    assert_eq!(cost.trace.squarings, 64);
    let (verdict, vcost) = verify_with_cost(&inst, &cert);
    assert_eq!(verdict, Ok(()));
    assert_eq!(vcost.base_chain_squarings, 8);

    let mut bad = cert.clone();
    let inner = bad.nested.as_mut().unwrap();
    inner.mus[0] = (&inner.mus[0] * 2u32) % 1_000_000_007u32;
    assert!(verify(&inst, &bad).is_err());
}

#[test]
fn aggregate_exponent_of_top_state_is_n() {
    let inst = ExpInstance::new(8, b(1000), 1, b(3), b(11), 2).unwrap();
    let state = ProofState::initial(b(1), b(147), 2);
    assert_eq!(aggregate_exponent(&inst, &state), b(11));
}
