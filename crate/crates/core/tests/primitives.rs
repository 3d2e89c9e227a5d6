mod common;

use common::{sha256, TestRng};
use pqhs::hybrid::combine_secrets;
use pqhs::primitives::{aead_open, aead_seal, Digest, Nonce, SharedSecret, SymmetricKey};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn aead_round_trip(key in any::<[u8; 32]>(), nonce in any::<[u8; 12]>(),
                       aad in proptest::collection::vec(any::<u8>(), 0..64),
                       msg in proptest::collection::vec(any::<u8>(), 0..512)) {
        let (key, nonce) = (SymmetricKey(key), Nonce(nonce));
        let ct = aead_seal(&key, &nonce, &aad, &msg);
        prop_assert_eq!(ct.len(), msg.len() + 16);
        prop_assert_eq!(aead_open(&key, &nonce, &aad, &ct).unwrap(), msg);
    }

    #[test]
    fn aead_rejects_any_single_bit_flip(key in any::<[u8; 32]>(), msg in proptest::collection::vec(any::<u8>(), 1..128),
                                        bit in any::<prop::sample::Index>()) {
        let (key, nonce) = (SymmetricKey(key), Nonce([7; 12]));
        let mut ct = aead_seal(&key, &nonce, b"aad", &msg);
        let i = bit.index(ct.len() * 8);
        ct[i / 8] ^= 1 << (i % 8);
        prop_assert!(aead_open(&key, &nonce, b"aad", &ct).is_err());
    }
}

#[test]
fn aead_binds_key_nonce_and_aad() {
    let ct = aead_seal(&SymmetricKey([1; 32]), &Nonce([2; 12]), b"a", b"payload");
    assert!(aead_open(&SymmetricKey([9; 32]), &Nonce([2; 12]), b"a", &ct).is_err());
    assert!(aead_open(&SymmetricKey([1; 32]), &Nonce([3; 12]), b"a", &ct).is_err());
    assert!(aead_open(&SymmetricKey([1; 32]), &Nonce([2; 12]), b"b", &ct).is_err());
    assert!(aead_open(&SymmetricKey([1; 32]), &Nonce([2; 12]), b"a", &ct[..15]).is_err());
}

fn triple(rng: &mut TestRng) -> (SharedSecret, SharedSecret, Digest) {
    let mut take = || -> [u8; 32] { rng.bytes(32).try_into().unwrap() };
    (SharedSecret(take()), SharedSecret(take()), Digest(take()))
}

#[test]
fn combiner_matches_length_prefixed_hash() {
    let mut rng = TestRng::new(5);
    for _ in 0..50 {
        let (a, b, h) = triple(&mut rng);
        let len = 32u32.to_le_bytes();
        let expected = sha256(&[b"hybrid-master", &len, &a.0, &len, &b.0, &len, &h.0]);
        assert_eq!(combine_secrets(&a, &b, &h).0, expected);
    }
}

#[test]
fn combiner_depends_on_every_input() {
    let mut rng = TestRng::new(6);
    let (a, b, h) = triple(&mut rng);
    let base = combine_secrets(&a, &b, &h);
    assert_ne!(base, combine_secrets(&SharedSecret::ZERO, &b, &h));
    assert_ne!(base, combine_secrets(&a, &SharedSecret::ZERO, &h));
    assert_ne!(base, combine_secrets(&a, &b, &Digest([0; 32])));
    assert_ne!(combine_secrets(&a, &b, &h), combine_secrets(&SharedSecret(b.0), &SharedSecret(a.0), &h));
}

#[test]
fn combiner_avalanche_per_input() {
    let mut rng = TestRng::new(8);
    for which in 0..3 {
        let mut changed = 0u64;
        let trials = 2000u64;
        for _ in 0..trials {
            let (mut a, mut b, mut h) = triple(&mut rng);
            let base = combine_secrets(&a, &b, &h);
            let bit = rng.below(256) as usize;
            match which {
                0 => a.0[bit / 8] ^= 1 << (bit % 8),
                1 => b.0[bit / 8] ^= 1 << (bit % 8),
                _ => h.0[bit / 8] ^= 1 << (bit % 8),
            }
            let out = combine_secrets(&a, &b, &h);
            changed += base.0.iter().zip(&out.0).map(|(x, y)| (x ^ y).count_ones() as u64).sum::<u64>();
        }
        let fraction = changed as f64 / (trials * 256) as f64;
        assert!((0.45..=0.55).contains(&fraction), "input {which}: {fraction}");
    }
}
