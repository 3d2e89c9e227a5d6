//! Textbook RSA standing in for the classical (RSA/ECC) layer.
//!
//! **Insecure by construction**: no padding, no blinding, no constant-time
//! arithmetic. It exists to supply the classical half of every hybrid and
//! the Shor-vulnerable baseline in benchmarks. It must not protect real data.
//!
//! * KEM: `ct = r^e mod N` for uniform `r in [2, N-2]`,
//!   `ss = kdf("legacy-ss", [r, hash(ct)])`.
//! * Signature: `sig = H(msg)^d mod N` where `H(msg)` is the SHA-256 digest
//!   read as a big-endian integer and reduced mod `N`.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::codec::{put_var_bytes, DecodeError, Reader};
use crate::primitives::{hash, kdf, RandomSeed, SeededRng, SharedSecret};

pub const PUBLIC_EXPONENT: u32 = 65537;
pub const MILLER_RABIN_ROUNDS: usize = 40;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LegacyError {
    #[error("unsupported modulus size {0}")]
    InvalidParams(u32),
    #[error("invalid key material: {0}")]
    InvalidKey(&'static str),
    #[error("ciphertext out of range")]
    CiphertextOutOfRange,
    #[error("malformed signature")]
    MalformedSignature,
    #[error("malformed encoding: {0}")]
    Decode(#[from] DecodeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LegacyParams {
    pub modulus_bits: u32,
}

impl LegacyParams {
    pub const RSA_2048: LegacyParams = LegacyParams { modulus_bits: 2048 };
    pub const RSA_3072: LegacyParams = LegacyParams { modulus_bits: 3072 };
    pub const RSA_1024: LegacyParams = LegacyParams { modulus_bits: 1024 };
    /// Test-only size.
    pub const RSA_512: LegacyParams = LegacyParams { modulus_bits: 512 };

    pub fn validate(&self) -> Result<(), LegacyError> {
        match self.modulus_bits {
            512 | 1024 | 2048 | 3072 => Ok(()),
            other => Err(LegacyError::InvalidParams(other)),
        }
    }

    pub fn modulus_bytes(&self) -> usize {
        self.modulus_bits as usize / 8
    }

    /// `u32 len || N || u32 len || e` with `e = 65537` (3 bytes).
    pub fn public_key_bytes(&self) -> usize {
        4 + self.modulus_bytes() + 4 + 3
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LegacyPublicKey {
    pub n: BigUint,
    pub e: BigUint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LegacySecretKey {
    pub n: BigUint,
    pub e: BigUint,
    pub d: BigUint,
    pub p: BigUint,
    pub q: BigUint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LegacyCiphertext(pub BigUint);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LegacySignature(pub BigUint);

fn small_primes() -> Vec<u32> {
    let limit = 4096usize;
    let mut sieve = vec![true; limit];
    sieve[0] = false;
    sieve[1] = false;
    for i in 2..limit {
        if sieve[i] {
            for j in (i * i..limit).step_by(i) {
                sieve[j] = false;
            }
        }
    }
    (3..limit as u32).filter(|&i| sieve[i as usize]).collect()
}

fn random_below(rng: &mut SeededRng, bound: &BigUint) -> BigUint {
    let bits = bound.bits();
    let bytes = bits.div_ceil(8) as usize;
    let excess = bytes as u64 * 8 - bits;
    loop {
        let mut buf = vec![0u8; bytes];
        rng.fill(&mut buf);
        buf[0] &= 0xFF >> excess;
        let x = BigUint::from_bytes_be(&buf);
        if &x < bound {
            return x;
        }
    }
}

/// Miller-Rabin with `rounds` random bases drawn from `rng`.
pub fn is_probable_prime(candidate: &BigUint, rounds: usize, rng: &mut SeededRng) -> bool {
    let two = BigUint::from(2u32);
    if candidate < &two {
        return false;
    }
    for p in [2u32, 3, 5, 7, 11, 13] {
        if candidate == &BigUint::from(p) {
            return true;
        }
        if (candidate % p).is_zero() {
            return false;
        }
    }
    let one = BigUint::one();
    let n_minus_1 = candidate - &one;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    let span = candidate - 3u32;
    'rounds: for _ in 0..rounds {
        let a = random_below(rng, &span) + &two;
        let mut x = a.modpow(&d, candidate);
        if x == one || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, candidate);
            if x == n_minus_1 {
                continue 'rounds;
            }
        }
        return false;
    }
    true
}

/// Random prime of exactly `bits` bits with the top two bits set, so two of
/// them multiply to a full-width modulus.
fn random_prime(rng: &mut SeededRng, bits: u32, primes: &[u32], e: u32) -> BigUint {
    let bytes = bits.div_ceil(8) as usize;
    loop {
        let mut buf = vec![0u8; bytes];
        rng.fill(&mut buf);
        let excess = bytes as u32 * 8 - bits;
        buf[0] &= 0xFF >> excess;
        buf[0] |= 0xC0 >> excess;
        buf[bytes - 1] |= 1;
        let base = BigUint::from_bytes_be(&buf);
        let residues: Vec<u32> = primes
            .iter()
            .map(|&p| (&base % p).to_u32_digits().first().copied().unwrap_or(0))
            .collect();
        for delta in (0u32..1 << 16).step_by(2) {
            let composite = primes
                .iter()
                .zip(&residues)
                .any(|(&p, &r)| (r + delta) % p == 0);
            if composite {
                continue;
            }
            let candidate = &base + delta;
            if candidate.bits() != u64::from(bits) {
                break;
            }
            if (&candidate - 1u32).gcd(&BigUint::from(e)) != BigUint::one() {
                continue;
            }
            if is_probable_prime(&candidate, MILLER_RABIN_ROUNDS, rng) {
                return candidate;
            }
        }
    }
}

pub fn legacy_keygen(
    params: LegacyParams,
    seed: &RandomSeed,
) -> Result<(LegacyPublicKey, LegacySecretKey), LegacyError> {
    params.validate()?;
    let mut rng = seed.rng();
    let primes = small_primes();
    let half = params.modulus_bits / 2;
    loop {
        let p = random_prime(&mut rng, half, &primes, PUBLIC_EXPONENT);
        let q = random_prime(&mut rng, half, &primes, PUBLIC_EXPONENT);
        if p == q {
            continue;
        }
        return keypair_from_primes(p, q, BigUint::from(PUBLIC_EXPONENT));
    }
}

/// Builds a key pair from chosen primes (e.g. the textbook p=61, q=53, e=17).
pub fn keypair_from_primes(
    p: BigUint,
    q: BigUint,
    e: BigUint,
) -> Result<(LegacyPublicKey, LegacySecretKey), LegacyError> {
    let one = BigUint::one();
    if p <= one || q <= one || p == q {
        return Err(LegacyError::InvalidKey("primes must be distinct and > 1"));
    }
    let lambda = (&p - &one).lcm(&(&q - &one));
    let d = e
        .modinv(&lambda)
        .ok_or(LegacyError::InvalidKey("e not invertible mod lcm(p-1, q-1)"))?;
    let n = &p * &q;
    let pk = LegacyPublicKey {
        n: n.clone(),
        e: e.clone(),
    };
    Ok((pk, LegacySecretKey { n, e, d, p, q }))
}

fn modulus_len(n: &BigUint) -> usize {
    n.bits().div_ceil(8) as usize
}

fn to_fixed_be(x: &BigUint, len: usize) -> Vec<u8> {
    let raw = x.to_bytes_be();
    let mut out = vec![0u8; len.saturating_sub(raw.len())];
    out.extend_from_slice(&raw);
    out
}

impl LegacySecretKey {
    pub fn public_key(&self) -> LegacyPublicKey {
        LegacyPublicKey {
            n: self.n.clone(),
            e: self.e.clone(),
        }
    }

    /// `x^d mod N` via the Chinese remainder theorem.
    fn private_op(&self, x: &BigUint) -> BigUint {
        let one = BigUint::one();
        let dp = &self.d % (&self.p - &one);
        let dq = &self.d % (&self.q - &one);
        let mp = x.modpow(&dp, &self.p);
        let mq = x.modpow(&dq, &self.q);
        let q_inv = self.q.modinv(&self.p).expect("p and q coprime");
        let diff = (&mp + &self.p - (&mq % &self.p)) % &self.p;
        let h = (diff * q_inv) % &self.p;
        mq + h * &self.q
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for x in [&self.n, &self.e, &self.d, &self.p, &self.q] {
            put_var_bytes(&mut out, &x.to_bytes_be());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, LegacyError> {
        let mut r = Reader::new(bytes);
        let mut next = || r.var_bytes().map(BigUint::from_bytes_be);
        let (n, e, d, p, q) = (next()?, next()?, next()?, next()?, next()?);
        r.finish()?;
        if &p * &q != n {
            return Err(LegacyError::InvalidKey("N != p·q"));
        }
        Ok(Self { n, e, d, p, q })
    }
}

impl LegacyPublicKey {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        put_var_bytes(&mut out, &self.n.to_bytes_be());
        put_var_bytes(&mut out, &self.e.to_bytes_be());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, LegacyError> {
        let mut r = Reader::new(bytes);
        let n = BigUint::from_bytes_be(r.var_bytes()?);
        let e = BigUint::from_bytes_be(r.var_bytes()?);
        r.finish()?;
        if n < BigUint::from(6u32) || e < BigUint::from(3u32) {
            return Err(LegacyError::InvalidKey("modulus or exponent too small"));
        }
        Ok(Self { n, e })
    }

    pub fn ciphertext_bytes(&self) -> usize {
        modulus_len(&self.n)
    }

    pub fn signature_bytes(&self) -> usize {
        modulus_len(&self.n)
    }

    fn check_range(&self, x: &BigUint) -> bool {
        x < &self.n
    }
}

impl LegacyCiphertext {
    pub fn to_bytes(&self, pk: &LegacyPublicKey) -> Vec<u8> {
        to_fixed_be(&self.0, pk.ciphertext_bytes())
    }

    pub fn from_bytes(pk: &LegacyPublicKey, bytes: &[u8]) -> Result<Self, LegacyError> {
        if bytes.len() != pk.ciphertext_bytes() {
            return Err(DecodeError::Invalid("legacy ciphertext length").into());
        }
        Ok(Self(BigUint::from_bytes_be(bytes)))
    }
}

impl LegacySignature {
    pub fn to_bytes(&self, pk: &LegacyPublicKey) -> Vec<u8> {
        to_fixed_be(&self.0, pk.signature_bytes())
    }

    pub fn from_bytes(pk: &LegacyPublicKey, bytes: &[u8]) -> Result<Self, LegacyError> {
        if bytes.len() != pk.signature_bytes() {
            return Err(LegacyError::MalformedSignature);
        }
        Ok(Self(BigUint::from_bytes_be(bytes)))
    }
}

/// `r^e mod N` for a caller-chosen `r`.
pub fn encrypt_raw(pk: &LegacyPublicKey, r: &BigUint) -> LegacyCiphertext {
    LegacyCiphertext(r.modpow(&pk.e, &pk.n))
}

fn shared_secret(n: &BigUint, r: &BigUint, ct: &LegacyCiphertext) -> SharedSecret {
    let len = modulus_len(n);
    let ct_digest = hash(&to_fixed_be(&ct.0, len));
    SharedSecret(kdf(b"legacy-ss", &[&to_fixed_be(r, len), &ct_digest.0]).0)
}

pub fn legacy_encaps(pk: &LegacyPublicKey, seed: &RandomSeed) -> (LegacyCiphertext, SharedSecret) {
    let mut rng = seed.rng();
    // r uniform in [2, N-2]
    let r = random_below(&mut rng, &(&pk.n - 3u32)) + 2u32;
    let ct = encrypt_raw(pk, &r);
    let ss = shared_secret(&pk.n, &r, &ct);
    (ct, ss)
}

pub fn legacy_decaps(sk: &LegacySecretKey, ct: &LegacyCiphertext) -> Result<SharedSecret, LegacyError> {
    if ct.0 >= sk.n {
        return Err(LegacyError::CiphertextOutOfRange);
    }
    let r = sk.private_op(&ct.0);
    Ok(shared_secret(&sk.n, &r, ct))
}

fn message_representative(n: &BigUint, msg: &[u8]) -> BigUint {
    BigUint::from_bytes_be(&hash(msg).0) % n
}

pub fn legacy_sign(sk: &LegacySecretKey, msg: &[u8]) -> LegacySignature {
    LegacySignature(sk.private_op(&message_representative(&sk.n, msg)))
}

pub fn legacy_verify(pk: &LegacyPublicKey, msg: &[u8], sig: &LegacySignature) -> Result<bool, LegacyError> {
    if !pk.check_range(&sig.0) {
        return Err(LegacyError::MalformedSignature);
    }
    Ok(sig.0.modpow(&pk.e, &pk.n) == message_representative(&pk.n, msg))
}
