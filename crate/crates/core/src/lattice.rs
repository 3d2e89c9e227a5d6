//! Plain-LWE key encapsulation with Regev multi-bit encryption.
//!
//! Key generation publishes `b = A·s + e mod q` with `A` expanded from a
//! 32-byte seed and every error coordinate uniform in `[-eta, eta]`.
//! Encapsulation encrypts a random `ell`-bit message under binary
//! randomizer rows `r_i`:
//!
//! ```text
//! U_i = r_i·A            v_i = r_i·b + mu_i·floor(q/2)      (mod q)
//! ```
//!
//! and decapsulation thresholds `v_i - U_i·s = r_i·e + mu_i·floor(q/2)`.
//! Since `|r_i·e| <= m·eta < q/4` whenever the parameters validate, decoding
//! is correct for every honest ciphertext, not just with high probability.
//!
//! Ring-LWE would shrink keys and speed up the arithmetic; it is not
//! implemented here.

use thiserror::Error;

use crate::codec::DecodeError;
use crate::primitives::{
    bits_for_modulus, hash, kdf, pack_coeffs, packed_len, unpack_coeffs, Digest, RandomSeed,
    SharedSecret,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("invalid lattice parameters: {0}")]
    InvalidParams(&'static str),
    #[error("ciphertext dimensions do not match the key parameters")]
    DimensionMismatch,
    #[error("malformed encoding: {0}")]
    Decode(#[from] DecodeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeParams {
    /// Secret dimension.
    pub n: usize,
    /// Number of LWE samples in the public key.
    pub m: usize,
    /// Odd modulus.
    pub q: u32,
    /// Error bound: every error coordinate lies in `[-eta, eta]`.
    pub eta: u32,
    /// Message bits per encapsulation.
    pub ell: usize,
}

impl LatticeParams {
    /// "desk-512": the default profile.
    pub const DESK_512: LatticeParams = LatticeParams {
        n: 256,
        m: 512,
        q: 12289,
        eta: 2,
        ell: 256,
    };

    /// Small keys for handshake tests and the byte-flip harness.
    pub const DESK_SMALL: LatticeParams = LatticeParams {
        n: 16,
        m: 32,
        q: 257,
        eta: 1,
        ell: 256,
    };

    /// Oracle profile, small enough for brute force.
    pub const TINY: LatticeParams = LatticeParams {
        n: 2,
        m: 3,
        q: 97,
        eta: 1,
        ell: 4,
    };

    pub fn validate(&self) -> Result<(), LatticeError> {
        if self.n == 0 {
            return Err(LatticeError::InvalidParams("n must be at least 1"));
        }
        if self.m < self.n {
            return Err(LatticeError::InvalidParams("m must be at least n"));
        }
        if self.q < 3 || self.q % 2 == 0 || self.q > 1 << 24 {
            return Err(LatticeError::InvalidParams("q must be odd and in [3, 2^24]"));
        }
        if self.ell == 0 || self.ell > 1024 {
            return Err(LatticeError::InvalidParams("ell must be in [1, 1024]"));
        }
        let noise = self.m as u64 * u64::from(self.eta);
        if 4 * noise >= u64::from(self.q) {
            return Err(LatticeError::InvalidParams("m*eta must be below q/4"));
        }
        if u64::from(self.q) < 8 * noise {
            return Err(LatticeError::InvalidParams("q must be at least 8*m*eta"));
        }
        Ok(())
    }

    pub fn coeff_bits(&self) -> u32 {
        bits_for_modulus(self.q)
    }

    /// `32 + ceil(m·bits/8)`: matrix seed plus packed `b`.
    pub fn public_key_bytes(&self) -> usize {
        32 + packed_len(self.m, self.coeff_bits())
    }

    /// Packed `s` plus the 32-byte public-key digest.
    pub fn secret_key_bytes(&self) -> usize {
        packed_len(self.n, self.coeff_bits()) + 32
    }

    /// `ceil(ell·(n+1)·bits/8)`: packed `U` followed by packed `v`.
    pub fn ciphertext_bytes(&self) -> usize {
        packed_len(self.ell * (self.n + 1), self.coeff_bits())
    }

    fn half_q(&self) -> u32 {
        self.q / 2
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticePublicKey {
    pub params: LatticeParams,
    pub matrix_seed: [u8; 32],
    pub b: Vec<u32>,
    // Row-major m×n expansion of `matrix_seed`, cached.
    matrix: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeSecretKey {
    pub params: LatticeParams,
    pub s: Vec<u32>,
    pub pk_digest: Digest,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeCiphertext {
    /// Row-major `ell × n`.
    pub u: Vec<u32>,
    pub v: Vec<u32>,
}

/// Deterministically expands a matrix seed to `A ∈ Z_q^{m×n}`, row-major.
pub fn expand_matrix(params: &LatticeParams, matrix_seed: &[u8; 32]) -> Vec<u32> {
    let mut rng = RandomSeed(*matrix_seed).rng();
    (0..params.m * params.n).map(|_| rng.below(params.q)).collect()
}

impl LatticePublicKey {
    fn from_parts(params: LatticeParams, matrix_seed: [u8; 32], b: Vec<u32>) -> Self {
        let matrix = expand_matrix(&params, &matrix_seed);
        Self {
            params,
            matrix_seed,
            b,
            matrix,
        }
    }

    /// The expanded public matrix `A`, row-major `m × n`.
    pub fn matrix(&self) -> &[u32] {
        &self.matrix
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.matrix_seed.to_vec();
        out.extend(pack_coeffs(&self.b, self.params.coeff_bits()));
        out
    }

    pub fn from_bytes(params: LatticeParams, bytes: &[u8]) -> Result<Self, LatticeError> {
        params.validate()?;
        if bytes.len() != params.public_key_bytes() {
            return Err(DecodeError::Invalid("lattice public key length").into());
        }
        let matrix_seed: [u8; 32] = bytes[..32].try_into().unwrap();
        let b = unpack_coeffs(&bytes[32..], params.m, params.coeff_bits(), params.q)
            .ok_or(DecodeError::Invalid("lattice public key coefficients"))?;
        Ok(Self::from_parts(params, matrix_seed, b))
    }

    pub fn digest(&self) -> Digest {
        hash(&self.to_bytes())
    }
}

impl LatticeSecretKey {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = pack_coeffs(&self.s, self.params.coeff_bits());
        out.extend_from_slice(&self.pk_digest.0);
        out
    }

    pub fn from_bytes(params: LatticeParams, bytes: &[u8]) -> Result<Self, LatticeError> {
        params.validate()?;
        if bytes.len() != params.secret_key_bytes() {
            return Err(DecodeError::Invalid("lattice secret key length").into());
        }
        let split = bytes.len() - 32;
        let s = unpack_coeffs(&bytes[..split], params.n, params.coeff_bits(), params.q)
            .ok_or(DecodeError::Invalid("lattice secret key coefficients"))?;
        Ok(Self {
            params,
            s,
            pk_digest: Digest(bytes[split..].try_into().unwrap()),
        })
    }
}

impl LatticeCiphertext {
    pub fn to_bytes(&self, params: &LatticeParams) -> Vec<u8> {
        let mut all = Vec::with_capacity(self.u.len() + self.v.len());
        all.extend_from_slice(&self.u);
        all.extend_from_slice(&self.v);
        pack_coeffs(&all, params.coeff_bits())
    }

    pub fn from_bytes(params: &LatticeParams, bytes: &[u8]) -> Result<Self, LatticeError> {
        let count = params.ell * (params.n + 1);
        let mut all = unpack_coeffs(bytes, count, params.coeff_bits(), params.q)
            .ok_or(DecodeError::Invalid("lattice ciphertext"))?;
        let v = all.split_off(params.ell * params.n);
        Ok(Self { u: all, v })
    }
}

pub fn lwe_keygen(
    params: LatticeParams,
    seed: &RandomSeed,
) -> Result<(LatticePublicKey, LatticeSecretKey), LatticeError> {
    params.validate()?;
    let mut rng = seed.rng();
    let matrix_seed = rng.bytes::<32>();
    let q = u64::from(params.q);
    let s: Vec<u32> = (0..params.n).map(|_| rng.below(params.q)).collect();
    let e: Vec<i64> = (0..params.m).map(|_| rng.centered(params.eta)).collect();
    let matrix = expand_matrix(&params, &matrix_seed);
    let b = matrix
        .chunks_exact(params.n)
        .zip(&e)
        .map(|(row, &err)| {
            let dot = row
                .iter()
                .zip(&s)
                .fold(0u64, |acc, (&a, &si)| (acc + u64::from(a) * u64::from(si)) % q);
            (dot as i64 + err).rem_euclid(q as i64) as u32
        })
        .collect();
    let pk = LatticePublicKey {
        params,
        matrix_seed,
        b,
        matrix,
    };
    let sk = LatticeSecretKey {
        params,
        s,
        pk_digest: pk.digest(),
    };
    Ok((pk, sk))
}

/// Regev encryption of `message` (one bool per bit, `ell` of them) under the
/// given binary randomizer rows (`ell` rows of `m` bits each).
///
/// # Panics
///
/// Panics if the message or randomizer shapes do not match the key.
pub fn encrypt(pk: &LatticePublicKey, message: &[bool], randomizer: &[Vec<bool>]) -> LatticeCiphertext {
    let p = &pk.params;
    assert_eq!(message.len(), p.ell, "message length");
    assert_eq!(randomizer.len(), p.ell, "randomizer row count");
    let q = p.q;
    let mut u = Vec::with_capacity(p.ell * p.n);
    let mut v = Vec::with_capacity(p.ell);
    // m·(q-1) < 2^24·2^24 fits in u64; rows are binary so sums stay small.
    let mut acc = vec![0u64; p.n];
    for (row, &bit) in randomizer.iter().zip(message) {
        assert_eq!(row.len(), p.m, "randomizer row length");
        acc.iter_mut().for_each(|a| *a = 0);
        let mut vb = 0u64;
        for (j, _) in row.iter().enumerate().filter(|(_, &r)| r) {
            let a_row = &pk.matrix[j * p.n..(j + 1) * p.n];
            for (a, &x) in acc.iter_mut().zip(a_row) {
                *a += u64::from(x);
            }
            vb += u64::from(pk.b[j]);
        }
        u.extend(acc.iter().map(|&a| (a % u64::from(q)) as u32));
        let shift = if bit { u64::from(p.half_q()) } else { 0 };
        v.push(((vb + shift) % u64::from(q)) as u32);
    }
    LatticeCiphertext { u, v }
}

/// Threshold decoding: bit `i` is set iff `v_i - U_i·s mod q` lies in `(q/4, 3q/4)`.
pub fn decrypt(sk: &LatticeSecretKey, ct: &LatticeCiphertext) -> Result<Vec<bool>, LatticeError> {
    let p = &sk.params;
    if ct.u.len() != p.ell * p.n || ct.v.len() != p.ell || sk.s.len() != p.n {
        return Err(LatticeError::DimensionMismatch);
    }
    let q = u64::from(p.q);
    Ok(ct
        .u
        .chunks_exact(p.n)
        .zip(&ct.v)
        .map(|(row, &vi)| {
            let dot = row
                .iter()
                .zip(&sk.s)
                .fold(0u64, |acc, (&a, &s)| (acc + u64::from(a) * u64::from(s)) % q);
            let x = (u64::from(vi) + q - dot) % q;
            4 * x > q && 4 * x < 3 * q
        })
        .collect())
}

/// Packs message bits least-significant bit first.
pub fn message_bytes(message: &[bool]) -> Vec<u8> {
    let mut out = vec![0u8; message.len().div_ceil(8)];
    for (i, _) in message.iter().enumerate().filter(|(_, &b)| b) {
        out[i / 8] |= 1 << (i % 8);
    }
    out
}

/// `kdf("lwe-ss", [message, hash(ciphertext bytes)])`.
pub fn shared_secret(params: &LatticeParams, message: &[bool], ct: &LatticeCiphertext) -> SharedSecret {
    let ct_digest = hash(&ct.to_bytes(params));
    SharedSecret(kdf(b"lwe-ss", &[&message_bytes(message), &ct_digest.0]).0)
}

pub fn lwe_encaps(pk: &LatticePublicKey, seed: &RandomSeed) -> (LatticeCiphertext, SharedSecret) {
    let p = &pk.params;
    let mut rng = seed.rng();
    let message: Vec<bool> = (0..p.ell).map(|_| rng.bit()).collect();
    let randomizer: Vec<Vec<bool>> = (0..p.ell)
        .map(|_| (0..p.m).map(|_| rng.bit()).collect())
        .collect();
    let ct = encrypt(pk, &message, &randomizer);
    let ss = shared_secret(p, &message, &ct);
    (ct, ss)
}

pub fn lwe_decaps(sk: &LatticeSecretKey, ct: &LatticeCiphertext) -> Result<SharedSecret, LatticeError> {
    let message = decrypt(sk, ct)?;
    Ok(shared_secret(&sk.params, &message, ct))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seed(b: u8) -> RandomSeed {
        RandomSeed([b; 32])
    }

    #[test]
    fn params_validation() {
        LatticeParams::DESK_512.validate().unwrap();
        LatticeParams::DESK_SMALL.validate().unwrap();
        LatticeParams::TINY.validate().unwrap();
        let mut p = LatticeParams::TINY;
        p.eta = 9;
        assert!(matches!(p.validate(), Err(LatticeError::InvalidParams(_))));
        p = LatticeParams::TINY;
        p.q = 96;
        assert!(p.validate().is_err());
        p = LatticeParams::TINY;
        p.m = 1;
        assert!(p.validate().is_err());
        // m·eta exactly q/4 is rejected.
        let edge = LatticeParams { n: 1, m: 4, q: 33, eta: 2, ell: 1 };
        assert!(edge.validate().is_err());
    }

    #[test]
    fn zero_error_gives_exact_product() {
        let params = LatticeParams { n: 1, m: 1, q: 17, eta: 0, ell: 1 };
        for s in 0..20u8 {
            let (pk, sk) = lwe_keygen(params, &seed(s)).unwrap();
            assert_eq!(pk.b[0], (pk.matrix()[0] * sk.s[0]) % 17);
        }
    }

    #[test]
    fn desk_sizes_follow_packing_formula() {
        let p = LatticeParams::DESK_512;
        assert_eq!(p.coeff_bits(), 14);
        assert_eq!(p.public_key_bytes(), 32 + 512 * 14 / 8);
        assert_eq!(p.public_key_bytes(), 928);
        assert_eq!(p.ciphertext_bytes(), 256 * 257 * 14 / 8);
        assert_eq!(p.ciphertext_bytes(), 115_136);
        let (pk, sk) = lwe_keygen(p, &seed(1)).unwrap();
        assert_eq!(pk.to_bytes().len(), 928);
        assert_eq!(sk.to_bytes().len(), p.secret_key_bytes());
        let (ct, _) = lwe_encaps(&pk, &seed(2));
        assert_eq!(ct.to_bytes(&p).len(), 115_136);
    }

    #[test]
    fn keygen_is_deterministic() {
        let (pk1, sk1) = lwe_keygen(LatticeParams::DESK_SMALL, &seed(3)).unwrap();
        let (pk2, sk2) = lwe_keygen(LatticeParams::DESK_SMALL, &seed(3)).unwrap();
        assert_eq!(pk1.to_bytes(), pk2.to_bytes());
        assert_eq!(sk1.to_bytes(), sk2.to_bytes());
        let (pk3, _) = lwe_keygen(LatticeParams::DESK_SMALL, &seed(4)).unwrap();
        assert_ne!(pk1.to_bytes(), pk3.to_bytes());
    }

    #[test]
    fn zero_randomizer_encodes_message_directly() {
        let p = LatticeParams::DESK_SMALL;
        let (pk, _) = lwe_keygen(p, &seed(5)).unwrap();
        let message: Vec<bool> = (0..p.ell).map(|i| i % 3 == 0).collect();
        let zeros = vec![vec![false; p.m]; p.ell];
        let ct = encrypt(&pk, &message, &zeros);
        assert!(ct.u.iter().all(|&x| x == 0));
        for (v, &bit) in ct.v.iter().zip(&message) {
            assert_eq!(*v, if bit { p.q / 2 } else { 0 });
        }
    }

    #[test]
    fn roundtrip_small_params() {
        let p = LatticeParams::DESK_SMALL;
        let (pk, sk) = lwe_keygen(p, &seed(6)).unwrap();
        for i in 0..100u64 {
            let (ct, ss) = lwe_encaps(&pk, &seed(7).derive_indexed(b"t", i));
            assert_eq!(lwe_decaps(&sk, &ct).unwrap(), ss);
        }
    }

    #[test]
    fn eta_zero_is_exact_for_all_messages() {
        let params = LatticeParams { n: 2, m: 3, q: 97, eta: 0, ell: 4 };
        let (pk, sk) = lwe_keygen(params, &seed(8)).unwrap();
        let mut rng = seed(9).rng();
        for msg in 0..16u8 {
            let message: Vec<bool> = (0..4).map(|i| msg >> i & 1 == 1).collect();
            let r: Vec<Vec<bool>> = (0..4).map(|_| (0..3).map(|_| rng.bit()).collect()).collect();
            let ct = encrypt(&pk, &message, &r);
            assert_eq!(decrypt(&sk, &ct).unwrap(), message);
        }
    }

    #[test]
    fn half_q_shift_flips_the_secret() {
        let p = LatticeParams::DESK_SMALL;
        let (pk, sk) = lwe_keygen(p, &seed(10)).unwrap();
        let (mut ct, ss) = lwe_encaps(&pk, &seed(11));
        ct.v[0] = (ct.v[0] + p.q / 2) % p.q;
        assert_ne!(lwe_decaps(&sk, &ct).unwrap(), ss);
    }

    #[test]
    fn dimension_mismatch() {
        let (pk, _) = lwe_keygen(LatticeParams::DESK_SMALL, &seed(12)).unwrap();
        let (_, sk) = lwe_keygen(LatticeParams::TINY, &seed(12)).unwrap();
        let (ct, _) = lwe_encaps(&pk, &seed(13));
        assert_eq!(lwe_decaps(&sk, &ct), Err(LatticeError::DimensionMismatch));
    }

    #[test]
    fn serialization_roundtrip() {
        let p = LatticeParams::DESK_SMALL;
        let (pk, sk) = lwe_keygen(p, &seed(14)).unwrap();
        assert_eq!(LatticePublicKey::from_bytes(p, &pk.to_bytes()).unwrap(), pk);
        assert_eq!(LatticeSecretKey::from_bytes(p, &sk.to_bytes()).unwrap(), sk);
        let (ct, _) = lwe_encaps(&pk, &seed(15));
        assert_eq!(LatticeCiphertext::from_bytes(&p, &ct.to_bytes(&p)).unwrap(), ct);
        assert!(LatticePublicKey::from_bytes(p, &pk.to_bytes()[1..]).is_err());
    }

    #[test]
    fn message_bit_packing() {
        assert_eq!(message_bytes(&[true, false, true, true]), vec![0b1101]);
        assert_eq!(message_bytes(&[false; 9]), vec![0, 0]);
    }
}
