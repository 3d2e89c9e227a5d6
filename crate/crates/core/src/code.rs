//! McEliece-style KEM over a random binary linear code.
//!
//! The secret code has a systematic generator `G = [I_k | A]`, checked to
//! have minimum distance at least `2t + 1`, and is decoded through a complete
//! syndrome table of every error pattern of weight `<= t`. The public key is
//! the scrambled generator `G' = S·G·P` for a random invertible `S` and a
//! random column permutation `P`.
//!
//! Codewords are `u128` bit vectors: bit `i` is coordinate `i`.

use std::collections::HashMap;

use thiserror::Error;

use crate::codec::DecodeError;
use crate::primitives::{hash, kdf, BitReader, BitWriter, RandomSeed, SeededRng, SharedSecret};

pub const MAX_LENGTH: usize = 128;
pub const MAX_ERRORS: usize = 3;
/// Largest `k` for which minimum distance is also checked by walking all `2^k` codewords.
pub const EXHAUSTIVE_DISTANCE_MAX_K: usize = 24;
const MAX_TABLE_ENTRIES: u64 = 1 << 20;
const MAX_KEYGEN_ATTEMPTS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error("invalid code parameters: {0}")]
    InvalidParams(&'static str),
    #[error("code parameters too large for table decoding")]
    ParamsTooLarge,
    #[error("no code with the required minimum distance found in {0} attempts")]
    Timeout(usize),
    #[error("injected generator is not usable: {0}")]
    InvalidGenerator(&'static str),
    #[error("syndrome not in decoding table")]
    DecodeFailure,
    #[error("malformed encoding: {0}")]
    Decode(#[from] DecodeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodeParams {
    /// Code length in bits.
    pub n: usize,
    /// Dimension in bits.
    pub k: usize,
    /// Number of errors corrected (and added by encapsulation).
    pub t: usize,
}

impl CodeParams {
    /// "desk-code": the default profile.
    pub const DESK: CodeParams = CodeParams { n: 48, k: 24, t: 2 };
    /// Comparison profile for size-ordering reports.
    pub const PAPER_SHAPE: CodeParams = CodeParams { n: 128, k: 64, t: 2 };
    pub const HAMMING_7_4: CodeParams = CodeParams { n: 7, k: 4, t: 1 };

    pub fn validate(&self) -> Result<(), CodeError> {
        if self.k == 0 || self.k >= self.n {
            return Err(CodeError::InvalidParams("need 0 < k < n"));
        }
        if self.n > MAX_LENGTH || self.t > MAX_ERRORS {
            return Err(CodeError::ParamsTooLarge);
        }
        if self.table_entries() > MAX_TABLE_ENTRIES {
            return Err(CodeError::ParamsTooLarge);
        }
        if self.t > self.n - self.k {
            return Err(CodeError::InvalidParams("t exceeds redundancy"));
        }
        Ok(())
    }

    /// `sum_{w=0..t} C(n, w)`.
    pub fn table_entries(&self) -> u64 {
        (0..=self.t as u64).map(|w| binomial(self.n as u64, w)).sum()
    }

    /// `ceil(k·n/8)`.
    pub fn public_key_bytes(&self) -> usize {
        (self.k * self.n).div_ceil(8)
    }

    /// Packed `S` and `G` followed by one byte per permutation entry.
    pub fn secret_key_bytes(&self) -> usize {
        (self.k * self.k + self.k * self.n).div_ceil(8) + self.n
    }

    pub fn ciphertext_bytes(&self) -> usize {
        self.n.div_ceil(8)
    }

    fn mask_k(&self) -> u128 {
        low_mask(self.k)
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

fn low_mask(bits: usize) -> u128 {
    if bits == 128 {
        u128::MAX
    } else {
        (1u128 << bits) - 1
    }
}

fn parity(x: u128) -> u128 {
    u128::from(x.count_ones() & 1)
}

/// `x · M` over GF(2) for a row-vector `x` and matrix rows `M`.
fn vec_mat(x: u128, rows: &[u128]) -> u128 {
    rows.iter()
        .enumerate()
        .filter(|(i, _)| x >> i & 1 == 1)
        .fold(0, |acc, (_, &r)| acc ^ r)
}

/// Inverse of a square GF(2) matrix given as rows, or `None` if singular.
fn invert(rows: &[u128]) -> Option<Vec<u128>> {
    let k = rows.len();
    let mut a = rows.to_vec();
    let mut inv: Vec<u128> = (0..k).map(|i| 1u128 << i).collect();
    for col in 0..k {
        let pivot = (col..k).find(|&r| a[r] >> col & 1 == 1)?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        for r in 0..k {
            if r != col && a[r] >> col & 1 == 1 {
                a[r] ^= a[col];
                inv[r] ^= inv[col];
            }
        }
    }
    Some(inv)
}

/// Applies a column permutation: bit `i` of `x` moves to bit `perm[i]`.
fn permute(x: u128, perm: &[u8]) -> u128 {
    perm.iter()
        .enumerate()
        .filter(|(i, _)| x >> i & 1 == 1)
        .fold(0, |acc, (_, &p)| acc | 1u128 << p)
}

fn inverse_permutation(perm: &[u8]) -> Vec<u8> {
    let mut inv = vec![0u8; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p as usize] = i as u8;
    }
    inv
}

/// Every error pattern of weight exactly `weight` over `n` positions.
fn patterns_of_weight(n: usize, weight: usize) -> Vec<u128> {
    fn rec(start: usize, n: usize, left: usize, acc: u128, out: &mut Vec<u128>) {
        if left == 0 {
            out.push(acc);
            return;
        }
        for i in start..=n - left {
            rec(i + 1, n, left - 1, acc | 1u128 << i, out);
        }
    }
    let mut out = Vec::new();
    if weight <= n {
        rec(0, n, weight, 0, &mut out);
    }
    out
}

/// Minimum nonzero codeword weight, by Gray-code walk over all `2^k` messages.
pub fn min_distance_exhaustive(generator: &[u128]) -> u32 {
    let k = generator.len();
    let mut codeword = 0u128;
    let mut best = u32::MAX;
    for i in 1u64..1u64 << k {
        codeword ^= generator[i.trailing_zeros() as usize];
        best = best.min(codeword.count_ones());
    }
    best
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodePublicKey {
    pub params: CodeParams,
    /// `k` rows of `n` bits.
    pub g_prime: Vec<u128>,
}

#[derive(Debug, Clone)]
pub struct CodeSecretKey {
    pub params: CodeParams,
    pub s: Vec<u128>,
    /// Systematic secret generator `[I_k | A]`.
    pub g: Vec<u128>,
    pub perm: Vec<u8>,
    s_inv: Vec<u128>,
    perm_inv: Vec<u8>,
    parity_check: Vec<u128>,
    syndrome_table: HashMap<u128, u128>,
}

impl PartialEq for CodeSecretKey {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params && self.s == other.s && self.g == other.g && self.perm == other.perm
    }
}

impl Eq for CodeSecretKey {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodeCiphertext {
    pub c_prime: u128,
}

/// Parity-check rows `[A^T | I_{n-k}]` for a systematic generator.
fn parity_check_rows(params: &CodeParams, g: &[u128]) -> Vec<u128> {
    (0..params.n - params.k)
        .map(|r| {
            let col = params.k + r;
            let left = g
                .iter()
                .enumerate()
                .filter(|(_, &row)| row >> col & 1 == 1)
                .fold(0u128, |acc, (i, _)| acc | 1 << i);
            left | 1u128 << col
        })
        .collect()
}

fn syndrome(parity_check: &[u128], y: u128) -> u128 {
    parity_check
        .iter()
        .enumerate()
        .fold(0, |acc, (r, &h)| acc | parity(h & y) << r)
}

/// Table from syndrome to the unique error of weight `<= t` producing it.
///
/// A collision means two such errors differ by a nonzero codeword of weight
/// `<= 2t`, so this fails exactly when the minimum distance is below `2t + 1`.
fn build_syndrome_table(params: &CodeParams, parity_check: &[u128]) -> Option<HashMap<u128, u128>> {
    let mut table = HashMap::with_capacity(params.table_entries() as usize);
    for w in 0..=params.t {
        for e in patterns_of_weight(params.n, w) {
            if table.insert(syndrome(parity_check, e), e).is_some() {
                return None;
            }
        }
    }
    Some(table)
}

fn check_systematic(params: &CodeParams, g: &[u128]) -> Result<(), CodeError> {
    if g.len() != params.k {
        return Err(CodeError::InvalidGenerator("row count differs from k"));
    }
    let n_mask = low_mask(params.n);
    for (i, &row) in g.iter().enumerate() {
        if row & !n_mask != 0 {
            return Err(CodeError::InvalidGenerator("row wider than n"));
        }
        if row & params.mask_k() != 1 << i {
            return Err(CodeError::InvalidGenerator("generator not in systematic form"));
        }
    }
    Ok(())
}

impl CodeSecretKey {
    fn assemble(params: CodeParams, s: Vec<u128>, g: Vec<u128>, perm: Vec<u8>) -> Result<Self, CodeError> {
        check_systematic(&params, &g)?;
        if perm.len() != params.n || inverse_permutation_checked(&perm).is_none() {
            return Err(CodeError::Decode(DecodeError::Invalid("permutation")));
        }
        let s_inv = invert(&s).ok_or(DecodeError::Invalid("scrambler is singular"))?;
        let parity_check = parity_check_rows(&params, &g);
        let syndrome_table = build_syndrome_table(&params, &parity_check)
            .ok_or(CodeError::InvalidGenerator("minimum distance below 2t+1"))?;
        let perm_inv = inverse_permutation(&perm);
        Ok(Self {
            params,
            s,
            g,
            perm,
            s_inv,
            perm_inv,
            parity_check,
            syndrome_table,
        })
    }

    pub fn syndrome_table_len(&self) -> usize {
        self.syndrome_table.len()
    }

    pub fn public_key(&self) -> CodePublicKey {
        let g_prime = self
            .s
            .iter()
            .map(|&srow| permute(vec_mat(srow, &self.g), &self.perm))
            .collect();
        CodePublicKey {
            params: self.params,
            g_prime,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = BitWriter::new();
        for &row in &self.s {
            write_bits(&mut w, row, self.params.k);
        }
        for &row in &self.g {
            write_bits(&mut w, row, self.params.n);
        }
        let mut out = w.finish();
        out.extend_from_slice(&self.perm);
        out
    }

    pub fn from_bytes(params: CodeParams, bytes: &[u8]) -> Result<Self, CodeError> {
        params.validate()?;
        if bytes.len() != params.secret_key_bytes() {
            return Err(DecodeError::Invalid("code secret key length").into());
        }
        let split = bytes.len() - params.n;
        let mut r = BitReader::new(&bytes[..split]);
        let s = read_rows(&mut r, params.k, params.k)?;
        let g = read_rows(&mut r, params.k, params.n)?;
        if !r.rest_is_zero() {
            return Err(DecodeError::Invalid("nonzero padding").into());
        }
        Self::assemble(params, s, g, bytes[split..].to_vec())
    }
}

fn inverse_permutation_checked(perm: &[u8]) -> Option<()> {
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        let slot = seen.get_mut(p as usize)?;
        if *slot {
            return None;
        }
        *slot = true;
    }
    Some(())
}

fn write_bits(w: &mut BitWriter, value: u128, bits: usize) {
    for i in 0..bits {
        w.write((value >> i & 1) as u64, 1);
    }
}

fn read_bits(r: &mut BitReader<'_>, bits: usize) -> Result<u128, DecodeError> {
    let mut value = 0u128;
    for i in 0..bits {
        value |= u128::from(r.read(1).ok_or(DecodeError::UnexpectedEnd)? as u8) << i;
    }
    Ok(value)
}

fn read_rows(r: &mut BitReader<'_>, rows: usize, bits: usize) -> Result<Vec<u128>, DecodeError> {
    (0..rows).map(|_| read_bits(r, bits)).collect()
}

fn bits_to_bytes(value: u128, bits: usize) -> Vec<u8> {
    value.to_le_bytes()[..bits.div_ceil(8)].to_vec()
}

impl CodePublicKey {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = BitWriter::new();
        for &row in &self.g_prime {
            write_bits(&mut w, row, self.params.n);
        }
        w.finish()
    }

    pub fn from_bytes(params: CodeParams, bytes: &[u8]) -> Result<Self, CodeError> {
        params.validate()?;
        if bytes.len() != params.public_key_bytes() {
            return Err(DecodeError::Invalid("code public key length").into());
        }
        let mut r = BitReader::new(bytes);
        let g_prime = read_rows(&mut r, params.k, params.n)?;
        if !r.rest_is_zero() {
            return Err(DecodeError::Invalid("nonzero padding").into());
        }
        Ok(Self { params, g_prime })
    }

    /// `m·G'` for a `k`-bit message.
    pub fn encode(&self, message: u128) -> u128 {
        vec_mat(message & self.params.mask_k(), &self.g_prime)
    }
}

impl CodeCiphertext {
    pub fn to_bytes(&self, params: &CodeParams) -> Vec<u8> {
        bits_to_bytes(self.c_prime, params.n)
    }

    pub fn from_bytes(params: &CodeParams, bytes: &[u8]) -> Result<Self, CodeError> {
        if bytes.len() != params.ciphertext_bytes() {
            return Err(DecodeError::Invalid("code ciphertext length").into());
        }
        let mut buf = [0u8; 16];
        buf[..bytes.len()].copy_from_slice(bytes);
        let c_prime = u128::from_le_bytes(buf);
        if c_prime & !low_mask(params.n) != 0 {
            return Err(DecodeError::Invalid("bits beyond code length").into());
        }
        Ok(Self { c_prime })
    }
}

fn random_bits(rng: &mut SeededRng, bits: usize) -> u128 {
    let raw = u128::from(rng.next_u64()) | u128::from(rng.next_u64()) << 64;
    raw & low_mask(bits)
}

fn random_invertible(rng: &mut SeededRng, k: usize) -> Vec<u128> {
    loop {
        let rows: Vec<u128> = (0..k).map(|_| random_bits(rng, k)).collect();
        if invert(&rows).is_some() {
            return rows;
        }
    }
}

fn random_permutation(rng: &mut SeededRng, n: usize) -> Vec<u8> {
    let mut perm: Vec<u8> = (0..n as u8).collect();
    for i in (1..n).rev() {
        let j = rng.below(i as u32 + 1) as usize;
        perm.swap(i, j);
    }
    perm
}

fn has_required_distance(params: &CodeParams, g: &[u128]) -> bool {
    if params.k <= EXHAUSTIVE_DISTANCE_MAX_K {
        min_distance_exhaustive(g) as usize > 2 * params.t
    } else {
        build_syndrome_table(params, &parity_check_rows(params, g)).is_some()
    }
}

pub fn code_keygen(params: CodeParams, seed: &RandomSeed) -> Result<(CodePublicKey, CodeSecretKey), CodeError> {
    params.validate()?;
    let mut rng = seed.rng();
    for _ in 0..MAX_KEYGEN_ATTEMPTS {
        let g: Vec<u128> = (0..params.k)
            .map(|i| 1u128 << i | random_bits(&mut rng, params.n - params.k) << params.k)
            .collect();
        if has_required_distance(&params, &g) {
            return finish_keygen(params, g, &mut rng);
        }
    }
    Err(CodeError::Timeout(MAX_KEYGEN_ATTEMPTS))
}

/// Key generation around a caller-chosen systematic generator (e.g. Hamming(7,4)).
pub fn code_keygen_with_generator(
    params: CodeParams,
    generator: Vec<u128>,
    seed: &RandomSeed,
) -> Result<(CodePublicKey, CodeSecretKey), CodeError> {
    params.validate()?;
    check_systematic(&params, &generator)?;
    finish_keygen(params, generator, &mut seed.rng())
}

fn finish_keygen(
    params: CodeParams,
    g: Vec<u128>,
    rng: &mut SeededRng,
) -> Result<(CodePublicKey, CodeSecretKey), CodeError> {
    let s = random_invertible(rng, params.k);
    let perm = random_permutation(rng, params.n);
    let sk = CodeSecretKey::assemble(params, s, g, perm)?;
    Ok((sk.public_key(), sk))
}

/// `c' = m·G' + e`.
pub fn encrypt(pk: &CodePublicKey, message: u128, error: u128) -> CodeCiphertext {
    CodeCiphertext {
        c_prime: pk.encode(message) ^ error,
    }
}

/// `kdf("code-ss", [m, hash(c')])`.
pub fn shared_secret(params: &CodeParams, message: u128, ct: &CodeCiphertext) -> SharedSecret {
    let ct_digest = hash(&ct.to_bytes(params));
    SharedSecret(kdf(b"code-ss", &[&bits_to_bytes(message, params.k), &ct_digest.0]).0)
}

/// Uniform error vector of weight exactly `t`.
pub fn random_error(rng: &mut SeededRng, n: usize, t: usize) -> u128 {
    let mut e = 0u128;
    while (e.count_ones() as usize) < t {
        e |= 1u128 << rng.below(n as u32);
    }
    e
}

pub fn code_encaps(pk: &CodePublicKey, seed: &RandomSeed) -> (CodeCiphertext, SharedSecret) {
    let p = &pk.params;
    let mut rng = seed.rng();
    let message = random_bits(&mut rng, p.k);
    let error = random_error(&mut rng, p.n, p.t);
    let ct = encrypt(pk, message, error);
    (ct, shared_secret(p, message, &ct))
}

/// Recovers the message: unpermute, strip the table error, read the
/// systematic part and unscramble.
pub fn decrypt(sk: &CodeSecretKey, ct: &CodeCiphertext) -> Result<u128, CodeError> {
    let y = permute(ct.c_prime, &sk.perm_inv);
    let error = sk
        .syndrome_table
        .get(&syndrome(&sk.parity_check, y))
        .ok_or(CodeError::DecodeFailure)?;
    let m_scrambled = (y ^ error) & sk.params.mask_k();
    Ok(vec_mat(m_scrambled, &sk.s_inv))
}

pub fn code_decaps(sk: &CodeSecretKey, ct: &CodeCiphertext) -> Result<SharedSecret, CodeError> {
    let message = decrypt(sk, ct)?;
    Ok(shared_secret(&sk.params, message, ct))
}

/// Hamming(7,4) in systematic form, for tests and demonstrations.
pub fn hamming_7_4_generator() -> Vec<u128> {
    // [I_4 | A] with A rows 110, 101, 011, 111 (bit 4 is the first parity column).
    [0b011, 0b101, 0b110, 0b111]
        .iter()
        .enumerate()
        .map(|(i, &a)| 1u128 << i | (a as u128) << 4)
        .collect()
}
