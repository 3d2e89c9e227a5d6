//! Stateful Merkle signatures over Winternitz one-time keys.
//!
//! Each of the `2^h` leaves commits to one WOTS key: `chains` hash chains of
//! length `2^w - 1`, started from `hash(seed || leaf || chain)`. A leaf is
//! `hash(0x00 || chain ends)` and an inner node `hash(0x01 || left || right)`.
//!
//! Signing consumes one leaf; the secret key's `next_index` only moves
//! forward, so a leaf is never used twice. This is a stateful scheme in
//! the XMSS/LMS family. Stateless SPHINCS+ (hypertrees, FORS) is not covered.

use std::sync::Arc;

use thiserror::Error;

use crate::codec::{DecodeError, Reader};
use crate::primitives::{hash, hash_parts, Digest, RandomSeed, DIGEST_LEN};

pub const LEAF_PREFIX: u8 = 0x00;
pub const NODE_PREFIX: u8 = 0x01;
pub const MAX_HEIGHT: u32 = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HashSigError {
    #[error("invalid hash-signature parameters: {0}")]
    InvalidParams(&'static str),
    #[error("all one-time keys used")]
    KeyExhausted,
    #[error("malformed signature")]
    MalformedSignature,
    #[error("malformed encoding: {0}")]
    Decode(#[from] DecodeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashSigParams {
    /// Tree height; the key signs `2^h` messages.
    pub h: u32,
    /// Winternitz chunk width in bits.
    pub w: u32,
}

impl HashSigParams {
    pub const DESK: HashSigParams = HashSigParams { h: 12, w: 4 };
    pub const SMALL: HashSigParams = HashSigParams { h: 4, w: 4 };

    pub fn validate(&self) -> Result<(), HashSigError> {
        if self.h > MAX_HEIGHT {
            return Err(HashSigError::InvalidParams("height above 16"));
        }
        if ![1, 2, 4, 8].contains(&self.w) {
            return Err(HashSigError::InvalidParams("w must be 1, 2, 4 or 8"));
        }
        Ok(())
    }

    pub fn capacity(&self) -> u64 {
        1 << self.h
    }

    /// Largest chain position, `2^w - 1`.
    pub fn chain_max(&self) -> u32 {
        (1 << self.w) - 1
    }

    /// Chains covering the 256-bit message digest.
    pub fn message_chains(&self) -> usize {
        256usize.div_ceil(self.w as usize)
    }

    /// `ceil(log2(len1·(2^w - 1) + 1) / w)`.
    pub fn checksum_chains(&self) -> usize {
        let max_checksum = self.message_chains() as u64 * u64::from(self.chain_max());
        let bits = 64 - max_checksum.leading_zeros() as usize;
        bits.div_ceil(self.w as usize)
    }

    pub fn chains(&self) -> usize {
        self.message_chains() + self.checksum_chains()
    }

    pub fn public_key_bytes(&self) -> usize {
        DIGEST_LEN
    }

    /// Master seed plus the 4-byte next index.
    pub fn secret_key_bytes(&self) -> usize {
        32 + 4
    }

    pub fn signature_bytes(&self) -> usize {
        4 + DIGEST_LEN * (self.chains() + self.h as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashSigPublicKey {
    pub params: HashSigParams,
    pub root: Digest,
}

/// Secret state. Not `Clone`: a copy would make leaf reuse possible.
#[derive(Debug)]
pub struct HashSigSecretKey {
    pub params: HashSigParams,
    seed: [u8; 32],
    next_index: u32,
    // Tree levels from `cached_from(h)` up to the root; `upper.last() == [root]`.
    upper: Arc<Vec<Vec<Digest>>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashSigSignature {
    pub index: u32,
    pub ots_chains: Vec<Digest>,
    pub auth_path: Vec<Digest>,
}

/// Advances a chain `steps` times from `start`.
pub fn chain(start: Digest, steps: u32) -> Digest {
    (0..steps).fold(start, |x, _| hash(&x.0))
}

/// Secret start of chain `chain_index` at leaf `leaf_index`.
pub fn chain_start(seed: &[u8; 32], leaf_index: u32, chain_index: u32) -> Digest {
    hash_parts(&[seed, &leaf_index.to_le_bytes(), &chain_index.to_le_bytes()])
}

/// Base-`2^w` digits of the digest (most significant first) followed by
/// the checksum digits `sum(2^w - 1 - d_j)`.
pub fn message_chunks(params: &HashSigParams, digest: &Digest) -> Vec<u32> {
    let w = params.w;
    let mask = params.chain_max();
    let mut digits = Vec::with_capacity(params.chains());
    for &byte in &digest.0 {
        for shift in (0..8 / w).rev() {
            digits.push(u32::from(byte) >> (shift * w) & mask);
        }
    }
    let checksum: u64 = digits.iter().map(|&d| u64::from(mask - d)).sum();
    for i in (0..params.checksum_chains()).rev() {
        digits.push((checksum >> (i as u32 * w)) as u32 & mask);
    }
    digits
}

pub fn leaf_from_chain_ends(ends: &[Digest]) -> Digest {
    let mut parts: Vec<&[u8]> = Vec::with_capacity(ends.len() + 1);
    parts.push(&[LEAF_PREFIX]);
    parts.extend(ends.iter().map(|d| &d.0[..]));
    hash_parts(&parts)
}

pub fn node(left: &Digest, right: &Digest) -> Digest {
    hash_parts(&[&[NODE_PREFIX], &left.0, &right.0])
}

fn ots_chain_ends(params: &HashSigParams, seed: &[u8; 32], leaf: u32) -> Vec<Digest> {
    (0..params.chains() as u32)
        .map(|c| chain(chain_start(seed, leaf, c), params.chain_max()))
        .collect()
}

/// Leaf digest of the one-time key at `leaf`.
pub fn leaf_digest(params: &HashSigParams, seed: &[u8; 32], leaf: u32) -> Digest {
    leaf_from_chain_ends(&ots_chain_ends(params, seed, leaf))
}

/// Lowest tree level kept in memory. Signing recomputes the `2^SUBTREE_HEIGHT`
/// leaves of the signing leaf's subtree to obtain the lower auth-path nodes.
pub const SUBTREE_HEIGHT: u32 = 4;

fn cached_from(h: u32) -> usize {
    h.min(SUBTREE_HEIGHT) as usize
}

fn fold_level(level: &[Digest]) -> Vec<Digest> {
    level.chunks_exact(2).map(|pair| node(&pair[0], &pair[1])).collect()
}

fn build_upper_levels(params: &HashSigParams, seed: &[u8; 32]) -> Vec<Vec<Digest>> {
    let mut level: Vec<Digest> = (0..params.capacity() as u32)
        .map(|i| leaf_digest(params, seed, i))
        .collect();
    for _ in 0..cached_from(params.h) {
        level = fold_level(&level);
    }
    let mut upper = vec![level];
    while upper.last().unwrap().len() > 1 {
        let next = fold_level(upper.last().unwrap());
        upper.push(next);
    }
    upper
}

fn message_digest(msg: &[u8]) -> Digest {
    hash(msg)
}

pub fn hsig_keygen(
    params: HashSigParams,
    seed: &RandomSeed,
) -> Result<(HashSigPublicKey, HashSigSecretKey), HashSigError> {
    params.validate()?;
    let master = seed.derive(b"hsig-master").0;
    let upper = build_upper_levels(&params, &master);
    let root = upper.last().unwrap()[0];
    let sk = HashSigSecretKey {
        params,
        seed: master,
        next_index: 0,
        upper: Arc::new(upper),
    };
    Ok((HashSigPublicKey { params, root }, sk))
}

impl HashSigSecretKey {
    pub fn next_index(&self) -> u32 {
        self.next_index
    }

    pub fn remaining(&self) -> u64 {
        self.params.capacity() - u64::from(self.next_index)
    }

    pub fn public_key(&self) -> HashSigPublicKey {
        HashSigPublicKey {
            params: self.params,
            root: self.upper.last().unwrap()[0],
        }
    }

    /// `seed || next_index (u32 LE)`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.seed.to_vec();
        out.extend_from_slice(&self.next_index.to_le_bytes());
        out
    }

    /// Restores the state, rebuilding the cached tree levels from the seed.
    pub fn from_bytes(params: HashSigParams, bytes: &[u8]) -> Result<Self, HashSigError> {
        params.validate()?;
        let mut r = Reader::new(bytes);
        let seed: [u8; 32] = r.array()?;
        let next_index = r.u32()?;
        r.finish()?;
        if u64::from(next_index) > params.capacity() {
            return Err(DecodeError::Invalid("next_index beyond capacity").into());
        }
        Ok(Self {
            params,
            seed,
            next_index,
            upper: Arc::new(build_upper_levels(&params, &seed)),
        })
    }

    fn auth_path(&self, index: u32) -> Vec<Digest> {
        let low = cached_from(self.params.h);
        let first = index >> low << low;
        let mut level: Vec<Digest> = (first..first + (1 << low))
            .map(|i| leaf_digest(&self.params, &self.seed, i))
            .collect();
        let mut path = Vec::with_capacity(self.params.h as usize);
        for l in 0..low {
            path.push(level[((index - first) >> l) as usize ^ 1]);
            level = fold_level(&level);
        }
        for l in low..self.params.h as usize {
            path.push(self.upper[l - low][(index >> l) as usize ^ 1]);
        }
        path
    }
}

pub fn hsig_remaining(sk: &HashSigSecretKey) -> u64 {
    sk.remaining()
}

/// Signs with the next unused leaf and advances the state.
pub fn hsig_sign(sk: &mut HashSigSecretKey, msg: &[u8]) -> Result<HashSigSignature, HashSigError> {
    if sk.remaining() == 0 {
        return Err(HashSigError::KeyExhausted);
    }
    let index = sk.next_index;
    let digits = message_chunks(&sk.params, &message_digest(msg));
    let ots_chains = digits
        .iter()
        .enumerate()
        .map(|(c, &d)| chain(chain_start(&sk.seed, index, c as u32), d))
        .collect();
    let sig = HashSigSignature {
        index,
        ots_chains,
        auth_path: sk.auth_path(index),
    };
    sk.next_index += 1;
    Ok(sig)
}

/// Root implied by a signature over `msg`.
pub fn root_from_signature(params: &HashSigParams, msg: &[u8], sig: &HashSigSignature) -> Digest {
    let digits = message_chunks(params, &message_digest(msg));
    let ends: Vec<Digest> = sig
        .ots_chains
        .iter()
        .zip(&digits)
        .map(|(&x, &d)| chain(x, params.chain_max() - d))
        .collect();
    let mut current = leaf_from_chain_ends(&ends);
    for (level, sibling) in sig.auth_path.iter().enumerate() {
        current = if sig.index >> level & 1 == 0 {
            node(&current, sibling)
        } else {
            node(sibling, &current)
        };
    }
    current
}

pub fn hsig_verify(pk: &HashSigPublicKey, msg: &[u8], sig: &HashSigSignature) -> Result<bool, HashSigError> {
    let p = &pk.params;
    if sig.ots_chains.len() != p.chains()
        || sig.auth_path.len() != p.h as usize
        || u64::from(sig.index) >= p.capacity()
    {
        return Err(HashSigError::MalformedSignature);
    }
    Ok(root_from_signature(p, msg, sig) == pk.root)
}

impl HashSigSignature {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.index.to_le_bytes().to_vec();
        for d in self.ots_chains.iter().chain(&self.auth_path) {
            out.extend_from_slice(&d.0);
        }
        out
    }

    pub fn from_bytes(params: &HashSigParams, bytes: &[u8]) -> Result<Self, HashSigError> {
        if bytes.len() != params.signature_bytes() {
            return Err(HashSigError::MalformedSignature);
        }
        let mut r = Reader::new(bytes);
        let index = r.u32()?;
        let ots_chains = (0..params.chains()).map(|_| r.digest()).collect::<Result<_, _>>()?;
        let auth_path = (0..params.h).map(|_| r.digest()).collect::<Result<_, _>>()?;
        r.finish()?;
        Ok(Self {
            index,
            ots_chains,
            auth_path,
        })
    }
}

impl HashSigPublicKey {
    pub fn to_bytes(&self) -> Vec<u8> {
        self.root.0.to_vec()
    }

    pub fn from_bytes(params: HashSigParams, bytes: &[u8]) -> Result<Self, HashSigError> {
        params.validate()?;
        let root = Digest::from_slice(bytes).ok_or(DecodeError::Invalid("root length"))?;
        Ok(Self { params, root })
    }
}
