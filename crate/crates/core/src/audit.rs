//! Append-only Merkle audit log with inclusion proofs and signed checkpoints.
//!
//! Leaves are `hash(0x00 || record)` and internal nodes
//! `hash(0x01 || left || right)`. When a level has an odd number of nodes
//! the last one is carried up unchanged.

use thiserror::Error;

use crate::codec::{put_var_bytes, DecodeError, Reader};
use crate::hashsig::{
    hsig_sign, hsig_verify, HashSigError, HashSigParams, HashSigPublicKey, HashSigSecretKey, HashSigSignature,
};
use crate::primitives::{frame_decode, frame_encode, hash_parts, Digest, MsgType};

const LEAF_PREFIX: u8 = 0x00;
const NODE_PREFIX: u8 = 0x01;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AuditError {
    #[error("tree is empty")]
    EmptyTree,
    #[error("index {index} out of range for tree of size {size}")]
    IndexOutOfRange { index: u64, size: u64 },
    #[error("malformed proof")]
    MalformedProof,
    #[error("checkpoint signing failed: {0}")]
    Signing(#[from] HashSigError),
    #[error("malformed encoding: {0}")]
    Decode(#[from] DecodeError),
}

pub fn leaf_hash(record: &[u8]) -> Digest {
    hash_parts(&[&[LEAF_PREFIX], record])
}

pub fn node_hash(left: &Digest, right: &Digest) -> Digest {
    hash_parts(&[&[NODE_PREFIX], &left.0, &right.0])
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AuditTree {
    /// `levels[0]` holds the leaves; the last level holds the root.
    levels: Vec<Vec<Digest>>,
}

impl AuditTree {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records<I, R>(records: I) -> Self
    where
        I: IntoIterator<Item = R>,
        R: AsRef<[u8]>,
    {
        let mut tree = Self::new();
        for r in records {
            tree.append(r.as_ref());
        }
        tree
    }

    pub fn len(&self) -> u64 {
        self.levels.first().map_or(0, |l| l.len() as u64)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn leaves(&self) -> &[Digest] {
        self.levels.first().map_or(&[], Vec::as_slice)
    }

    /// Appends a record and returns its index. Only the right edge of the
    /// tree is recomputed.
    pub fn append(&mut self, record: &[u8]) -> u64 {
        self.append_leaf(leaf_hash(record))
    }

    pub fn append_leaf(&mut self, leaf: Digest) -> u64 {
        if self.levels.is_empty() {
            self.levels.push(Vec::new());
        }
        self.levels[0].push(leaf);
        let mut level = 0;
        while self.levels[level].len() > 1 {
            let row = &self.levels[level];
            let last = row.len() - 1;
            let parent = if last % 2 == 0 {
                row[last]
            } else {
                node_hash(&row[last - 1], &row[last])
            };
            if self.levels.len() == level + 1 {
                self.levels.push(Vec::new());
            }
            let up = &mut self.levels[level + 1];
            if up.len() == last / 2 + 1 {
                up[last / 2] = parent;
            } else {
                up.push(parent);
            }
            level += 1;
        }
        self.len() - 1
    }

    pub fn root(&self) -> Result<Digest, AuditError> {
        self.levels
            .last()
            .and_then(|top| top.first())
            .copied()
            .ok_or(AuditError::EmptyTree)
    }

    pub fn prove_inclusion(&self, index: u64) -> Result<InclusionProof, AuditError> {
        let size = self.len();
        if index >= size {
            return Err(AuditError::IndexOutOfRange { index, size });
        }
        let mut siblings = Vec::new();
        let mut pos = index as usize;
        for row in &self.levels[..self.levels.len() - 1] {
            if pos % 2 == 1 {
                siblings.push((row[pos - 1], Side::Left));
            } else if pos + 1 < row.len() {
                siblings.push((row[pos + 1], Side::Right));
            }
            pos /= 2;
        }
        Ok(InclusionProof {
            index,
            tree_size: size,
            siblings,
        })
    }

    pub fn checkpoint(&self, sk: &mut HashSigSecretKey) -> Result<SignedCheckpoint, AuditError> {
        let root = self.root()?;
        let tree_size = self.len();
        let signature = hsig_sign(sk, &checkpoint_message(&root, tree_size))?;
        Ok(SignedCheckpoint {
            root,
            tree_size,
            signature,
        })
    }

    /// True when the checkpoint describes this tree's current state.
    pub fn matches_checkpoint(&self, cp: &SignedCheckpoint) -> bool {
        self.len() == cp.tree_size && self.root().ok() == Some(cp.root)
    }
}

/// Which side of the running hash a sibling sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InclusionProof {
    pub index: u64,
    pub tree_size: u64,
    pub siblings: Vec<(Digest, Side)>,
}

/// Sibling sides the proof for `index` must have in a tree of `size` leaves.
fn expected_sides(index: u64, size: u64) -> Vec<Side> {
    let mut sides = Vec::new();
    let (mut pos, mut len) = (index, size);
    while len > 1 {
        if pos % 2 == 1 {
            sides.push(Side::Left);
        } else if pos + 1 < len {
            sides.push(Side::Right);
        }
        pos /= 2;
        len = len.div_ceil(2);
    }
    sides
}

/// Replays the proof from `leaf` and compares with `root`. The proof's shape
/// must match the one implied by its index and tree size.
pub fn verify_inclusion(root: &Digest, index: u64, leaf: &Digest, proof: &InclusionProof) -> Result<bool, AuditError> {
    if proof.index != index || index >= proof.tree_size {
        return Err(AuditError::MalformedProof);
    }
    let sides = expected_sides(index, proof.tree_size);
    if sides.len() != proof.siblings.len() || sides.iter().zip(&proof.siblings).any(|(s, (_, side))| s != side) {
        return Err(AuditError::MalformedProof);
    }
    let computed = proof.siblings.iter().fold(*leaf, |acc, (sib, side)| match side {
        Side::Left => node_hash(sib, &acc),
        Side::Right => node_hash(&acc, sib),
    });
    Ok(computed == *root)
}

impl InclusionProof {
    /// `index u64 || tree_size u64 || count u32 || (side byte || digest)*`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(20 + 33 * self.siblings.len());
        out.extend_from_slice(&self.index.to_le_bytes());
        out.extend_from_slice(&self.tree_size.to_le_bytes());
        out.extend_from_slice(&(self.siblings.len() as u32).to_le_bytes());
        for (d, side) in &self.siblings {
            out.push(match side {
                Side::Left => 0,
                Side::Right => 1,
            });
            out.extend_from_slice(&d.0);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, AuditError> {
        let mut r = Reader::new(bytes);
        let index = r.u64()?;
        let tree_size = r.u64()?;
        let count = r.u32()? as usize;
        if count > 64 {
            return Err(AuditError::MalformedProof);
        }
        let mut siblings = Vec::with_capacity(count);
        for _ in 0..count {
            let side = match r.u8()? {
                0 => Side::Left,
                1 => Side::Right,
                _ => return Err(AuditError::MalformedProof),
            };
            siblings.push((r.digest()?, side));
        }
        r.finish()?;
        Ok(Self {
            index,
            tree_size,
            siblings,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedCheckpoint {
    pub root: Digest,
    pub tree_size: u64,
    pub signature: HashSigSignature,
}

/// Signed message: `root || 8-byte LE tree_size`.
pub fn checkpoint_message(root: &Digest, tree_size: u64) -> Vec<u8> {
    [root.0.as_slice(), &tree_size.to_le_bytes()].concat()
}

pub fn verify_checkpoint(pk: &HashSigPublicKey, cp: &SignedCheckpoint) -> bool {
    cp.tree_size > 0 && hsig_verify(pk, &checkpoint_message(&cp.root, cp.tree_size), &cp.signature).unwrap_or(false)
}

/// Inclusion check against a verified checkpoint. The root alone does not
/// pin the tree size, so the proof's size must equal the checkpoint's.
pub fn verify_inclusion_at(cp: &SignedCheckpoint, index: u64, leaf: &Digest, proof: &InclusionProof) -> Result<bool, AuditError> {
    if proof.tree_size != cp.tree_size {
        return Ok(false);
    }
    verify_inclusion(&cp.root, index, leaf, proof)
}

impl SignedCheckpoint {
    /// Checkpoint frame (type 6): `root || size u64 || h || w || u32 len || signature`.
    pub fn to_frame(&self, params: &HashSigParams) -> Vec<u8> {
        let mut payload = self.root.0.to_vec();
        payload.extend_from_slice(&self.tree_size.to_le_bytes());
        payload.push(params.h as u8);
        payload.push(params.w as u8);
        put_var_bytes(&mut payload, &self.signature.to_bytes());
        frame_encode(MsgType::Checkpoint, &payload).expect("checkpoint fits in a frame")
    }

    pub fn from_frame(bytes: &[u8]) -> Result<(HashSigParams, Self), AuditError> {
        let (frame, rest) = frame_decode(bytes).map_err(|_| DecodeError::Invalid("checkpoint frame"))?;
        if frame.msg_type != MsgType::Checkpoint {
            return Err(DecodeError::Invalid("checkpoint frame type").into());
        }
        if !rest.is_empty() {
            return Err(DecodeError::Trailing(rest.len()).into());
        }
        let mut r = Reader::new(&frame.payload);
        let root = r.digest()?;
        let tree_size = r.u64()?;
        let params = HashSigParams {
            h: u32::from(r.u8()?),
            w: u32::from(r.u8()?),
        };
        let signature = HashSigSignature::from_bytes(&params, r.var_bytes()?)
            .map_err(|_| DecodeError::Invalid("checkpoint signature"))?;
        r.finish()?;
        Ok((
            params,
            Self {
                root,
                tree_size,
                signature,
            },
        ))
    }
}

/// Serializes one log record as `u32 LE length || record`.
pub fn encode_log_record(record: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + record.len());
    put_var_bytes(&mut out, record);
    out
}

/// Parses a log stream written by [`encode_log_record`].
pub fn parse_log(bytes: &[u8]) -> Result<Vec<Vec<u8>>, AuditError> {
    let mut r = Reader::new(bytes);
    let mut records = Vec::new();
    while r.remaining() > 0 {
        records.push(r.var_bytes()?.to_vec());
    }
    Ok(records)
}
