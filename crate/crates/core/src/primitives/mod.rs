//! Shared primitive substrate: hashing, key derivation, authenticated
//! encryption, seeded randomness and wire framing.
//!
//! * Hash: SHA-256 everywhere (signatures, Merkle trees, KDF, transcripts).
//! * KDF: `SHA-256(label || for each input: u32-LE length || input)`.
//! * AEAD: AES-256-GCM with 12-byte nonces and 16-byte tags.

mod aead;
mod frame;
mod packing;
mod rng;

use std::cell::Cell;
use std::fmt;

use sha2::{Digest as _, Sha256};

pub use aead::{aead_open, aead_seal, AeadError, TAG_LEN};
pub use frame::{frame_decode, frame_encode, Frame, FrameError, MsgType, FRAME_HEADER_LEN};
pub use packing::{bits_for_modulus, pack_coeffs, packed_len, unpack_coeffs, BitReader, BitWriter};
pub use rng::SeededRng;

pub const DIGEST_LEN: usize = 32;
pub const KEY_LEN: usize = 32;
pub const NONCE_LEN: usize = 12;
pub const SEED_LEN: usize = 32;

macro_rules! byte_newtype {
    ($(#[$meta:meta])* $name:ident, $len:expr) => {
        $(#[$meta])*
        #[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub [u8; $len]);

        impl $name {
            pub const LEN: usize = $len;

            pub fn as_bytes(&self) -> &[u8; $len] {
                &self.0
            }

            pub fn from_slice(bytes: &[u8]) -> Option<Self> {
                <[u8; $len]>::try_from(bytes).ok().map(Self)
            }

            pub fn to_hex(&self) -> String {
                self.0.iter().map(|b| format!("{b:02x}")).collect()
            }
        }

        impl AsRef<[u8]> for $name {
            fn as_ref(&self) -> &[u8] {
                &self.0
            }
        }

        impl From<[u8; $len]> for $name {
            fn from(bytes: [u8; $len]) -> Self {
                Self(bytes)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({})", stringify!($name), self.to_hex())
            }
        }
    };
}

byte_newtype!(
    /// 32-byte SHA-256 output.
    Digest,
    DIGEST_LEN
);
byte_newtype!(
    /// 256-bit symmetric key.
    SymmetricKey,
    KEY_LEN
);
byte_newtype!(
    /// 96-bit AEAD nonce.
    Nonce,
    NONCE_LEN
);
byte_newtype!(
    /// Explicit seed for every randomized operation.
    RandomSeed,
    SEED_LEN
);
byte_newtype!(
    /// 32-byte secret agreed by a KEM.
    SharedSecret,
    KEY_LEN
);

impl SharedSecret {
    /// The all-zero secret used for halves of a hybrid that were not negotiated.
    pub const ZERO: SharedSecret = SharedSecret([0u8; KEY_LEN]);
}

impl RandomSeed {
    /// Derives an independent child seed, domain separated by `label`.
    pub fn derive(&self, label: &[u8]) -> RandomSeed {
        RandomSeed(kdf(label, &[&self.0]).0)
    }

    pub fn derive_indexed(&self, label: &[u8], index: u64) -> RandomSeed {
        RandomSeed(kdf(label, &[&self.0, &index.to_le_bytes()]).0)
    }

    pub fn rng(&self) -> SeededRng {
        SeededRng::new(self)
    }
}

impl Nonce {
    /// `prefix || u64-LE sequence number`.
    pub fn from_parts(prefix: [u8; 4], sequence: u64) -> Nonce {
        let mut bytes = [0u8; NONCE_LEN];
        bytes[..4].copy_from_slice(&prefix);
        bytes[4..].copy_from_slice(&sequence.to_le_bytes());
        Nonce(bytes)
    }
}

thread_local! {
    static HASH_CALLS: Cell<u64> = const { Cell::new(0) };
}

/// Number of hash invocations performed on the current thread so far.
///
/// Used by the benchmark harness as a portable work metric.
pub fn hash_invocations() -> u64 {
    HASH_CALLS.with(Cell::get)
}

fn count_hash() {
    HASH_CALLS.with(|c| c.set(c.get() + 1));
}

pub fn hash(data: &[u8]) -> Digest {
    hash_parts(&[data])
}

/// Hash of the concatenation of `parts`, without materializing it.
pub fn hash_parts(parts: &[&[u8]]) -> Digest {
    count_hash();
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update(part);
    }
    Digest(hasher.finalize().into())
}

/// Length-prefixed, label-separated key derivation.
///
/// # Panics
///
/// Panics if `label` is empty or an input exceeds `u32::MAX` bytes.
pub fn kdf(label: &[u8], inputs: &[&[u8]]) -> SymmetricKey {
    assert!(!label.is_empty(), "kdf label must be non-empty");
    count_hash();
    let mut hasher = Sha256::new();
    hasher.update(label);
    for input in inputs {
        let len = u32::try_from(input.len()).expect("kdf input longer than u32::MAX");
        hasher.update(len.to_le_bytes());
        hasher.update(input);
    }
    SymmetricKey(hasher.finalize().into())
}

/// Running transcript hash over every handshake frame, in order.
#[derive(Clone)]
pub struct Transcript {
    hasher: Sha256,
}

impl Default for Transcript {
    fn default() -> Self {
        Self::new()
    }
}

impl Transcript {
    pub fn new() -> Self {
        let mut hasher = Sha256::new();
        hasher.update(b"pqhs-transcript");
        Self { hasher }
    }

    pub fn absorb(&mut self, frame_bytes: &[u8]) {
        let len = frame_bytes.len() as u64;
        self.hasher.update(len.to_le_bytes());
        self.hasher.update(frame_bytes);
    }

    pub fn digest(&self) -> Digest {
        count_hash();
        Digest(self.hasher.clone().finalize().into())
    }
}
