//! Scheme-agnostic key handling and the suite key-file format.
//!
//! ```text
//! "PQHS" | version 0x01 | scheme id | role (1 public, 2 secret)
//!        | u16 LE param-set id | u32 LE payload length | payload
//! ```
//!
//! | scheme | id | param sets                                        |
//! |--------|----|---------------------------------------------------|
//! | lattice| 1  | 1 desk-512, 2 desk-small, 3 tiny                  |
//! | code   | 2  | 1 desk-code, 2 paper-shape, 3 hamming-7-4         |
//! | mq     | 3  | 1 desk-uov, 2 tiny                                |
//! | hsig   | 4  | 1 desk, 2 small, 3 h1                             |
//! | legacy | 5  | 1 rsa-2048, 2 rsa-3072, 3 rsa-1024, 4 rsa-512     |

use std::fmt;

use thiserror::Error;

use crate::code::{
    code_decaps, code_encaps, code_keygen, code_keygen_with_generator, hamming_7_4_generator, CodeCiphertext, CodeParams,
    CodePublicKey, CodeSecretKey,
};
use crate::codec::{DecodeError, Reader};
use crate::hashsig::{hsig_keygen, hsig_sign, hsig_verify, HashSigParams, HashSigPublicKey, HashSigSecretKey, HashSigSignature};
use crate::lattice::{lwe_decaps, lwe_encaps, lwe_keygen, LatticeCiphertext, LatticeParams, LatticePublicKey, LatticeSecretKey};
use crate::legacy::{
    legacy_decaps, legacy_encaps, legacy_keygen, legacy_sign, legacy_verify, LegacyCiphertext, LegacyParams,
    LegacyPublicKey, LegacySecretKey, LegacySignature,
};
use crate::mq::{mq_keygen, mq_sign, mq_verify, MqParams, MqPublicKey, MqSecretKey, MqSignature};
use crate::primitives::{RandomSeed, SharedSecret};

pub const MAGIC: &[u8; 4] = b"PQHS";
pub const VERSION: u8 = 0x01;
pub const HEADER_LEN: usize = 4 + 1 + 1 + 1 + 2 + 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KeyError {
    #[error("unknown scheme {0}")]
    UnknownScheme(String),
    #[error("unknown parameter set {0}")]
    UnknownParams(String),
    #[error("bad key file: {0}")]
    BadFile(&'static str),
    #[error("expected a {expected} key, found {found}")]
    WrongRole { expected: KeyRole, found: KeyRole },
    #[error("{scheme} does not support {operation}")]
    Unsupported { scheme: Scheme, operation: &'static str },
    #[error("{0}")]
    Scheme(String),
    #[error("malformed encoding: {0}")]
    Decode(#[from] DecodeError),
}

fn scheme_err<E: fmt::Display>(e: E) -> KeyError {
    KeyError::Scheme(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Lattice = 1,
    Code = 2,
    Mq = 3,
    HashSig = 4,
    Legacy = 5,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [Scheme::Lattice, Scheme::Code, Scheme::Mq, Scheme::HashSig, Scheme::Legacy];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Lattice => "lattice",
            Scheme::Code => "code",
            Scheme::Mq => "mq",
            Scheme::HashSig => "hsig",
            Scheme::Legacy => "legacy",
        }
    }

    pub fn parse(s: &str) -> Result<Scheme, KeyError> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| KeyError::UnknownScheme(s.to_string()))
    }

    pub fn from_id(id: u8) -> Option<Scheme> {
        Scheme::ALL.into_iter().find(|s| *s as u8 == id)
    }

    pub fn is_kem(self) -> bool {
        matches!(self, Scheme::Lattice | Scheme::Code | Scheme::Legacy)
    }

    pub fn is_signature(self) -> bool {
        matches!(self, Scheme::Mq | Scheme::HashSig | Scheme::Legacy)
    }

    /// Parameter set used when none is named.
    pub fn default_params(self) -> ParamSet {
        ParamSet::from_id(self, 1).expect("id 1 registered for every scheme")
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyRole {
    Public = 1,
    Secret = 2,
}

impl fmt::Display for KeyRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KeyRole::Public => "public",
            KeyRole::Secret => "secret",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamSet {
    Lattice(LatticeParams),
    Code(CodeParams),
    Mq(MqParams),
    HashSig(HashSigParams),
    Legacy(LegacyParams),
}

const REGISTRY: &[(Scheme, u16, &str, ParamSet)] = &[
    (Scheme::Lattice, 1, "desk-512", ParamSet::Lattice(LatticeParams::DESK_512)),
    (Scheme::Lattice, 2, "desk-small", ParamSet::Lattice(LatticeParams::DESK_SMALL)),
    (Scheme::Lattice, 3, "tiny", ParamSet::Lattice(LatticeParams::TINY)),
    (Scheme::Code, 1, "desk-code", ParamSet::Code(CodeParams::DESK)),
    (Scheme::Code, 2, "paper-shape", ParamSet::Code(CodeParams::PAPER_SHAPE)),
    (Scheme::Code, 3, "hamming-7-4", ParamSet::Code(CodeParams::HAMMING_7_4)),
    (Scheme::Mq, 1, "desk-uov", ParamSet::Mq(MqParams::DESK)),
    (Scheme::Mq, 2, "tiny", ParamSet::Mq(MqParams::TINY)),
    (Scheme::HashSig, 1, "desk", ParamSet::HashSig(HashSigParams::DESK)),
    (Scheme::HashSig, 2, "small", ParamSet::HashSig(HashSigParams::SMALL)),
    (Scheme::HashSig, 3, "h1", ParamSet::HashSig(HashSigParams { h: 1, w: 4 })),
    (Scheme::Legacy, 1, "rsa-2048", ParamSet::Legacy(LegacyParams::RSA_2048)),
    (Scheme::Legacy, 2, "rsa-3072", ParamSet::Legacy(LegacyParams::RSA_3072)),
    (Scheme::Legacy, 3, "rsa-1024", ParamSet::Legacy(LegacyParams::RSA_1024)),
    (Scheme::Legacy, 4, "rsa-512", ParamSet::Legacy(LegacyParams::RSA_512)),
];

impl ParamSet {
    pub fn scheme(&self) -> Scheme {
        match self {
            ParamSet::Lattice(_) => Scheme::Lattice,
            ParamSet::Code(_) => Scheme::Code,
            ParamSet::Mq(_) => Scheme::Mq,
            ParamSet::HashSig(_) => Scheme::HashSig,
            ParamSet::Legacy(_) => Scheme::Legacy,
        }
    }

    fn entry(&self) -> &'static (Scheme, u16, &'static str, ParamSet) {
        REGISTRY
            .iter()
            .find(|e| e.3 == *self)
            .expect("only registered parameter sets are constructed through this module")
    }

    pub fn id(&self) -> u16 {
        self.entry().1
    }

    pub fn name(&self) -> &'static str {
        self.entry().2
    }

    pub fn is_registered(&self) -> bool {
        REGISTRY.iter().any(|e| e.3 == *self)
    }

    pub fn from_id(scheme: Scheme, id: u16) -> Option<ParamSet> {
        REGISTRY.iter().find(|e| e.0 == scheme && e.1 == id).map(|e| e.3)
    }

    pub fn parse(scheme: Scheme, name: &str) -> Result<ParamSet, KeyError> {
        REGISTRY
            .iter()
            .find(|e| e.0 == scheme && e.2 == name)
            .map(|e| e.3)
            .ok_or_else(|| KeyError::UnknownParams(format!("{scheme}/{name}")))
    }

    pub fn names(scheme: Scheme) -> Vec<&'static str> {
        REGISTRY.iter().filter(|e| e.0 == scheme).map(|e| e.2).collect()
    }
}

/// Parsed key-file envelope.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyFile {
    pub scheme: Scheme,
    pub role: KeyRole,
    pub param_id: u16,
    pub payload: Vec<u8>,
}

impl KeyFile {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(self.scheme as u8);
        out.push(self.role as u8);
        out.extend_from_slice(&self.param_id.to_le_bytes());
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, KeyError> {
        let mut r = Reader::new(bytes);
        if r.take(4)? != MAGIC {
            return Err(KeyError::BadFile("magic"));
        }
        if r.u8()? != VERSION {
            return Err(KeyError::BadFile("version"));
        }
        let scheme = Scheme::from_id(r.u8()?).ok_or(KeyError::BadFile("scheme id"))?;
        let role = match r.u8()? {
            1 => KeyRole::Public,
            2 => KeyRole::Secret,
            _ => return Err(KeyError::BadFile("role")),
        };
        let param_id = r.u16()?;
        let payload = r.var_bytes()?.to_vec();
        r.finish()?;
        Ok(Self {
            scheme,
            role,
            param_id,
            payload,
        })
    }

    pub fn params(&self) -> Result<ParamSet, KeyError> {
        ParamSet::from_id(self.scheme, self.param_id).ok_or(KeyError::BadFile("parameter-set id"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnyPublicKey {
    Lattice(LatticePublicKey),
    Code(CodePublicKey),
    Mq(MqPublicKey),
    HashSig(HashSigPublicKey),
    Legacy(LegacyPublicKey),
}

pub enum AnySecretKey {
    Lattice(LatticeSecretKey),
    Code(CodeSecretKey),
    Mq(MqSecretKey),
    HashSig(HashSigSecretKey),
    Legacy(LegacySecretKey),
}

pub fn keygen(params: ParamSet, seed: &RandomSeed) -> Result<(AnyPublicKey, AnySecretKey), KeyError> {
    Ok(match params {
        ParamSet::Lattice(p) => {
            let (pk, sk) = lwe_keygen(p, seed).map_err(scheme_err)?;
            (AnyPublicKey::Lattice(pk), AnySecretKey::Lattice(sk))
        }
        ParamSet::Code(p) => {
            let (pk, sk) = if p == CodeParams::HAMMING_7_4 {
                code_keygen_with_generator(p, hamming_7_4_generator(), seed)
            } else {
                code_keygen(p, seed)
            }
            .map_err(scheme_err)?;
            (AnyPublicKey::Code(pk), AnySecretKey::Code(sk))
        }
        ParamSet::Mq(p) => {
            let (pk, sk) = mq_keygen(p, seed).map_err(scheme_err)?;
            (AnyPublicKey::Mq(pk), AnySecretKey::Mq(sk))
        }
        ParamSet::HashSig(p) => {
            let (pk, sk) = hsig_keygen(p, seed).map_err(scheme_err)?;
            (AnyPublicKey::HashSig(pk), AnySecretKey::HashSig(sk))
        }
        ParamSet::Legacy(p) => {
            let (pk, sk) = legacy_keygen(p, seed).map_err(scheme_err)?;
            (AnyPublicKey::Legacy(pk), AnySecretKey::Legacy(sk))
        }
    })
}

impl AnyPublicKey {
    pub fn params(&self) -> ParamSet {
        match self {
            AnyPublicKey::Lattice(k) => ParamSet::Lattice(k.params),
            AnyPublicKey::Code(k) => ParamSet::Code(k.params),
            AnyPublicKey::Mq(k) => ParamSet::Mq(k.params),
            AnyPublicKey::HashSig(k) => ParamSet::HashSig(k.params),
            AnyPublicKey::Legacy(k) => ParamSet::Legacy(LegacyParams {
                modulus_bits: k.n.bits() as u32,
            }),
        }
    }

    pub fn scheme(&self) -> Scheme {
        self.params().scheme()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        match self {
            AnyPublicKey::Lattice(k) => k.to_bytes(),
            AnyPublicKey::Code(k) => k.to_bytes(),
            AnyPublicKey::Mq(k) => k.to_bytes(),
            AnyPublicKey::HashSig(k) => k.to_bytes(),
            AnyPublicKey::Legacy(k) => k.to_bytes(),
        }
    }

    pub fn from_bytes(params: ParamSet, bytes: &[u8]) -> Result<Self, KeyError> {
        Ok(match params {
            ParamSet::Lattice(p) => AnyPublicKey::Lattice(LatticePublicKey::from_bytes(p, bytes).map_err(scheme_err)?),
            ParamSet::Code(p) => AnyPublicKey::Code(CodePublicKey::from_bytes(p, bytes).map_err(scheme_err)?),
            ParamSet::Mq(p) => AnyPublicKey::Mq(MqPublicKey::from_bytes(p, bytes).map_err(scheme_err)?),
            ParamSet::HashSig(p) => AnyPublicKey::HashSig(HashSigPublicKey::from_bytes(p, bytes).map_err(scheme_err)?),
            ParamSet::Legacy(p) => {
                let pk = LegacyPublicKey::from_bytes(bytes).map_err(scheme_err)?;
                if pk.n.bits() != u64::from(p.modulus_bits) {
                    return Err(KeyError::BadFile("modulus size does not match parameter set"));
                }
                AnyPublicKey::Legacy(pk)
            }
        })
    }

    pub fn to_file_bytes(&self) -> Vec<u8> {
        KeyFile {
            scheme: self.scheme(),
            role: KeyRole::Public,
            param_id: self.params().id(),
            payload: self.to_bytes(),
        }
        .encode()
    }

    pub fn from_file_bytes(bytes: &[u8]) -> Result<Self, KeyError> {
        let file = KeyFile::decode(bytes)?;
        if file.role != KeyRole::Public {
            return Err(KeyError::WrongRole {
                expected: KeyRole::Public,
                found: file.role,
            });
        }
        Self::from_bytes(file.params()?, &file.payload)
    }

    /// Encapsulates to this key; returns `(ciphertext bytes, shared secret)`.
    pub fn encaps(&self, seed: &RandomSeed) -> Result<(Vec<u8>, SharedSecret), KeyError> {
        Ok(match self {
            AnyPublicKey::Lattice(pk) => {
                let (ct, ss) = lwe_encaps(pk, seed);
                (ct.to_bytes(&pk.params), ss)
            }
            AnyPublicKey::Code(pk) => {
                let (ct, ss) = code_encaps(pk, seed);
                (ct.to_bytes(&pk.params), ss)
            }
            AnyPublicKey::Legacy(pk) => {
                let (ct, ss) = legacy_encaps(pk, seed);
                (ct.to_bytes(pk), ss)
            }
            _ => {
                return Err(KeyError::Unsupported {
                    scheme: self.scheme(),
                    operation: "encaps",
                })
            }
        })
    }

    /// Verifies a serialized signature. Malformed signatures are rejected
    /// rather than reported as errors.
    pub fn verify(&self, msg: &[u8], sig: &[u8]) -> Result<bool, KeyError> {
        Ok(match self {
            AnyPublicKey::Mq(pk) => MqSignature::from_bytes(&pk.params, sig)
                .ok()
                .is_some_and(|s| mq_verify(pk, msg, &s).unwrap_or(false)),
            AnyPublicKey::HashSig(pk) => HashSigSignature::from_bytes(&pk.params, sig)
                .ok()
                .is_some_and(|s| hsig_verify(pk, msg, &s).unwrap_or(false)),
            AnyPublicKey::Legacy(pk) => LegacySignature::from_bytes(pk, sig)
                .ok()
                .is_some_and(|s| legacy_verify(pk, msg, &s).unwrap_or(false)),
            _ => {
                return Err(KeyError::Unsupported {
                    scheme: self.scheme(),
                    operation: "verify",
                })
            }
        })
    }
}

impl AnySecretKey {
    pub fn params(&self) -> ParamSet {
        match self {
            AnySecretKey::Lattice(k) => ParamSet::Lattice(k.params),
            AnySecretKey::Code(k) => ParamSet::Code(k.params),
            AnySecretKey::Mq(k) => ParamSet::Mq(k.params),
            AnySecretKey::HashSig(k) => ParamSet::HashSig(k.public_key().params),
            AnySecretKey::Legacy(k) => ParamSet::Legacy(LegacyParams {
                modulus_bits: k.public_key().n.bits() as u32,
            }),
        }
    }

    pub fn scheme(&self) -> Scheme {
        self.params().scheme()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        match self {
            AnySecretKey::Lattice(k) => k.to_bytes(),
            AnySecretKey::Code(k) => k.to_bytes(),
            AnySecretKey::Mq(k) => k.to_bytes(),
            AnySecretKey::HashSig(k) => k.to_bytes(),
            AnySecretKey::Legacy(k) => k.to_bytes(),
        }
    }

    pub fn from_bytes(params: ParamSet, bytes: &[u8]) -> Result<Self, KeyError> {
        Ok(match params {
            ParamSet::Lattice(p) => AnySecretKey::Lattice(LatticeSecretKey::from_bytes(p, bytes).map_err(scheme_err)?),
            ParamSet::Code(p) => AnySecretKey::Code(CodeSecretKey::from_bytes(p, bytes).map_err(scheme_err)?),
            ParamSet::Mq(p) => AnySecretKey::Mq(MqSecretKey::from_bytes(p, bytes).map_err(scheme_err)?),
            ParamSet::HashSig(p) => AnySecretKey::HashSig(HashSigSecretKey::from_bytes(p, bytes).map_err(scheme_err)?),
            ParamSet::Legacy(p) => {
                let sk = LegacySecretKey::from_bytes(bytes).map_err(scheme_err)?;
                if sk.public_key().n.bits() != u64::from(p.modulus_bits) {
                    return Err(KeyError::BadFile("modulus size does not match parameter set"));
                }
                AnySecretKey::Legacy(sk)
            }
        })
    }

    pub fn to_file_bytes(&self) -> Vec<u8> {
        KeyFile {
            scheme: self.scheme(),
            role: KeyRole::Secret,
            param_id: self.params().id(),
            payload: self.to_bytes(),
        }
        .encode()
    }

    pub fn from_file_bytes(bytes: &[u8]) -> Result<Self, KeyError> {
        let file = KeyFile::decode(bytes)?;
        if file.role != KeyRole::Secret {
            return Err(KeyError::WrongRole {
                expected: KeyRole::Secret,
                found: file.role,
            });
        }
        Self::from_bytes(file.params()?, &file.payload)
    }

    /// Public half, when the secret key carries enough to rebuild it. Lattice
    /// secret keys keep only a digest of their public key.
    pub fn public_key(&self) -> Option<AnyPublicKey> {
        Some(match self {
            AnySecretKey::Lattice(_) => return None,
            AnySecretKey::Code(k) => AnyPublicKey::Code(k.public_key()),
            AnySecretKey::Mq(k) => AnyPublicKey::Mq(k.public_key()),
            AnySecretKey::HashSig(k) => AnyPublicKey::HashSig(k.public_key()),
            AnySecretKey::Legacy(k) => AnyPublicKey::Legacy(k.public_key()),
        })
    }

    pub fn decaps(&self, ct: &[u8]) -> Result<SharedSecret, KeyError> {
        match self {
            AnySecretKey::Lattice(sk) => {
                let ct = LatticeCiphertext::from_bytes(&sk.params, ct).map_err(scheme_err)?;
                lwe_decaps(sk, &ct).map_err(scheme_err)
            }
            AnySecretKey::Code(sk) => {
                let ct = CodeCiphertext::from_bytes(&sk.params, ct).map_err(scheme_err)?;
                code_decaps(sk, &ct).map_err(scheme_err)
            }
            AnySecretKey::Legacy(sk) => {
                let ct = LegacyCiphertext::from_bytes(&sk.public_key(), ct).map_err(scheme_err)?;
                legacy_decaps(sk, &ct).map_err(scheme_err)
            }
            _ => Err(KeyError::Unsupported {
                scheme: self.scheme(),
                operation: "decaps",
            }),
        }
    }

    /// Signs `msg`. A hash-signature key advances its leaf index, so callers
    /// must persist the key again afterwards.
    pub fn sign(&mut self, msg: &[u8], seed: &RandomSeed) -> Result<Vec<u8>, KeyError> {
        match self {
            AnySecretKey::Mq(sk) => Ok(mq_sign(sk, msg, seed).map_err(scheme_err)?.to_bytes()),
            AnySecretKey::HashSig(sk) => Ok(hsig_sign(sk, msg).map_err(scheme_err)?.to_bytes()),
            AnySecretKey::Legacy(sk) => Ok(legacy_sign(sk, msg).to_bytes(&sk.public_key())),
            _ => Err(KeyError::Unsupported {
                scheme: self.scheme(),
                operation: "sign",
            }),
        }
    }
}
