//! Hybrid layer: secret combiner, dual signatures and mode negotiation.

use std::fmt;

use thiserror::Error;

use crate::codec::{DecodeError, Reader};
use crate::hashsig::{
    hsig_sign, hsig_verify, HashSigError, HashSigParams, HashSigPublicKey, HashSigSecretKey,
    HashSigSignature,
};
use crate::legacy::{legacy_sign, legacy_verify, LegacyPublicKey, LegacySecretKey, LegacySignature};
use crate::mq::{mq_sign, mq_verify, MqError, MqParams, MqPublicKey, MqSecretKey, MqSignature};
use crate::primitives::{
    frame_decode, frame_encode, kdf, Digest, MsgType, RandomSeed, SharedSecret, SymmetricKey,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HybridError {
    #[error("no mode supported by both sides")]
    NoCommonMode,
    #[error("missing {0} signing key for the requested mode")]
    MissingKey(&'static str),
    #[error("policy requires a {0} public key that was not provided")]
    PolicyUnsatisfiable(&'static str),
    #[error("MQ signing failed: {0}")]
    Mq(#[from] MqError),
    #[error("hash-based signing failed: {0}")]
    HashSig(#[from] HashSigError),
    #[error("malformed encoding: {0}")]
    Decode(#[from] DecodeError),
}

/// Key-exchange mode, ordered by preference (`Hybrid` is best).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    ClassicalOnly = 0,
    PqcOnly = 1,
    Hybrid = 2,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::ClassicalOnly, Mode::PqcOnly, Mode::Hybrid];

    pub fn from_u8(b: u8) -> Option<Mode> {
        Mode::ALL.get(b as usize).copied()
    }

    pub fn uses_classical(self) -> bool {
        self != Mode::PqcOnly
    }

    pub fn uses_pqc(self) -> bool {
        self != Mode::ClassicalOnly
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::ClassicalOnly => "classical",
            Mode::PqcOnly => "pqc",
            Mode::Hybrid => "hybrid",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        Mode::ALL.into_iter().find(|m| m.name() == s)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Set of modes, one bit per [`Mode`] discriminant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct ModeSet(u8);

impl ModeSet {
    pub const EMPTY: ModeSet = ModeSet(0);

    pub fn all() -> ModeSet {
        Mode::ALL.into_iter().collect()
    }

    pub fn contains(self, mode: Mode) -> bool {
        self.0 >> mode as u8 & 1 == 1
    }

    pub fn insert(&mut self, mode: Mode) {
        self.0 |= 1 << mode as u8;
    }

    pub fn intersection(self, other: ModeSet) -> ModeSet {
        ModeSet(self.0 & other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn best(self) -> Option<Mode> {
        Mode::ALL.into_iter().rev().find(|&m| self.contains(m))
    }

    pub fn iter(self) -> impl Iterator<Item = Mode> {
        Mode::ALL.into_iter().filter(move |&m| self.contains(m))
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn from_bits(bits: u8) -> Option<ModeSet> {
        (bits & !0b111 == 0).then_some(ModeSet(bits))
    }

    pub fn offers_classical(self) -> bool {
        self.contains(Mode::ClassicalOnly) || self.contains(Mode::Hybrid)
    }

    pub fn offers_pqc(self) -> bool {
        self.contains(Mode::PqcOnly) || self.contains(Mode::Hybrid)
    }
}

impl FromIterator<Mode> for ModeSet {
    fn from_iter<I: IntoIterator<Item = Mode>>(iter: I) -> Self {
        let mut set = ModeSet::EMPTY;
        for m in iter {
            set.insert(m);
        }
        set
    }
}

/// Highest-preference mode supported by both sides.
pub fn negotiate(client_modes: ModeSet, server_modes: ModeSet) -> Result<Mode, HybridError> {
    client_modes
        .intersection(server_modes)
        .best()
        .ok_or(HybridError::NoCommonMode)
}

/// `kdf("hybrid-master", [classical, pqc, transcript_hash])`.
pub fn combine_secrets(ss_classical: &SharedSecret, ss_pqc: &SharedSecret, transcript_hash: &Digest) -> SymmetricKey {
    kdf(b"hybrid-master", &[&ss_classical.0, &ss_pqc.0, &transcript_hash.0])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AuthPolicy {
    LegacyOnly,
    PqcOnly,
    BothRequired,
    Either,
}

impl AuthPolicy {
    pub const ALL: [AuthPolicy; 4] = [
        AuthPolicy::LegacyOnly,
        AuthPolicy::PqcOnly,
        AuthPolicy::BothRequired,
        AuthPolicy::Either,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AuthPolicy::LegacyOnly => "legacy",
            AuthPolicy::PqcOnly => "pqc",
            AuthPolicy::BothRequired => "both",
            AuthPolicy::Either => "either",
        }
    }

    pub fn parse(s: &str) -> Option<AuthPolicy> {
        AuthPolicy::ALL.into_iter().find(|p| p.name() == s)
    }

    fn requires_legacy(self) -> bool {
        matches!(self, AuthPolicy::LegacyOnly | AuthPolicy::BothRequired)
    }

    fn requires_pqc(self) -> bool {
        matches!(self, AuthPolicy::PqcOnly | AuthPolicy::BothRequired)
    }
}

pub enum PqcSecretKey {
    Mq(MqSecretKey),
    Hash(HashSigSecretKey),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PqcPublicKey {
    Mq(MqPublicKey),
    Hash(HashSigPublicKey),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PqcSignature {
    Mq(MqSignature),
    Hash(HashSigSignature),
}

impl PqcSecretKey {
    pub fn public_key(&self) -> PqcPublicKey {
        match self {
            PqcSecretKey::Mq(sk) => PqcPublicKey::Mq(sk.public_key()),
            PqcSecretKey::Hash(sk) => PqcPublicKey::Hash(sk.public_key()),
        }
    }
}

pub const TAG_LEGACY: u8 = 0b001;
pub const TAG_MQ: u8 = 0b010;
pub const TAG_HASH: u8 = 0b100;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DualSignature {
    pub legacy: Option<LegacySignature>,
    pub pqc: Option<PqcSignature>,
}

impl DualSignature {
    /// Which schemes signed; always consistent with the components present.
    pub fn scheme_tags(&self) -> u8 {
        let legacy = if self.legacy.is_some() { TAG_LEGACY } else { 0 };
        let pqc = match self.pqc {
            Some(PqcSignature::Mq(_)) => TAG_MQ,
            Some(PqcSignature::Hash(_)) => TAG_HASH,
            None => 0,
        };
        legacy | pqc
    }

    /// `tags || one frame per present component` (legacy first).
    pub fn to_bytes(&self, pks: &SignerPublicKeys) -> Vec<u8> {
        let mut out = vec![self.scheme_tags()];
        if let Some(sig) = &self.legacy {
            let pk = pks.legacy.as_ref().expect("legacy public key for encoding");
            out.extend(frame_encode(MsgType::SignaturePart, &sig.to_bytes(pk)).unwrap());
        }
        let pqc_bytes = match &self.pqc {
            Some(PqcSignature::Mq(sig)) => Some(sig.to_bytes()),
            Some(PqcSignature::Hash(sig)) => Some(sig.to_bytes()),
            None => None,
        };
        if let Some(bytes) = pqc_bytes {
            out.extend(frame_encode(MsgType::SignaturePart, &bytes).unwrap());
        }
        out
    }

    /// Strict decoding: component shapes come from the signer's keys, and
    /// nothing may follow the last component.
    pub fn from_bytes(bytes: &[u8], pks: &SignerPublicKeys) -> Result<Self, HybridError> {
        let (&tags, mut rest) = bytes.split_first().ok_or(DecodeError::UnexpectedEnd)?;
        if tags == 0 || tags & !(TAG_LEGACY | TAG_MQ | TAG_HASH) != 0 || tags & (TAG_MQ | TAG_HASH) == TAG_MQ | TAG_HASH {
            return Err(DecodeError::Invalid("signature tags").into());
        }
        let next_part = |rest: &mut &[u8]| -> Result<Vec<u8>, HybridError> {
            let (frame, tail) = frame_decode(rest).map_err(|_| DecodeError::Invalid("signature frame"))?;
            if frame.msg_type != MsgType::SignaturePart {
                return Err(DecodeError::Invalid("signature frame type").into());
            }
            *rest = tail;
            Ok(frame.payload)
        };
        let mut sig = DualSignature::default();
        if tags & TAG_LEGACY != 0 {
            let pk = pks.legacy.as_ref().ok_or(DecodeError::Invalid("legacy component without key"))?;
            let part = next_part(&mut rest)?;
            sig.legacy = Some(
                LegacySignature::from_bytes(pk, &part).map_err(|_| DecodeError::Invalid("legacy signature"))?,
            );
        }
        if tags & (TAG_MQ | TAG_HASH) != 0 {
            let part = next_part(&mut rest)?;
            sig.pqc = Some(match (tags & TAG_MQ != 0, &pks.pqc) {
                (true, Some(PqcPublicKey::Mq(pk))) => PqcSignature::Mq(
                    MqSignature::from_bytes(&pk.params, &part).map_err(|_| DecodeError::Invalid("MQ signature"))?,
                ),
                (false, Some(PqcPublicKey::Hash(pk))) => PqcSignature::Hash(
                    HashSigSignature::from_bytes(&pk.params, &part)
                        .map_err(|_| DecodeError::Invalid("hash signature"))?,
                ),
                _ => return Err(DecodeError::Invalid("pqc component does not match key").into()),
            });
        }
        if !rest.is_empty() {
            return Err(DecodeError::Trailing(rest.len()).into());
        }
        Ok(sig)
    }
}

#[derive(Default)]
pub struct SigningKeys {
    pub legacy: Option<LegacySecretKey>,
    pub pqc: Option<PqcSecretKey>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SignerPublicKeys {
    pub legacy: Option<LegacyPublicKey>,
    pub pqc: Option<PqcPublicKey>,
}

impl SigningKeys {
    pub fn public_keys(&self) -> SignerPublicKeys {
        SignerPublicKeys {
            legacy: self.legacy.as_ref().map(LegacySecretKey::public_key),
            pqc: self.pqc.as_ref().map(PqcSecretKey::public_key),
        }
    }

    /// The richest signing mode these keys support, if any.
    pub fn strongest_mode(&self) -> Option<Mode> {
        match (self.legacy.is_some(), self.pqc.is_some()) {
            (true, true) => Some(Mode::Hybrid),
            (false, true) => Some(Mode::PqcOnly),
            (true, false) => Some(Mode::ClassicalOnly),
            (false, false) => None,
        }
    }
}

/// Signs `msg` with the components `mode` calls for. A hash-based pqc key
/// consumes one one-time leaf.
pub fn dual_sign(keys: &mut SigningKeys, mode: Mode, msg: &[u8], seed: &RandomSeed) -> Result<DualSignature, HybridError> {
    if mode.uses_classical() && keys.legacy.is_none() {
        return Err(HybridError::MissingKey("legacy"));
    }
    if mode.uses_pqc() && keys.pqc.is_none() {
        return Err(HybridError::MissingKey("pqc"));
    }
    let mut sig = DualSignature::default();
    if mode.uses_pqc() {
        sig.pqc = Some(match keys.pqc.as_mut().unwrap() {
            PqcSecretKey::Mq(sk) => PqcSignature::Mq(mq_sign(sk, msg, &seed.derive(b"dual-mq"))?),
            PqcSecretKey::Hash(sk) => PqcSignature::Hash(hsig_sign(sk, msg)?),
        });
    }
    if mode.uses_classical() {
        sig.legacy = Some(legacy_sign(keys.legacy.as_ref().unwrap(), msg));
    }
    Ok(sig)
}

fn verify_pqc(pk: &PqcPublicKey, msg: &[u8], sig: &PqcSignature) -> bool {
    match (pk, sig) {
        (PqcPublicKey::Mq(pk), PqcSignature::Mq(sig)) => mq_verify(pk, msg, sig).unwrap_or(false),
        (PqcPublicKey::Hash(pk), PqcSignature::Hash(sig)) => hsig_verify(pk, msg, sig).unwrap_or(false),
        _ => false,
    }
}

/// Evaluates a dual signature under `policy`.
///
/// Components the policy requires must be present and valid. Any other
/// present component must also verify; a present but invalid component
/// always rejects. `Either` needs at least one verified component.
pub fn dual_verify(
    policy: AuthPolicy,
    pks: &SignerPublicKeys,
    msg: &[u8],
    sig: &DualSignature,
) -> Result<bool, HybridError> {
    if policy.requires_legacy() && pks.legacy.is_none() {
        return Err(HybridError::PolicyUnsatisfiable("legacy"));
    }
    if policy.requires_pqc() && pks.pqc.is_none() {
        return Err(HybridError::PolicyUnsatisfiable("pqc"));
    }
    if policy == AuthPolicy::Either && pks.legacy.is_none() && pks.pqc.is_none() {
        return Err(HybridError::PolicyUnsatisfiable("legacy or pqc"));
    }
    if (policy.requires_legacy() && sig.legacy.is_none()) || (policy.requires_pqc() && sig.pqc.is_none()) {
        return Ok(false);
    }
    let mut verified = 0;
    if let Some(legacy_sig) = &sig.legacy {
        match &pks.legacy {
            Some(pk) if legacy_verify(pk, msg, legacy_sig).unwrap_or(false) => verified += 1,
            Some(_) => return Ok(false),
            None => {}
        }
    }
    if let Some(pqc_sig) = &sig.pqc {
        match &pks.pqc {
            Some(pk) if verify_pqc(pk, msg, pqc_sig) => verified += 1,
            Some(_) => return Ok(false),
            None => {}
        }
    }
    Ok(verified > 0)
}

const PK_KIND_MQ: u8 = 1;
const PK_KIND_HASH: u8 = 2;

impl SignerPublicKeys {
    /// `tags || [u32 len || legacy pk] || [kind || params || u32 len || pqc pk]`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut tags = 0;
        let mut body = Vec::new();
        if let Some(pk) = &self.legacy {
            tags |= TAG_LEGACY;
            crate::codec::put_var_bytes(&mut body, &pk.to_bytes());
        }
        match &self.pqc {
            Some(PqcPublicKey::Mq(pk)) => {
                tags |= TAG_MQ;
                body.push(PK_KIND_MQ);
                for x in [pk.params.o as u16, pk.params.v as u16] {
                    body.extend_from_slice(&x.to_le_bytes());
                }
                body.extend_from_slice(&pk.params.q.to_le_bytes());
                crate::codec::put_var_bytes(&mut body, &pk.to_bytes());
            }
            Some(PqcPublicKey::Hash(pk)) => {
                tags |= TAG_HASH;
                body.push(PK_KIND_HASH);
                body.push(pk.params.h as u8);
                body.push(pk.params.w as u8);
                crate::codec::put_var_bytes(&mut body, &pk.to_bytes());
            }
            None => {}
        }
        let mut out = vec![tags];
        out.extend(body);
        out
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let tags = r.u8()?;
        if tags & !(TAG_LEGACY | TAG_MQ | TAG_HASH) != 0 {
            return Err(DecodeError::Invalid("public key tags"));
        }
        let mut keys = SignerPublicKeys::default();
        if tags & TAG_LEGACY != 0 {
            keys.legacy = Some(
                LegacyPublicKey::from_bytes(r.var_bytes()?).map_err(|_| DecodeError::Invalid("legacy public key"))?,
            );
        }
        if tags & (TAG_MQ | TAG_HASH) != 0 {
            let kind = r.u8()?;
            keys.pqc = Some(match kind {
                PK_KIND_MQ if tags & TAG_HASH == 0 => {
                    let params = MqParams {
                        o: r.u16()? as usize,
                        v: r.u16()? as usize,
                        q: r.u32()?,
                    };
                    PqcPublicKey::Mq(
                        MqPublicKey::from_bytes(params, r.var_bytes()?)
                            .map_err(|_| DecodeError::Invalid("MQ public key"))?,
                    )
                }
                PK_KIND_HASH if tags & TAG_MQ == 0 => {
                    let params = HashSigParams {
                        h: u32::from(r.u8()?),
                        w: u32::from(r.u8()?),
                    };
                    PqcPublicKey::Hash(
                        HashSigPublicKey::from_bytes(params, r.var_bytes()?)
                            .map_err(|_| DecodeError::Invalid("hash-signature public key"))?,
                    )
                }
                _ => return Err(DecodeError::Invalid("pqc key kind")),
            });
        }
        Ok(keys)
    }
}
