//! Three-flight hybrid handshake and record layer.
//!
//! ```text
//! client                                   server
//!   ClientHello  ------------------------->   (random, modes, ephemeral pks)
//!                <-------------------------  ServerHello (random, modes, chosen
//!                                              mode, ciphertexts, signer pks,
//!                                              dual signature)
//!   Finish       ------------------------->
//! ```
//!
//! Only the server authenticates. The dual signature covers the transcript
//! hash over the ClientHello frame and every ServerHello field before the
//! signature, so the server's offered mode list is signed and a forced
//! downgrade is detectable by the client.
//!
//! Abort frames (type 255) carry a one-byte [`AbortReason`].

use thiserror::Error;

use crate::code::{code_encaps, code_decaps, code_keygen, CodeCiphertext, CodeParams, CodePublicKey, CodeSecretKey};
use crate::codec::{put_var_bytes, DecodeError, Reader};
use crate::hybrid::{
    combine_secrets, dual_sign, dual_verify, negotiate, AuthPolicy, DualSignature, HybridError, Mode, ModeSet,
    SignerPublicKeys, SigningKeys,
};
use crate::lattice::{lwe_decaps, lwe_encaps, lwe_keygen, LatticeCiphertext, LatticeParams, LatticePublicKey, LatticeSecretKey};
use crate::legacy::{legacy_decaps, legacy_encaps, legacy_keygen, LegacyCiphertext, LegacyParams, LegacyPublicKey, LegacySecretKey};
use crate::primitives::{
    aead_open, aead_seal, frame_decode, frame_encode, hash, kdf, Digest, MsgType, Nonce, RandomSeed, SharedSecret,
    SymmetricKey, Transcript,
};

pub const RANDOM_LEN: usize = 32;
pub const FINISH_LEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbortReason {
    NoCommonMode = 1,
    ParseError = 2,
    AuthFailure = 3,
    DecapsFailure = 4,
    DowngradeDetected = 5,
    FinishMismatch = 6,
    InternalError = 7,
}

impl AbortReason {
    pub fn from_u8(b: u8) -> Option<AbortReason> {
        use AbortReason::*;
        [NoCommonMode, ParseError, AuthFailure, DecapsFailure, DowngradeDetected, FinishMismatch, InternalError]
            .into_iter()
            .find(|r| *r as u8 == b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HandshakeError {
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error("operation not valid in phase {0:?}")]
    WrongPhase(Phase),
    #[error("no mode supported by both sides")]
    NoCommonMode,
    #[error("malformed frame: {0}")]
    ParseError(String),
    #[error("server authentication failed")]
    AuthFailure,
    #[error("decapsulation failed")]
    DecapsFailure,
    #[error("signed mode differs from the best common mode")]
    DowngradeDetected,
    #[error("finish value mismatch")]
    FinishMismatch,
    #[error("peer aborted: {0:?}")]
    Aborted(AbortReason),
    #[error("peer aborted with unknown reason {0}")]
    AbortedUnknown(u8),
    #[error("internal error: {0}")]
    Internal(String),
}

impl HandshakeError {
    /// Reason code to report to the peer, if this error warrants an abort frame.
    pub fn abort_reason(&self) -> Option<AbortReason> {
        Some(match self {
            HandshakeError::NoCommonMode => AbortReason::NoCommonMode,
            HandshakeError::ParseError(_) => AbortReason::ParseError,
            HandshakeError::AuthFailure => AbortReason::AuthFailure,
            HandshakeError::DecapsFailure => AbortReason::DecapsFailure,
            HandshakeError::DowngradeDetected => AbortReason::DowngradeDetected,
            HandshakeError::FinishMismatch => AbortReason::FinishMismatch,
            HandshakeError::Internal(_) => AbortReason::InternalError,
            HandshakeError::Config(_)
            | HandshakeError::WrongPhase(_)
            | HandshakeError::Aborted(_)
            | HandshakeError::AbortedUnknown(_) => return None,
        })
    }

    pub fn abort_frame(&self) -> Option<Vec<u8>> {
        self.abort_reason().map(abort_frame)
    }
}

impl From<DecodeError> for HandshakeError {
    fn from(e: DecodeError) -> Self {
        HandshakeError::ParseError(e.to_string())
    }
}

pub fn abort_frame(reason: AbortReason) -> Vec<u8> {
    frame_encode(MsgType::Abort, &[reason as u8]).expect("one-byte payload")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Client,
    Server,
}

/// Post-quantum KEM used for the ephemeral exchange.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PqcKem {
    Lattice(LatticeParams),
    Code(CodeParams),
}

const KEM_LATTICE: u8 = 1;
const KEM_CODE: u8 = 2;

pub struct HandshakeConfig {
    pub role: Role,
    pub modes: ModeSet,
    pub policy: AuthPolicy,
    /// Server static signing keys; unused by clients.
    pub signing_keys: SigningKeys,
    /// Client-side pin of the expected server keys. Without a pin the client
    /// trusts whichever keys the server presents.
    pub pinned_server_keys: Option<SignerPublicKeys>,
    pub pqc_kem: PqcKem,
    pub legacy: LegacyParams,
    /// Test hook: server ignores negotiation and selects this mode.
    #[doc(hidden)]
    pub forced_mode: Option<Mode>,
}

impl HandshakeConfig {
    pub fn client(modes: ModeSet, policy: AuthPolicy) -> Self {
        Self {
            role: Role::Client,
            modes,
            policy,
            signing_keys: SigningKeys::default(),
            pinned_server_keys: None,
            pqc_kem: PqcKem::Lattice(LatticeParams::DESK_512),
            legacy: LegacyParams::RSA_2048,
            forced_mode: None,
        }
    }

    pub fn server(modes: ModeSet, signing_keys: SigningKeys) -> Self {
        Self {
            role: Role::Server,
            modes,
            policy: AuthPolicy::Either,
            signing_keys,
            pinned_server_keys: None,
            pqc_kem: PqcKem::Lattice(LatticeParams::DESK_512),
            legacy: LegacyParams::RSA_2048,
            forced_mode: None,
        }
    }

    pub fn with_pqc_kem(mut self, kem: PqcKem) -> Self {
        self.pqc_kem = kem;
        self
    }

    pub fn with_legacy(mut self, params: LegacyParams) -> Self {
        self.legacy = params;
        self
    }

    pub fn with_pinned_server_keys(mut self, keys: SignerPublicKeys) -> Self {
        self.pinned_server_keys = Some(keys);
        self
    }

    pub fn validate(&self) -> Result<(), HandshakeError> {
        if self.modes.is_empty() {
            return Err(HandshakeError::Config("empty mode set"));
        }
        if self.role == Role::Server && self.signing_keys.strongest_mode().is_none() {
            return Err(HandshakeError::Config("server holds no signing key"));
        }
        match self.pqc_kem {
            PqcKem::Lattice(p) => p.validate().map_err(|_| HandshakeError::Config("lattice parameters"))?,
            PqcKem::Code(p) => p.validate().map_err(|_| HandshakeError::Config("code parameters"))?,
        }
        self.legacy
            .validate()
            .map_err(|_| HandshakeError::Config("legacy parameters"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    AwaitHello,
    AwaitResponse,
    AwaitFinish,
    Established,
    Failed,
}

#[derive(Clone)]
enum PqcEphemeralSecret {
    Lattice(LatticeSecretKey),
    Code(CodeSecretKey),
}

enum PqcEphemeralPublic {
    Lattice(LatticePublicKey),
    Code(CodePublicKey),
}

#[derive(Clone)]
pub struct HandshakeState {
    pub role: Role,
    pub phase: Phase,
    transcript: Transcript,
    pub negotiated: Option<Mode>,
    client_modes: ModeSet,
    policy: AuthPolicy,
    pinned: Option<SignerPublicKeys>,
    legacy_secret: Option<LegacySecretKey>,
    pqc_secret: Option<PqcEphemeralSecret>,
    master: Option<SymmetricKey>,
}

impl HandshakeState {
    pub fn transcript_hash(&self) -> Digest {
        self.transcript.digest()
    }

    /// Master secret, available once the key exchange has completed locally.
    pub fn master_secret(&self) -> Option<&SymmetricKey> {
        self.master.as_ref()
    }

    fn fresh(role: Role, phase: Phase) -> Self {
        Self {
            role,
            phase,
            transcript: Transcript::new(),
            negotiated: None,
            client_modes: ModeSet::EMPTY,
            policy: AuthPolicy::Either,
            pinned: None,
            legacy_secret: None,
            pqc_secret: None,
            master: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    ClientToServer,
    ServerToClient,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordError {
    #[error("record authentication failed")]
    AuthenticationFailure,
    #[error("record sequence {got} does not match expected {expected}")]
    ReplayOrReorder { expected: u64, got: u64 },
    #[error("malformed record")]
    Malformed,
    #[error("sequence counter exhausted")]
    SequenceExhausted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionKeys {
    pub client_to_server: SymmetricKey,
    pub server_to_client: SymmetricKey,
    pub send_seq: u64,
    pub recv_seq: u64,
}

impl SessionKeys {
    pub fn from_master(master: &SymmetricKey) -> Self {
        Self {
            client_to_server: kdf(b"c2s", &[&master.0]),
            server_to_client: kdf(b"s2c", &[&master.0]),
            send_seq: 0,
            recv_seq: 0,
        }
    }

    /// Digest identifying the key pair, safe to print.
    pub fn digest(&self) -> Digest {
        hash(&[self.client_to_server.0, self.server_to_client.0].concat())
    }

    fn key(&self, direction: Direction) -> &SymmetricKey {
        match direction {
            Direction::ClientToServer => &self.client_to_server,
            Direction::ServerToClient => &self.server_to_client,
        }
    }
}

fn nonce_prefix(direction: Direction) -> [u8; 4] {
    match direction {
        Direction::ClientToServer => *b"c2s\0",
        Direction::ServerToClient => *b"s2c\0",
    }
}

/// Seals one record: `Record` frame carrying `8-byte LE seq || ct || tag`.
pub fn session_seal(keys: &mut SessionKeys, direction: Direction, aad: &[u8], plaintext: &[u8]) -> Result<Vec<u8>, RecordError> {
    let seq = keys.send_seq;
    let next = seq.checked_add(1).ok_or(RecordError::SequenceExhausted)?;
    let nonce = Nonce::from_parts(nonce_prefix(direction), seq);
    let mut payload = seq.to_le_bytes().to_vec();
    payload.extend(aead_seal(keys.key(direction), &nonce, aad, plaintext));
    keys.send_seq = next;
    frame_encode(MsgType::Record, &payload).map_err(|_| RecordError::Malformed)
}

/// Opens the next in-order record; any other sequence number is rejected.
pub fn session_open(keys: &mut SessionKeys, direction: Direction, aad: &[u8], record: &[u8]) -> Result<Vec<u8>, RecordError> {
    let (frame, rest) = frame_decode(record).map_err(|_| RecordError::Malformed)?;
    if frame.msg_type != MsgType::Record || !rest.is_empty() || frame.payload.len() < 8 {
        return Err(RecordError::Malformed);
    }
    let got = u64::from_le_bytes(frame.payload[..8].try_into().unwrap());
    if got != keys.recv_seq {
        return Err(RecordError::ReplayOrReorder {
            expected: keys.recv_seq,
            got,
        });
    }
    let nonce = Nonce::from_parts(nonce_prefix(direction), got);
    let pt = aead_open(keys.key(direction), &nonce, aad, &frame.payload[8..])
        .map_err(|_| RecordError::AuthenticationFailure)?;
    keys.recv_seq = keys.recv_seq.checked_add(1).ok_or(RecordError::SequenceExhausted)?;
    Ok(pt)
}

fn check_role(config: &HandshakeConfig, role: Role) -> Result<(), HandshakeError> {
    if config.role != role {
        return Err(HandshakeError::Config("wrong role for this operation"));
    }
    config.validate()
}

fn internal<E: std::fmt::Display>(e: E) -> HandshakeError {
    HandshakeError::Internal(e.to_string())
}

fn put_u16(out: &mut Vec<u8>, x: usize) {
    out.extend_from_slice(&(x as u16).to_le_bytes());
}

fn write_kem_public(out: &mut Vec<u8>, pk: &PqcEphemeralPublic) {
    match pk {
        PqcEphemeralPublic::Lattice(pk) => {
            let p = pk.params;
            out.push(KEM_LATTICE);
            put_u16(out, p.n);
            put_u16(out, p.m);
            out.extend_from_slice(&p.q.to_le_bytes());
            out.extend_from_slice(&p.eta.to_le_bytes());
            put_u16(out, p.ell);
            put_var_bytes(out, &pk.to_bytes());
        }
        PqcEphemeralPublic::Code(pk) => {
            let p = pk.params;
            out.push(KEM_CODE);
            out.extend_from_slice(&[p.n as u8, p.k as u8, p.t as u8]);
            put_var_bytes(out, &pk.to_bytes());
        }
    }
}

fn read_kem_public(r: &mut Reader<'_>) -> Result<PqcEphemeralPublic, HandshakeError> {
    let parse = |what: &'static str| HandshakeError::ParseError(what.to_string());
    match r.u8()? {
        KEM_LATTICE => {
            let params = LatticeParams {
                n: r.u16()? as usize,
                m: r.u16()? as usize,
                q: r.u32()?,
                eta: r.u32()?,
                ell: r.u16()? as usize,
            };
            params.validate().map_err(|_| parse("lattice parameters"))?;
            let pk = LatticePublicKey::from_bytes(params, r.var_bytes()?).map_err(|_| parse("lattice public key"))?;
            Ok(PqcEphemeralPublic::Lattice(pk))
        }
        KEM_CODE => {
            let [n, k, t] = r.array::<3>()?;
            let params = CodeParams {
                n: n as usize,
                k: k as usize,
                t: t as usize,
            };
            params.validate().map_err(|_| parse("code parameters"))?;
            let pk = CodePublicKey::from_bytes(params, r.var_bytes()?).map_err(|_| parse("code public key"))?;
            Ok(PqcEphemeralPublic::Code(pk))
        }
        _ => Err(parse("pqc kem kind")),
    }
}

/// First flight: client random, offered modes and ephemeral public keys.
pub fn client_hello(config: &HandshakeConfig, seed: &RandomSeed) -> Result<(HandshakeState, Vec<u8>), HandshakeError> {
    check_role(config, Role::Client)?;
    let mut state = HandshakeState::fresh(Role::Client, Phase::AwaitResponse);
    state.client_modes = config.modes;
    state.policy = config.policy;
    state.pinned = config.pinned_server_keys.clone();

    let mut payload = seed.derive(b"client-random").0.to_vec();
    payload.push(config.modes.bits());
    if config.modes.offers_classical() {
        let (pk, sk) = legacy_keygen(config.legacy, &seed.derive(b"client-legacy")).map_err(internal)?;
        put_var_bytes(&mut payload, &pk.to_bytes());
        state.legacy_secret = Some(sk);
    }
    if config.modes.offers_pqc() {
        let kem_seed = seed.derive(b"client-pqc");
        let (pk, sk) = match config.pqc_kem {
            PqcKem::Lattice(p) => {
                let (pk, sk) = lwe_keygen(p, &kem_seed).map_err(internal)?;
                (PqcEphemeralPublic::Lattice(pk), PqcEphemeralSecret::Lattice(sk))
            }
            PqcKem::Code(p) => {
                let (pk, sk) = code_keygen(p, &kem_seed).map_err(internal)?;
                (PqcEphemeralPublic::Code(pk), PqcEphemeralSecret::Code(sk))
            }
        };
        write_kem_public(&mut payload, &pk);
        state.pqc_secret = Some(sk);
    }
    let frame = frame_encode(MsgType::ClientHello, &payload).map_err(internal)?;
    state.transcript.absorb(&frame);
    Ok((state, frame))
}

struct ClientHello {
    client_modes: ModeSet,
    legacy_pk: Option<LegacyPublicKey>,
    pqc_pk: Option<PqcEphemeralPublic>,
}

fn expect_frame(bytes: &[u8], expected: MsgType) -> Result<Vec<u8>, HandshakeError> {
    let (frame, rest) = frame_decode(bytes).map_err(|e| HandshakeError::ParseError(e.to_string()))?;
    if !rest.is_empty() {
        return Err(HandshakeError::ParseError(format!("{} trailing bytes after frame", rest.len())));
    }
    if frame.msg_type == MsgType::Abort && expected != MsgType::Abort {
        return Err(match frame.payload.as_slice() {
            [code] => AbortReason::from_u8(*code)
                .map(HandshakeError::Aborted)
                .unwrap_or(HandshakeError::AbortedUnknown(*code)),
            _ => HandshakeError::ParseError("abort payload".into()),
        });
    }
    if frame.msg_type != expected {
        return Err(HandshakeError::ParseError(format!("expected {expected:?}, got {:?}", frame.msg_type)));
    }
    Ok(frame.payload)
}

fn parse_client_hello(payload: &[u8]) -> Result<ClientHello, HandshakeError> {
    let mut r = Reader::new(payload);
    r.take(RANDOM_LEN)?;
    let client_modes =
        ModeSet::from_bits(r.u8()?).ok_or_else(|| HandshakeError::ParseError("mode bits".into()))?;
    let legacy_pk = if client_modes.offers_classical() {
        Some(
            LegacyPublicKey::from_bytes(r.var_bytes()?)
                .map_err(|_| HandshakeError::ParseError("legacy public key".into()))?,
        )
    } else {
        None
    };
    let pqc_pk = if client_modes.offers_pqc() {
        Some(read_kem_public(&mut r)?)
    } else {
        None
    };
    r.finish()?;
    Ok(ClientHello {
        client_modes,
        legacy_pk,
        pqc_pk,
    })
}

/// Second flight. On `NoCommonMode` (or any other error with an abort
/// reason) the caller sends [`HandshakeError::abort_frame`] to the client.
pub fn server_respond(
    config: &mut HandshakeConfig,
    client_hello_frame: &[u8],
    seed: &RandomSeed,
) -> Result<(HandshakeState, Vec<u8>), HandshakeError> {
    check_role(config, Role::Server)?;
    let hello = parse_client_hello(&expect_frame(client_hello_frame, MsgType::ClientHello)?)?;
    let mode = match config.forced_mode {
        Some(mode) => mode,
        None => negotiate(hello.client_modes, config.modes).map_err(|_| HandshakeError::NoCommonMode)?,
    };

    let mut state = HandshakeState::fresh(Role::Server, Phase::AwaitFinish);
    state.transcript.absorb(client_hello_frame);
    state.negotiated = Some(mode);

    let mut body = seed.derive(b"server-random").0.to_vec();
    body.push(config.modes.bits());
    body.push(mode as u8);

    let mut ss_classical = SharedSecret::ZERO;
    let mut ss_pqc = SharedSecret::ZERO;
    if mode.uses_classical() {
        let pk = hello.legacy_pk.as_ref().ok_or(HandshakeError::DowngradeDetected)?;
        let (ct, ss) = legacy_encaps(pk, &seed.derive(b"server-legacy"));
        put_var_bytes(&mut body, &ct.to_bytes(pk));
        ss_classical = ss;
    }
    if mode.uses_pqc() {
        let kem_seed = seed.derive(b"server-pqc");
        let ct_bytes = match hello.pqc_pk.as_ref().ok_or(HandshakeError::DowngradeDetected)? {
            PqcEphemeralPublic::Lattice(pk) => {
                let (ct, ss) = lwe_encaps(pk, &kem_seed);
                ss_pqc = ss;
                ct.to_bytes(&pk.params)
            }
            PqcEphemeralPublic::Code(pk) => {
                let (ct, ss) = code_encaps(pk, &kem_seed);
                ss_pqc = ss;
                ct.to_bytes(&pk.params)
            }
        };
        put_var_bytes(&mut body, &ct_bytes);
    }
    let signer_pks = config.signing_keys.public_keys();
    body.extend(signer_pks.to_bytes());

    let mut signed = state.transcript.clone();
    signed.absorb(&body);
    let signed_hash = signed.digest();
    let sign_mode = config.signing_keys.strongest_mode().expect("validated");
    let sig = dual_sign(&mut config.signing_keys, sign_mode, &signed_hash.0, &seed.derive(b"server-sign"))
        .map_err(|e| match e {
            HybridError::HashSig(_) => HandshakeError::Internal("signing key exhausted".into()),
            other => internal(other),
        })?;
    put_var_bytes(&mut body, &sig.to_bytes(&signer_pks));

    let frame = frame_encode(MsgType::ServerHello, &body).map_err(internal)?;
    state.master = Some(combine_secrets(&ss_classical, &ss_pqc, &signed_hash));
    state.transcript.absorb(&frame);
    Ok((state, frame))
}

fn finish_value(master: &SymmetricKey, transcript_hash: &Digest) -> [u8; FINISH_LEN] {
    kdf(b"finished-c", &[&master.0, &transcript_hash.0]).0
}

fn ct_eq(a: &[u8], b: &[u8]) -> bool {
    a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

/// Client processing of the ServerHello: authenticate, check for downgrade,
/// decapsulate, then emit the Finish frame.
pub fn client_process(
    mut state: HandshakeState,
    server_frame: &[u8],
) -> Result<(HandshakeState, Vec<u8>, SessionKeys), HandshakeError> {
    if state.role != Role::Client || state.phase != Phase::AwaitResponse {
        return Err(HandshakeError::WrongPhase(state.phase));
    }
    let payload = expect_frame(server_frame, MsgType::ServerHello)?;
    let mut r = Reader::new(&payload);
    r.take(RANDOM_LEN)?;
    let server_modes =
        ModeSet::from_bits(r.u8()?).ok_or_else(|| HandshakeError::ParseError("mode bits".into()))?;
    let mode = Mode::from_u8(r.u8()?).ok_or_else(|| HandshakeError::ParseError("mode".into()))?;
    let legacy_ct = if mode.uses_classical() { Some(r.var_bytes()?) } else { None };
    let pqc_ct = if mode.uses_pqc() { Some(r.var_bytes()?) } else { None };
    let signer_pks = SignerPublicKeys::read(&mut r)?;
    let signed_len = payload.len() - r.remaining();
    let sig_bytes = r.var_bytes()?;
    r.finish()?;

    let mut signed = state.transcript.clone();
    signed.absorb(&payload[..signed_len]);
    let signed_hash = signed.digest();

    if state.pinned.as_ref().is_some_and(|pinned| *pinned != signer_pks) {
        return Err(HandshakeError::AuthFailure);
    }
    let sig = DualSignature::from_bytes(sig_bytes, &signer_pks).map_err(|_| HandshakeError::AuthFailure)?;
    if !dual_verify(state.policy, &signer_pks, &signed_hash.0, &sig).unwrap_or(false) {
        return Err(HandshakeError::AuthFailure);
    }
    let expected = negotiate(state.client_modes, server_modes).map_err(|_| HandshakeError::DowngradeDetected)?;
    if mode != expected {
        return Err(HandshakeError::DowngradeDetected);
    }

    let mut ss_classical = SharedSecret::ZERO;
    let mut ss_pqc = SharedSecret::ZERO;
    if let Some(ct) = legacy_ct {
        let sk = state.legacy_secret.as_ref().ok_or(HandshakeError::DecapsFailure)?;
        let pk = sk.public_key();
        let ct = LegacyCiphertext::from_bytes(&pk, ct).map_err(|_| HandshakeError::DecapsFailure)?;
        ss_classical = legacy_decaps(sk, &ct).map_err(|_| HandshakeError::DecapsFailure)?;
    }
    if let Some(ct) = pqc_ct {
        ss_pqc = match state.pqc_secret.as_ref().ok_or(HandshakeError::DecapsFailure)? {
            PqcEphemeralSecret::Lattice(sk) => {
                let ct = LatticeCiphertext::from_bytes(&sk.params, ct).map_err(|_| HandshakeError::DecapsFailure)?;
                lwe_decaps(sk, &ct).map_err(|_| HandshakeError::DecapsFailure)?
            }
            PqcEphemeralSecret::Code(sk) => {
                let ct = CodeCiphertext::from_bytes(&sk.params, ct).map_err(|_| HandshakeError::DecapsFailure)?;
                code_decaps(sk, &ct).map_err(|_| HandshakeError::DecapsFailure)?
            }
        };
    }

    let master = combine_secrets(&ss_classical, &ss_pqc, &signed_hash);
    state.transcript.absorb(server_frame);
    let finish = finish_value(&master, &state.transcript.digest());
    let frame = frame_encode(MsgType::Finish, &finish).map_err(internal)?;
    state.transcript.absorb(&frame);
    let keys = SessionKeys::from_master(&master);
    state.master = Some(master);
    state.negotiated = Some(mode);
    state.legacy_secret = None;
    state.pqc_secret = None;
    state.phase = Phase::Established;
    Ok((state, frame, keys))
}

/// Server check of the client's Finish frame.
pub fn server_finish(state: &mut HandshakeState, finish_frame: &[u8]) -> Result<SessionKeys, HandshakeError> {
    if state.role != Role::Server || state.phase != Phase::AwaitFinish {
        return Err(HandshakeError::WrongPhase(state.phase));
    }
    let outcome = (|| {
        let payload = expect_frame(finish_frame, MsgType::Finish)?;
        let master = state.master.as_ref().ok_or_else(|| internal("missing master secret"))?;
        let expected = finish_value(master, &state.transcript.digest());
        if !ct_eq(&payload, &expected) {
            return Err(HandshakeError::FinishMismatch);
        }
        Ok(SessionKeys::from_master(master))
    })();
    match outcome {
        Ok(keys) => {
            state.transcript.absorb(finish_frame);
            state.phase = Phase::Established;
            Ok(keys)
        }
        Err(e) => {
            state.phase = Phase::Failed;
            Err(e)
        }
    }
}

/// Frames exchanged by one complete handshake.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopbackTranscript {
    pub client_hello: Vec<u8>,
    pub server_hello: Vec<u8>,
    pub finish: Vec<u8>,
    pub mode: Mode,
    pub client_keys: SessionKeys,
    pub server_keys: SessionKeys,
    pub master: SymmetricKey,
}

impl LoopbackTranscript {
    pub fn wire_bytes(&self) -> usize {
        self.client_hello.len() + self.server_hello.len() + self.finish.len()
    }
}

/// Runs client and server in-process, moving frames directly between them.
pub fn run_loopback(
    client: &HandshakeConfig,
    server: &mut HandshakeConfig,
    client_seed: &RandomSeed,
    server_seed: &RandomSeed,
) -> Result<LoopbackTranscript, HandshakeError> {
    let (client_state, client_hello) = client_hello(client, client_seed)?;
    let (mut server_state, server_hello) = server_respond(server, &client_hello, server_seed)?;
    let (client_state, finish, client_keys) = client_process(client_state, &server_hello)?;
    let server_keys = server_finish(&mut server_state, &finish)?;
    Ok(LoopbackTranscript {
        client_hello,
        server_hello,
        finish,
        mode: client_state.negotiated.expect("established"),
        client_keys,
        server_keys,
        master: client_state.master.expect("established"),
    })
}
