mod common;

use common::seed;
use pqhs::handshake::{
    client_hello, client_process, run_loopback, server_finish, server_respond, session_open, session_seal, AbortReason,
    Direction, HandshakeConfig, HandshakeError, Phase, PqcKem, RecordError,
};
use pqhs::hashsig::{hsig_keygen, HashSigParams};
use pqhs::hybrid::{AuthPolicy, Mode, ModeSet, PqcSecretKey, SigningKeys};
use pqhs::lattice::LatticeParams;
use pqhs::legacy::{legacy_keygen, LegacyParams};
use pqhs::mq::{mq_keygen, MqParams};
use pqhs::netsim::{AuthScheme, SimProfile};

fn modes(list: &[Mode]) -> ModeSet {
    list.iter().copied().collect()
}

fn server_keys(legacy: bool, pqc: Option<&str>, tag: u64) -> SigningKeys {
    SigningKeys {
        legacy: legacy.then(|| legacy_keygen(LegacyParams::RSA_1024, &seed("srv-legacy", tag)).unwrap().1),
        pqc: pqc.map(|kind| match kind {
            "mq" => PqcSecretKey::Mq(mq_keygen(MqParams::DESK, &seed("srv-mq", tag)).unwrap().1),
            _ => PqcSecretKey::Hash(hsig_keygen(HashSigParams::SMALL, &seed("srv-hsig", tag)).unwrap().1),
        }),
    }
}

fn small(config: HandshakeConfig) -> HandshakeConfig {
    config
        .with_pqc_kem(PqcKem::Lattice(LatticeParams::DESK_SMALL))
        .with_legacy(LegacyParams::RSA_1024)
}

#[test]
fn mode_policy_matrix_agrees() {
    let mut server = small(HandshakeConfig::server(ModeSet::all(), server_keys(true, Some("mq"), 1)));
    for (i, mode) in Mode::ALL.into_iter().enumerate() {
        for (j, policy) in [AuthPolicy::LegacyOnly, AuthPolicy::PqcOnly, AuthPolicy::BothRequired, AuthPolicy::Either]
            .into_iter()
            .enumerate()
        {
            let client = small(HandshakeConfig::client(modes(&[mode]), policy));
            let tag = (i * 4 + j) as u64;
            let t = run_loopback(&client, &mut server, &seed("c", tag), &seed("s", tag))
                .unwrap_or_else(|e| panic!("{mode} / {}: {e}", policy.name()));
            assert_eq!(t.mode, mode);
            assert_eq!(t.client_keys, t.server_keys);
        }
    }
}

#[test]
fn code_kem_handshake() {
    let mut server = small(HandshakeConfig::server(ModeSet::all(), server_keys(false, Some("hsig"), 2)))
        .with_pqc_kem(PqcKem::Code(pqhs::code::CodeParams::DESK));
    let client = small(HandshakeConfig::client(modes(&[Mode::PqcOnly]), AuthPolicy::PqcOnly))
        .with_pqc_kem(PqcKem::Code(pqhs::code::CodeParams::DESK));
    let t = run_loopback(&client, &mut server, &seed("c", 0), &seed("s", 0)).unwrap();
    assert_eq!(t.client_keys, t.server_keys);
}

#[test]
fn disjoint_modes_abort() {
    let mut server = small(HandshakeConfig::server(modes(&[Mode::ClassicalOnly]), server_keys(true, None, 3)));
    let client = small(HandshakeConfig::client(modes(&[Mode::PqcOnly, Mode::Hybrid]), AuthPolicy::Either));
    let (state, hello) = client_hello(&client, &seed("c", 1)).unwrap();
    let err = server_respond(&mut server, &hello, &seed("s", 1)).err().unwrap();
    assert!(matches!(err, HandshakeError::NoCommonMode));
    let abort = err.abort_frame().unwrap();
    assert_eq!(abort, vec![255, 1, 0, 0, 0, AbortReason::NoCommonMode as u8]);
    assert!(matches!(
        client_process(state, &abort).err().unwrap(),
        HandshakeError::Aborted(AbortReason::NoCommonMode)
    ));
}

#[test]
fn policy_without_matching_key_fails_auth() {
    let mut server = small(HandshakeConfig::server(ModeSet::all(), server_keys(true, None, 4)));
    let client = small(HandshakeConfig::client(modes(&[Mode::Hybrid]), AuthPolicy::PqcOnly));
    let err = run_loopback(&client, &mut server, &seed("c", 2), &seed("s", 2)).err().unwrap();
    assert!(matches!(err, HandshakeError::AuthFailure), "{err}");
}

#[test]
fn forced_downgrade_detected() {
    let mut server = small(HandshakeConfig::server(ModeSet::all(), server_keys(true, Some("mq"), 5)));
    server.forced_mode = Some(Mode::ClassicalOnly);
    let client = small(HandshakeConfig::client(modes(&[Mode::Hybrid, Mode::ClassicalOnly]), AuthPolicy::Either));
    let err = run_loopback(&client, &mut server, &seed("c", 3), &seed("s", 3)).err().unwrap();
    assert!(matches!(err, HandshakeError::DowngradeDetected), "{err}");
    assert_eq!(err.abort_reason(), Some(AbortReason::DowngradeDetected));
}

#[test]
fn stale_server_hello_rejected() {
    let mut server = small(HandshakeConfig::server(ModeSet::all(), server_keys(true, Some("mq"), 6)));
    let client = small(HandshakeConfig::client(modes(&[Mode::Hybrid]), AuthPolicy::BothRequired));
    let (_, hello) = client_hello(&client, &seed("c", 10)).unwrap();
    let (_, old_response) = server_respond(&mut server, &hello, &seed("s", 10)).unwrap();
    let (fresh, _) = client_hello(&client, &seed("c", 11)).unwrap();
    assert!(matches!(
        client_process(fresh, &old_response).err().unwrap(),
        HandshakeError::AuthFailure
    ));
}

#[test]
fn finish_from_another_session_rejected() {
    let mut server = small(HandshakeConfig::server(ModeSet::all(), server_keys(true, Some("mq"), 7)));
    let client = small(HandshakeConfig::client(modes(&[Mode::Hybrid]), AuthPolicy::Either));
    let first = run_loopback(&client, &mut server, &seed("c", 20), &seed("s", 20)).unwrap();

    let (cstate, hello) = client_hello(&client, &seed("c", 21)).unwrap();
    let (mut sstate, response) = server_respond(&mut server, &hello, &seed("s", 21)).unwrap();
    assert!(matches!(
        server_finish(&mut sstate, &first.finish).err().unwrap(),
        HandshakeError::FinishMismatch
    ));
    assert_eq!(sstate.phase, Phase::Failed);
    let (_, finish, _) = client_process(cstate, &response).unwrap();
    assert!(matches!(server_finish(&mut sstate, &finish).err().unwrap(), HandshakeError::WrongPhase(Phase::Failed)));
}

#[test]
fn record_replay_and_reorder_rejected() {
    let mut server = small(HandshakeConfig::server(ModeSet::all(), server_keys(true, Some("mq"), 8)));
    let client = small(HandshakeConfig::client(modes(&[Mode::Hybrid]), AuthPolicy::BothRequired));
    let t = run_loopback(&client, &mut server, &seed("c", 30), &seed("s", 30)).unwrap();
    let (mut c, mut s) = (t.client_keys, t.server_keys);
    let r0 = session_seal(&mut c, Direction::ClientToServer, b"hdr", b"first").unwrap();
    let r1 = session_seal(&mut c, Direction::ClientToServer, b"hdr", b"second").unwrap();
    assert_eq!(session_open(&mut s, Direction::ClientToServer, b"hdr", &r0).unwrap(), b"first");
    assert!(matches!(
        session_open(&mut s, Direction::ClientToServer, b"hdr", &r0),
        Err(RecordError::ReplayOrReorder { expected: 1, got: 0 })
    ));
    let mut tampered = r1.clone();
    *tampered.last_mut().unwrap() ^= 1;
    assert!(matches!(
        session_open(&mut s, Direction::ClientToServer, b"hdr", &tampered),
        Err(RecordError::AuthenticationFailure)
    ));
    assert!(session_open(&mut s, Direction::ClientToServer, b"other", &r1).is_err());
    assert_eq!(session_open(&mut s, Direction::ClientToServer, b"hdr", &r1).unwrap(), b"second");

    // Reflection: a client record is not valid in the server direction.
    let r2 = session_seal(&mut c, Direction::ClientToServer, b"", b"x").unwrap();
    let mut c2 = c.clone();
    assert!(session_open(&mut c2, Direction::ServerToClient, b"", &r2).is_err());
}

#[test]
fn long_term_keys_do_not_reproduce_sessions() {
    // An attacker holding the server's long-term keys replays the recorded
    // ClientHello; without the client's ephemeral secrets it cannot rebuild
    // the session master.
    let mut server = small(HandshakeConfig::server(ModeSet::all(), server_keys(true, Some("mq"), 9)));
    let client = small(HandshakeConfig::client(modes(&[Mode::Hybrid]), AuthPolicy::Either));
    let t = run_loopback(&client, &mut server, &seed("c", 40), &seed("s", 40)).unwrap();
    let (mut replay, _) = server_respond(&mut server, &t.client_hello, &seed("s", 41)).unwrap();
    assert_ne!(replay.master_secret(), Some(&t.master));
    assert!(server_finish(&mut replay, &t.finish).is_err());

    let again = run_loopback(&client, &mut server, &seed("c", 42), &seed("s", 40)).unwrap();
    assert_ne!(again.master, t.master);
}

#[test]
fn netsim_wire_sizes_match_real_frames() {
    for (profile, auth) in [(SimProfile::mq_hybrid(), "mq"), (SimProfile::hsig_hybrid(), "hsig")] {
        let pqc = match profile.auth {
            AuthScheme::Mq(p) => PqcSecretKey::Mq(mq_keygen(p, &seed("wire-mq", 0)).unwrap().1),
            AuthScheme::HashSig(p) => PqcSecretKey::Hash(hsig_keygen(p, &seed("wire-hsig", 0)).unwrap().1),
        };
        let keys = SigningKeys {
            legacy: Some(legacy_keygen(profile.legacy_sig.unwrap(), &seed("wire-legacy", 0)).unwrap().1),
            pqc: Some(pqc),
        };
        let mut server = HandshakeConfig::server(ModeSet::all(), keys)
            .with_pqc_kem(PqcKem::Lattice(profile.lattice))
            .with_legacy(profile.legacy_kem);
        let client = HandshakeConfig::client(modes(&[profile.mode]), AuthPolicy::BothRequired)
            .with_pqc_kem(PqcKem::Lattice(profile.lattice))
            .with_legacy(profile.legacy_kem);
        let t = run_loopback(&client, &mut server, &seed("wc", 0), &seed("ws", 0)).unwrap();
        let sizes = profile.wire_sizes();
        assert_eq!(sizes.client_hello, t.client_hello.len(), "{auth}");
        assert_eq!(sizes.server_hello, t.server_hello.len(), "{auth}");
        assert_eq!(sizes.finish, t.finish.len(), "{auth}");
        assert_eq!(sizes.total(), t.wire_bytes());
    }
}
