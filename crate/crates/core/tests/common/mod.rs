//! Reference implementations written directly against the math, sharing no
//! code with the library beyond plain data structures.

#![allow(dead_code)]

use sha2::{Digest as _, Sha256};

pub fn sha256(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    h.finalize().into()
}

pub fn seed(tag: &str, i: u64) -> pqhs::primitives::RandomSeed {
    pqhs::primitives::RandomSeed(sha256(&[tag.as_bytes(), &i.to_le_bytes()]))
}

/// Small xorshift generator for test inputs; deliberately unrelated to the
/// library RNG.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1)
    }

    pub fn next(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }

    pub fn bytes(&mut self, len: usize) -> Vec<u8> {
        (0..len).map(|_| self.next() as u8).collect()
    }
}

// ---------------------------------------------------------------- Regev

pub struct RegevCt {
    pub u: Vec<Vec<i64>>,
    pub v: Vec<i64>,
}

/// `u_i = sum_j r_ij A_j`, `v_i = sum_j r_ij b_j + bit_i * floor(q/2)`, all mod q.
pub fn regev_encrypt(a: &[Vec<i64>], b: &[i64], q: i64, bits: &[bool], r: &[Vec<bool>]) -> RegevCt {
    let n = a[0].len();
    let mut u = Vec::new();
    let mut v = Vec::new();
    for (row, &bit) in r.iter().zip(bits) {
        let mut ui = vec![0i64; n];
        let mut vi = if bit { q / 2 } else { 0 };
        for (j, &take) in row.iter().enumerate() {
            if take {
                for c in 0..n {
                    ui[c] += a[j][c];
                }
                vi += b[j];
            }
        }
        u.push(ui.into_iter().map(|x| x.rem_euclid(q)).collect());
        v.push(vi.rem_euclid(q));
    }
    RegevCt { u, v }
}

/// Rounds `v - <u, s>` to whichever of 0 and q/2 is closer.
pub fn regev_decrypt(s: &[i64], q: i64, ct: &RegevCt) -> Vec<bool> {
    ct.u
        .iter()
        .zip(&ct.v)
        .map(|(ui, &vi)| {
            let dot: i64 = ui.iter().zip(s).map(|(x, y)| x * y).sum();
            let d = (vi - dot).rem_euclid(q);
            let centered = if d > q / 2 { d - q } else { d };
            centered.abs() > q / 4
        })
        .collect()
}

// ---------------------------------------------------------------- codes

/// Bit `j` of `m·G` where `g[i]` holds row `i` as a bitmask.
pub fn gf2_encode(g: &[u128], n: usize, m: u128) -> u128 {
    let mut out = 0u128;
    for col in 0..n {
        let mut bit = 0u128;
        for (i, row) in g.iter().enumerate() {
            bit ^= (m >> i & 1) & (row >> col & 1);
        }
        out |= bit << col;
    }
    out
}

/// Every `k`-bit message whose codeword lies within distance `t` of `c`.
pub fn nearest_messages(g: &[u128], n: usize, t: u32, c: u128) -> Vec<u128> {
    (0..1u128 << g.len())
        .filter(|&m| (gf2_encode(g, n, m) ^ c).count_ones() <= t)
        .collect()
}

// ---------------------------------------------------------------- MQ

/// Evaluates `sum_{j<=k} a_jk x_j x_k + sum_j l_j x_j + c` by enumerating
/// the (j, k) pairs explicitly.
pub fn mq_eval(poly: &pqhs::mq::Quadratic, q: u32, x: &[u32]) -> u32 {
    let n = x.len();
    let q = i64::from(q);
    let mut pairs = Vec::new();
    for j in 0..n {
        for k in j..n {
            pairs.push((j, k));
        }
    }
    assert_eq!(pairs.len(), poly.quad.len());
    let mut acc = i64::from(poly.constant);
    for ((j, k), &a) in pairs.into_iter().zip(&poly.quad) {
        acc += i64::from(a) * i64::from(x[j]) * i64::from(x[k]) % q;
    }
    for (l, xi) in poly.linear.iter().zip(x) {
        acc += i64::from(*l) * i64::from(*xi);
    }
    acc.rem_euclid(q) as u32
}

pub fn affine_apply(map: &pqhs::mq::AffineMap, q: u32, x: &[u32]) -> Vec<u32> {
    let q = i64::from(q);
    map.matrix
        .iter()
        .zip(&map.offset)
        .map(|(row, &c)| {
            let s: i64 = row.iter().zip(x).map(|(&a, &b)| i64::from(a) * i64::from(b)).sum();
            (s + i64::from(c)).rem_euclid(q) as u32
        })
        .collect()
}

/// All points of GF(q)^n in lexicographic order.
pub fn all_points(q: u32, n: usize) -> Vec<Vec<u32>> {
    let total = (q as usize).pow(n as u32);
    (0..total)
        .map(|mut idx| {
            (0..n)
                .map(|_| {
                    let d = (idx % q as usize) as u32;
                    idx /= q as usize;
                    d
                })
                .collect()
        })
        .collect()
}

// ---------------------------------------------------------------- WOTS + Merkle

pub struct HashTreeOracle {
    pub h: u32,
    pub w: u32,
    pub seed: [u8; 32],
    /// `levels[0]` are leaves, `levels[h]` is `[root]`.
    pub levels: Vec<Vec<[u8; 32]>>,
}

impl HashTreeOracle {
    pub fn len1(&self) -> usize {
        256 / self.w as usize
    }

    pub fn len2(&self) -> usize {
        let max = self.len1() as u64 * ((1u64 << self.w) - 1);
        (63 - max.leading_zeros()) as usize / self.w as usize + 1
    }

    pub fn chain_start(&self, leaf: u32, chain: u32) -> [u8; 32] {
        sha256(&[&self.seed, &leaf.to_le_bytes(), &chain.to_le_bytes()])
    }

    pub fn iterate(mut x: [u8; 32], steps: u32) -> [u8; 32] {
        for _ in 0..steps {
            x = sha256(&[&x]);
        }
        x
    }

    pub fn digits(&self, msg: &[u8]) -> Vec<u32> {
        let d = sha256(&[msg]);
        let w = self.w;
        let mut bits = Vec::new();
        for byte in d {
            for i in (0..8).rev() {
                bits.push(u32::from(byte >> i & 1));
            }
        }
        let mut digits: Vec<u32> = bits.chunks(w as usize).map(|c| c.iter().fold(0, |a, &b| a << 1 | b)).collect();
        let max = (1u32 << w) - 1;
        let checksum: u32 = digits.iter().map(|d| max - d).sum();
        for i in (0..self.len2()).rev() {
            digits.push(checksum >> (i as u32 * w) & max);
        }
        digits
    }

    pub fn build(h: u32, w: u32, seed: [u8; 32]) -> Self {
        let mut oracle = Self {
            h,
            w,
            seed,
            levels: Vec::new(),
        };
        let chains = oracle.len1() + oracle.len2();
        let max = (1u32 << w) - 1;
        let leaves: Vec<[u8; 32]> = (0..1u32 << h)
            .map(|leaf| {
                let mut data = vec![0x00u8];
                for c in 0..chains as u32 {
                    data.extend_from_slice(&Self::iterate(oracle.chain_start(leaf, c), max));
                }
                sha256(&[&data])
            })
            .collect();
        let mut levels = vec![leaves];
        while levels.last().unwrap().len() > 1 {
            let next = levels
                .last()
                .unwrap()
                .chunks(2)
                .map(|p| sha256(&[&[0x01], &p[0], &p[1]]))
                .collect();
            levels.push(next);
        }
        oracle.levels = levels;
        oracle
    }

    pub fn root(&self) -> [u8; 32] {
        self.levels[self.h as usize][0]
    }

    pub fn ots(&self, leaf: u32, msg: &[u8]) -> Vec<[u8; 32]> {
        self.digits(msg)
            .iter()
            .enumerate()
            .map(|(c, &d)| Self::iterate(self.chain_start(leaf, c as u32), d))
            .collect()
    }

    pub fn auth_path(&self, leaf: u32) -> Vec<[u8; 32]> {
        (0..self.h as usize).map(|l| self.levels[l][(leaf >> l) as usize ^ 1]).collect()
    }
}

// ---------------------------------------------------------------- audit log

pub fn log_leaf(record: &[u8]) -> [u8; 32] {
    sha256(&[&[0x00], record])
}

/// Recursive split at the largest power of two below the size.
pub fn log_root(leaves: &[[u8; 32]]) -> [u8; 32] {
    if leaves.len() == 1 {
        return leaves[0];
    }
    let mut k = 1;
    while k * 2 < leaves.len() {
        k *= 2;
    }
    sha256(&[&[0x01], &log_root(&leaves[..k]), &log_root(&leaves[k..])])
}

// ---------------------------------------------------------------- golden artifacts

pub mod golden {
    use std::path::PathBuf;

    use pqhs::handshake::{client_hello, client_process, HandshakeConfig, HandshakeState, LoopbackTranscript, PqcKem};
    use pqhs::hybrid::{AuthPolicy, Mode, ModeSet, PqcSecretKey, SigningKeys};
    use pqhs::keyfile::{keygen, ParamSet, Scheme};
    use pqhs::lattice::LatticeParams;
    use pqhs::legacy::{legacy_keygen, LegacyParams};
    use pqhs::mq::{mq_keygen, MqParams};

    use super::seed;

    /// Set to rewrite the fixture files from the current implementation.
    pub const REGEN_ENV: &str = "PQHS_REGEN_FIXTURES";

    pub fn fixture_dir() -> PathBuf {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
    }

    pub fn configs() -> (HandshakeConfig, HandshakeConfig) {
        let keys = SigningKeys {
            legacy: Some(legacy_keygen(LegacyParams::RSA_1024, &seed("golden-legacy", 0)).unwrap().1),
            pqc: Some(PqcSecretKey::Mq(mq_keygen(MqParams::DESK, &seed("golden-mq", 0)).unwrap().1)),
        };
        let kem = PqcKem::Lattice(LatticeParams::DESK_SMALL);
        let client = HandshakeConfig::client([Mode::Hybrid].into_iter().collect(), AuthPolicy::BothRequired)
            .with_pqc_kem(kem)
            .with_legacy(LegacyParams::RSA_1024);
        let server = HandshakeConfig::server(ModeSet::all(), keys)
            .with_pqc_kem(kem)
            .with_legacy(LegacyParams::RSA_1024);
        (client, server)
    }

    /// The golden handshake, plus the client state just before it reads the
    /// ServerHello.
    pub fn handshake() -> (LoopbackTranscript, HandshakeState) {
        let (client, mut server) = configs();
        let (state, _) = client_hello(&client, &seed("golden-client", 0)).unwrap();
        let t = pqhs::handshake::run_loopback(&client, &mut server, &seed("golden-client", 0), &seed("golden-server", 0))
            .unwrap();
        (t, state)
    }

    pub fn transcript_files(t: &LoopbackTranscript) -> Vec<(String, Vec<u8>)> {
        vec![
            ("handshake_client_hello.hex".into(), hex::encode(&t.client_hello).into_bytes()),
            ("handshake_server_hello.hex".into(), hex::encode(&t.server_hello).into_bytes()),
            ("handshake_finish.hex".into(), hex::encode(&t.finish).into_bytes()),
            ("handshake_session.hex".into(), hex::encode(t.client_keys.digest().0).into_bytes()),
        ]
    }

    pub fn key_files() -> Vec<(String, Vec<u8>)> {
        let sets = [
            (Scheme::Lattice, "tiny"),
            (Scheme::Lattice, "desk-small"),
            (Scheme::Code, "hamming-7-4"),
            (Scheme::Code, "desk-code"),
            (Scheme::Mq, "tiny"),
            (Scheme::Mq, "desk-uov"),
            (Scheme::HashSig, "small"),
            (Scheme::Legacy, "rsa-512"),
            (Scheme::Legacy, "rsa-1024"),
        ];
        let mut out = Vec::new();
        for (scheme, name) in sets {
            let params = ParamSet::parse(scheme, name).unwrap();
            let (pk, sk) = keygen(params, &seed("golden-key", params.id() as u64)).unwrap();
            out.push((format!("{scheme}_{name}.pk"), pk.to_file_bytes()));
            out.push((format!("{scheme}_{name}.sk"), sk.to_file_bytes()));
        }
        out
    }

    /// Compares artifacts with the fixture directory, or rewrites it when
    /// [`REGEN_ENV`] is set. Returns the names that differ.
    pub fn compare_or_regen(files: &[(String, Vec<u8>)]) -> Vec<String> {
        let dir = fixture_dir();
        if std::env::var_os(REGEN_ENV).is_some() {
            std::fs::create_dir_all(&dir).unwrap();
            for (name, bytes) in files {
                std::fs::write(dir.join(name), bytes).unwrap();
            }
            return Vec::new();
        }
        files
            .iter()
            .filter(|(name, bytes)| std::fs::read(dir.join(name)).ok().as_ref() != Some(bytes))
            .map(|(name, _)| name.clone())
            .collect()
    }

    pub struct FlipReport {
        pub positions: usize,
        pub accepted: Vec<usize>,
        pub without_abort_code: Vec<usize>,
    }

    /// Flips every byte of the ServerHello (xor 0xFF) and feeds each variant
    /// to a copy of the waiting client.
    pub fn byte_flip_pass(state: &HandshakeState, server_hello: &[u8]) -> FlipReport {
        let mut report = FlipReport {
            positions: server_hello.len(),
            accepted: Vec::new(),
            without_abort_code: Vec::new(),
        };
        let mut frame = server_hello.to_vec();
        for i in 0..frame.len() {
            frame[i] ^= 0xFF;
            match client_process(state.clone(), &frame) {
                Ok(_) => report.accepted.push(i),
                Err(e) if e.abort_reason().is_none() => report.without_abort_code.push(i),
                Err(_) => {}
            }
            frame[i] ^= 0xFF;
        }
        report
    }
}

// ---------------------------------------------------------------- signature soundness

pub mod soundness {
    use pqhs::hashsig::{hsig_keygen, hsig_sign, hsig_verify, HashSigParams, HashSigSignature};
    use pqhs::hybrid::{dual_sign, dual_verify, AuthPolicy, DualSignature, Mode, PqcSecretKey, SigningKeys};
    use pqhs::legacy::{legacy_keygen, legacy_sign, legacy_verify, LegacyParams, LegacySignature};
    use pqhs::mq::{hash_to_field, mq_keygen, mq_sign, mq_verify, MqParams, MqSignature};

    use super::{all_points, mq_eval, seed, TestRng};

    #[derive(Debug, Default)]
    pub struct Tally {
        pub scheme: &'static str,
        pub messages: usize,
        pub tampers: u64,
        pub accepted: u64,
        pub honest_rejected: u64,
    }

    impl Tally {
        fn new(scheme: &'static str) -> Self {
            Self {
                scheme,
                ..Self::default()
            }
        }

        fn record(&mut self, accepted: bool) {
            self.tampers += 1;
            self.accepted += u64::from(accepted);
        }

        pub fn clean(&self) -> bool {
            self.accepted == 0 && self.honest_rejected == 0 && self.tampers > 0
        }
    }

    /// Byte positions to flip: all of them, or `sample` random ones.
    fn positions(len: usize, sample: Option<usize>, rng: &mut TestRng) -> Vec<usize> {
        match sample {
            None => (0..len).collect(),
            Some(k) => (0..k).map(|_| rng.below(len as u64) as usize).collect(),
        }
    }

    fn flip(bytes: &[u8], i: usize) -> Vec<u8> {
        let mut out = bytes.to_vec();
        out[i] ^= 1 << (i % 8);
        out
    }

    fn tamper_message(msg: &[u8], rng: &mut TestRng) -> Vec<u8> {
        flip(msg, rng.below(msg.len() as u64) as usize)
    }

    pub fn mq(messages: usize) -> Tally {
        let mut t = Tally::new("mq");
        t.messages = messages;
        let p = MqParams::DESK;
        let (pk, sk) = mq_keygen(p, &seed("sound-mq", 0)).unwrap();
        let mut rng = TestRng::new(11);
        for i in 0..messages {
            let msg = rng.bytes(40);
            let sig = mq_sign(&sk, &msg, &seed("sound-mq-sign", i as u64)).unwrap();
            if !mq_verify(&pk, &msg, &sig).unwrap() {
                t.honest_rejected += 1;
            }
            t.record(mq_verify(&pk, &tamper_message(&msg, &mut rng), &sig).unwrap());
            let bytes = sig.to_bytes();
            for pos in positions(bytes.len(), None, &mut rng) {
                let ok = MqSignature::from_bytes(&p, &flip(&bytes, pos))
                    .map(|s| mq_verify(&pk, &msg, &s).unwrap_or(false))
                    .unwrap_or(false);
                t.record(ok);
            }
        }
        t
    }

    pub fn hsig(messages: usize, exhaustive: usize) -> Tally {
        let mut t = Tally::new("hsig");
        t.messages = messages;
        let p = HashSigParams { h: 7, w: 4 };
        assert!(messages as u64 <= p.capacity());
        let (pk, mut sk) = hsig_keygen(p, &seed("sound-hsig", 0)).unwrap();
        let mut rng = TestRng::new(12);
        for i in 0..messages {
            let msg = rng.bytes(40);
            let sig = hsig_sign(&mut sk, &msg).unwrap();
            if !hsig_verify(&pk, &msg, &sig).unwrap() {
                t.honest_rejected += 1;
            }
            t.record(hsig_verify(&pk, &tamper_message(&msg, &mut rng), &sig).unwrap());
            let bytes = sig.to_bytes();
            let sample = if i < exhaustive { None } else { Some(32) };
            for pos in positions(bytes.len(), sample, &mut rng) {
                let ok = HashSigSignature::from_bytes(&p, &flip(&bytes, pos))
                    .map(|s| hsig_verify(&pk, &msg, &s).unwrap_or(false))
                    .unwrap_or(false);
                t.record(ok);
            }
        }
        t
    }

    pub fn legacy(messages: usize) -> Tally {
        let mut t = Tally::new("legacy");
        t.messages = messages;
        let (pk, sk) = legacy_keygen(LegacyParams::RSA_1024, &seed("sound-legacy", 0)).unwrap();
        let mut rng = TestRng::new(13);
        for _ in 0..messages {
            let msg = rng.bytes(40);
            let sig = legacy_sign(&sk, &msg);
            if !legacy_verify(&pk, &msg, &sig).unwrap() {
                t.honest_rejected += 1;
            }
            t.record(legacy_verify(&pk, &tamper_message(&msg, &mut rng), &sig).unwrap_or(false));
            let bytes = sig.to_bytes(&pk);
            for pos in positions(bytes.len(), None, &mut rng) {
                let ok = LegacySignature::from_bytes(&pk, &flip(&bytes, pos))
                    .map(|s| legacy_verify(&pk, &msg, &s).unwrap_or(false))
                    .unwrap_or(false);
                t.record(ok);
            }
        }
        t
    }

    /// DualSignature under `BothRequired`: dropped or swapped components and
    /// single-byte flips of the encoding.
    pub fn dual(messages: usize) -> Tally {
        let mut t = Tally::new("dual");
        t.messages = messages;
        let mut keys = SigningKeys {
            legacy: Some(legacy_keygen(LegacyParams::RSA_1024, &seed("sound-dual-legacy", 0)).unwrap().1),
            pqc: Some(PqcSecretKey::Mq(mq_keygen(MqParams::DESK, &seed("sound-dual-mq", 0)).unwrap().1)),
        };
        let pks = keys.public_keys();
        let policy = AuthPolicy::BothRequired;
        let verify = |msg: &[u8], sig: &DualSignature| dual_verify(policy, &pks, msg, sig).unwrap_or(false);
        let mut rng = TestRng::new(14);
        let mut previous: Option<DualSignature> = None;
        for i in 0..messages {
            let msg = rng.bytes(40);
            let sig = dual_sign(&mut keys, Mode::Hybrid, &msg, &seed("sound-dual-sign", i as u64)).unwrap();
            if !verify(&msg, &sig) {
                t.honest_rejected += 1;
            }
            t.record(verify(&tamper_message(&msg, &mut rng), &sig));
            t.record(verify(&msg, &DualSignature { legacy: None, ..sig.clone() }));
            t.record(verify(&msg, &DualSignature { pqc: None, ..sig.clone() }));
            if let Some(prev) = &previous {
                t.record(verify(&msg, &DualSignature { legacy: prev.legacy.clone(), ..sig.clone() }));
                t.record(verify(&msg, &DualSignature { pqc: prev.pqc.clone(), ..sig.clone() }));
            }
            let bytes = sig.to_bytes(&pks);
            for pos in positions(bytes.len(), None, &mut rng) {
                let ok = DualSignature::from_bytes(&flip(&bytes, pos), &pks)
                    .map(|s| verify(&msg, &s))
                    .unwrap_or(false);
                t.record(ok);
            }
            previous = Some(sig);
        }
        t
    }

    pub struct Census {
        pub accepted: u64,
        pub trials: u64,
        pub disagreements: u64,
        pub bound: f64,
    }

    impl Census {
        pub fn rate(&self) -> f64 {
            self.accepted as f64 / self.trials as f64
        }
    }

    /// Replaces a valid tiny-profile signature vector by every other point
    /// of the space and compares verification with the brute-force preimage
    /// census of the target.
    pub fn mq_census(messages: usize) -> Census {
        let p = MqParams::TINY;
        let (pk, sk) = mq_keygen(p, &seed("mq-census", 0)).unwrap();
        let points = all_points(p.q, p.n_vars());
        let images: Vec<Vec<u32>> = points
            .iter()
            .map(|x| pk.polys.iter().map(|f| mq_eval(f, p.q, x)).collect())
            .collect();
        let mut c = Census {
            accepted: 0,
            trials: 0,
            disagreements: 0,
            bound: 2.0 / f64::from(p.q).powi(p.o as i32),
        };
        let mut rng = TestRng::new(7);
        for i in 0..messages {
            let msg = rng.bytes(24);
            let sig = mq_sign(&sk, &msg, &seed("mq-census-sign", i as u64)).unwrap();
            let target = hash_to_field(&msg, &sig.salt, p.o, p.q);
            for (x, image) in points.iter().zip(&images) {
                if *x == sig.x {
                    continue;
                }
                let forged = MqSignature { x: x.clone(), salt: sig.salt };
                let verdict = mq_verify(&pk, &msg, &forged).unwrap();
                c.disagreements += u64::from(verdict != (*image == target));
                c.accepted += u64::from(verdict);
                c.trials += 1;
            }
        }
        c
    }
}

// ---------------------------------------------------------------- brute-force checks

/// Disagreement counters between the library and the oracles above.
pub mod checks {
    use pqhs::code::{code_keygen_with_generator, decrypt as code_decrypt, encrypt as code_encrypt, hamming_7_4_generator, CodeParams};
    use pqhs::lattice::{decrypt, encrypt, lwe_keygen, LatticeParams};
    use pqhs::mq::{mq_keygen, MqParams};

    use super::*;

    /// Every message of the tiny lattice profile under `seeds` keys, each
    /// with all `2^m` randomizer row patterns.
    pub fn regev_tiny(seeds: u64) -> u64 {
        let p = LatticeParams::TINY;
        let q = i64::from(p.q);
        let mut disagreements = 0;
        for s in 0..seeds {
            let (pk, sk) = lwe_keygen(p, &seed("regev", s)).unwrap();
            let a: Vec<Vec<i64>> = pk
                .matrix()
                .chunks(p.n)
                .map(|row| row.iter().map(|&x| i64::from(x)).collect())
                .collect();
            let b: Vec<i64> = pk.b.iter().map(|&x| i64::from(x)).collect();
            let secret: Vec<i64> = sk.s.iter().map(|&x| i64::from(x)).collect();
            for (row, &bj) in a.iter().zip(&b) {
                let dot: i64 = row.iter().zip(&secret).map(|(x, y)| x * y).sum();
                let e = (bj - dot).rem_euclid(q);
                let e = if e > q / 2 { e - q } else { e };
                disagreements += u64::from(e.abs() > i64::from(p.eta));
            }
            for msg in 0..1u32 << p.ell {
                let bits: Vec<bool> = (0..p.ell).map(|i| msg >> i & 1 == 1).collect();
                for pattern in 0..1u32 << p.m {
                    let r: Vec<Vec<bool>> = (0..p.ell)
                        .map(|i| (0..p.m).map(|j| (pattern + i as u32) >> j & 1 == 1).collect())
                        .collect();
                    let ours = encrypt(&pk, &bits, &r);
                    let oracle = regev_encrypt(&a, &b, q, &bits, &r);
                    let same_u = ours.u.iter().map(|&x| i64::from(x)).eq(oracle.u.concat());
                    let same_v = ours.v.iter().map(|&x| i64::from(x)).eq(oracle.v.iter().copied());
                    disagreements += u64::from(!same_u || !same_v);
                    let recovered = decrypt(&sk, &ours).unwrap();
                    disagreements += u64::from(recovered != bits || regev_decrypt(&secret, q, &oracle) != bits);
                }
            }
        }
        disagreements
    }

    /// All 16 messages times all 7 single-bit errors, for `keys` keys.
    pub fn hamming(keys: u64) -> u64 {
        let p = CodeParams::HAMMING_7_4;
        let mut disagreements = 0;
        for s in 0..keys {
            let (pk, sk) = code_keygen_with_generator(p, hamming_7_4_generator(), &seed("hamming", s)).unwrap();
            for m in 0..16u128 {
                disagreements += u64::from(pk.encode(m) != gf2_encode(&pk.g_prime, p.n, m));
                for pos in 0..p.n {
                    let ct = code_encrypt(&pk, m, 1u128 << pos);
                    let oracle = nearest_messages(&pk.g_prime, p.n, 1, ct.c_prime);
                    disagreements += u64::from(oracle != vec![m] || code_decrypt(&sk, &ct).ok() != Some(m));
                }
            }
        }
        disagreements
    }

    /// Public map, composed secret map and both oracles at every point of
    /// the tiny MQ profile.
    pub fn mq_tiny(keys: u64) -> u64 {
        let p = MqParams::TINY;
        let mut disagreements = 0;
        for s in 0..keys {
            let (pk, sk) = mq_keygen(p, &seed("mq", s)).unwrap();
            for x in all_points(p.q, p.n_vars()) {
                let public: Vec<u32> = pk.polys.iter().map(|f| mq_eval(f, p.q, &x)).collect();
                let y = affine_apply(&sk.affine, p.q, &x);
                let composed: Vec<u32> = sk.central.iter().map(|f| mq_eval(f, p.q, &y)).collect();
                disagreements += u64::from(
                    pk.evaluate(&x) != public || public != composed || sk.evaluate_composed(&x) != composed,
                );
            }
        }
        disagreements
    }
}
