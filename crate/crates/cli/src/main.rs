//! `pqhs` command-line tool.
//!
//! Failures print one line to stderr, `error[<category>]: <message>`, and
//! exit with status 1. Usage errors exit with status 2.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pqhs::audit::{
    encode_log_record, leaf_hash, parse_log, verify_checkpoint, verify_inclusion, AuditTree, InclusionProof,
    SignedCheckpoint,
};
use pqhs::bench::{
    calibrate_costs, default_sim_config, read_csv, reference_costs, run_suite, security_level, sweep_profiles,
    BenchRecord, Suite, SuiteConfig, SweepRow, SWEEP_CSV_HEADER,
};
use pqhs::handshake::{run_loopback, HandshakeConfig, PqcKem};
use pqhs::hybrid::{AuthPolicy, Mode, PqcSecretKey, SigningKeys};
use pqhs::keyfile::{keygen, AnyPublicKey, AnySecretKey, ParamSet, Scheme};
use pqhs::lattice::LatticeParams;
use pqhs::legacy::{legacy_keygen, LegacyParams};
use pqhs::netsim::{sim_run, sim_sweep, default_sweep_counts, SimConfig, SimProfile};
use pqhs::primitives::{hash, Digest, RandomSeed};

const EXIT_FAILURE: u8 = 1;

#[derive(Parser)]
#[command(name = "pqhs", version, about = "Desk-scale hybrid post-quantum crypto suite")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a key pair and write both key files.
    Keygen(KeygenArgs),
    /// Encapsulate to a public key; prints the shared secret as hex.
    Encaps(EncapsArgs),
    /// Decapsulate a ciphertext; prints the shared secret as hex.
    Decaps(DecapsArgs),
    /// Sign a message file. Hash-signature keys are rewritten with the advanced index.
    Sign(SignArgs),
    /// Verify a signature; prints `valid` or fails with `invalid-signature`.
    Verify(VerifyArgs),
    /// Run a loopback handshake and print both endpoints' session digests.
    HandshakeDemo(HandshakeArgs),
    /// Merkle audit log operations.
    #[command(subcommand)]
    Audit(AuditCommand),
    /// Run the benchmark suite and write CSV and JSON reports.
    Bench(BenchArgs),
    /// Simulate concurrent handshakes; prints sweep CSV rows.
    Simulate(SimulateArgs),
    /// Print `classical,quantum` security bits for a scheme.
    Seclevel {
        #[arg(long)]
        scheme: String,
    },
}

#[derive(Args)]
struct SchemeSelect {
    /// lattice, code, mq, hsig or legacy.
    #[arg(long)]
    scheme: Option<String>,
    /// Named parameter set (e.g. desk-512, rsa-2048).
    #[arg(long)]
    params: Option<String>,
}

#[derive(Args)]
struct KeygenArgs {
    #[arg(long)]
    scheme: String,
    #[arg(long)]
    params: Option<String>,
    /// 64 hex digits, or any other text (hashed to a seed).
    #[arg(long)]
    seed: String,
    #[arg(long)]
    pk: PathBuf,
    #[arg(long)]
    sk: PathBuf,
}

#[derive(Args)]
struct EncapsArgs {
    #[command(flatten)]
    select: SchemeSelect,
    #[arg(long)]
    pk: PathBuf,
    #[arg(long)]
    seed: String,
    /// Where to write the ciphertext.
    #[arg(long)]
    ct: PathBuf,
}

#[derive(Args)]
struct DecapsArgs {
    #[command(flatten)]
    select: SchemeSelect,
    #[arg(long)]
    sk: PathBuf,
    #[arg(long)]
    ct: PathBuf,
}

#[derive(Args)]
struct SignArgs {
    #[command(flatten)]
    select: SchemeSelect,
    #[arg(long)]
    sk: PathBuf,
    #[arg(long)]
    msg: PathBuf,
    #[arg(long)]
    sig: PathBuf,
    #[arg(long)]
    seed: String,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    select: SchemeSelect,
    #[arg(long)]
    pk: PathBuf,
    #[arg(long)]
    msg: PathBuf,
    #[arg(long)]
    sig: PathBuf,
}

#[derive(Args)]
struct HandshakeArgs {
    /// classical, pqc or hybrid.
    #[arg(long, default_value = "hybrid")]
    mode: String,
    /// legacy, pqc, both or either.
    #[arg(long, default_value = "both")]
    policy: String,
    /// Server pqc signature scheme: mq or hsig.
    #[arg(long, default_value = "mq")]
    auth: String,
    #[arg(long, default_value = "handshake-demo")]
    seed: String,
    /// Use small parameters (desk-small lattice, RSA-1024).
    #[arg(long)]
    quick: bool,
}

#[derive(Subcommand)]
enum AuditCommand {
    /// Append a record to the log file; prints the new index.
    Append {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        record: String,
    },
    /// Print the current root and size.
    Root {
        #[arg(long)]
        log: PathBuf,
    },
    /// Write an inclusion proof for one index.
    Prove {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        index: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check an inclusion proof against a root.
    Verify {
        /// Root as 64 hex digits.
        #[arg(long)]
        root: String,
        #[arg(long)]
        index: u64,
        #[arg(long)]
        record: String,
        #[arg(long)]
        proof: PathBuf,
    },
    /// Sign the current root with a hash-signature key (the key file is updated).
    Checkpoint {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        sk: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Verify a checkpoint file, optionally against a log.
    VerifyCheckpoint {
        #[arg(long)]
        pk: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        log: Option<PathBuf>,
    },
}

#[derive(Args)]
struct BenchArgs {
    /// quick or full.
    #[arg(long, default_value = "quick")]
    suite: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<String>,
    /// Measure schemes on parallel worker threads.
    #[arg(long)]
    parallel: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Session count for a single run.
    #[arg(long, conflicts_with = "sweep")]
    sessions: Option<usize>,
    /// Sweep 100..1000 sessions in steps of 100.
    #[arg(long)]
    sweep: bool,
    /// mq-auth-hybrid or hsig-auth-hybrid.
    #[arg(long, default_value = "mq-auth-hybrid")]
    profile: String,
    /// Calibrate costs from a bench.csv instead of the reference table.
    #[arg(long)]
    bench_csv: Option<PathBuf>,
    #[arg(long)]
    latency_us: Option<u64>,
    /// Link bandwidth in bytes per second.
    #[arg(long)]
    bandwidth: Option<u64>,
    #[arg(long)]
    cores: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

/// Error reported as `error[category]: message`.
struct Failure {
    category: &'static str,
    message: String,
}

impl Failure {
    fn new(category: &'static str, message: impl std::fmt::Display) -> Self {
        Self {
            category,
            message: message.to_string(),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn io<E: std::fmt::Display>(path: &Path) -> impl FnOnce(E) -> Failure + '_ {
    move |e| Failure::new("io", format!("{}: {e}", path.display()))
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(io(path))
}

fn write(path: &Path, bytes: &[u8]) -> CmdResult {
    fs::write(path, bytes).map_err(io(path))
}

/// 64 hex digits are taken literally; anything else is hashed.
fn parse_seed(text: &str) -> RandomSeed {
    match hex::decode(text) {
        Ok(bytes) if bytes.len() == 32 => RandomSeed::from_slice(&bytes).expect("32 bytes"),
        _ => RandomSeed(hash(text.as_bytes()).0),
    }
}

fn parse_params(scheme: &str, params: Option<&str>) -> Result<ParamSet, Failure> {
    let scheme = Scheme::parse(scheme).map_err(|e| Failure::new("unknown-scheme", e))?;
    match params {
        Some(name) => ParamSet::parse(scheme, name).map_err(|e| Failure::new("unknown-params", e)),
        None => Ok(scheme.default_params()),
    }
}

/// Rejects a key whose scheme or parameters differ from explicit flags.
fn check_select(select: &SchemeSelect, actual: ParamSet) -> CmdResult {
    if let Some(scheme) = &select.scheme {
        let wanted = parse_params(scheme, select.params.as_deref())?;
        let params_match = select.params.is_none() || wanted == actual;
        if wanted.scheme() != actual.scheme() || !params_match {
            return Err(Failure::new(
                "key-mismatch",
                format!("key is {}/{}", actual.scheme(), actual.name()),
            ));
        }
    } else if select.params.is_some() {
        return Err(Failure::new("usage", "--params requires --scheme"));
    }
    Ok(())
}

fn load_pk(path: &Path) -> Result<AnyPublicKey, Failure> {
    AnyPublicKey::from_file_bytes(&read(path)?).map_err(|e| Failure::new("key", e))
}

fn load_sk(path: &Path) -> Result<AnySecretKey, Failure> {
    AnySecretKey::from_file_bytes(&read(path)?).map_err(|e| Failure::new("key", e))
}

fn cmd_keygen(a: KeygenArgs) -> CmdResult {
    let params = parse_params(&a.scheme, a.params.as_deref())?;
    let (pk, sk) = keygen(params, &parse_seed(&a.seed)).map_err(|e| Failure::new("crypto", e))?;
    write(&a.pk, &pk.to_file_bytes())?;
    write(&a.sk, &sk.to_file_bytes())?;
    println!("{}/{} pk={} sk={}", params.scheme(), params.name(), a.pk.display(), a.sk.display());
    Ok(())
}

fn cmd_encaps(a: EncapsArgs) -> CmdResult {
    let pk = load_pk(&a.pk)?;
    check_select(&a.select, pk.params())?;
    let (ct, ss) = pk.encaps(&parse_seed(&a.seed)).map_err(|e| Failure::new("crypto", e))?;
    write(&a.ct, &ct)?;
    println!("{}", ss.to_hex());
    Ok(())
}

fn cmd_decaps(a: DecapsArgs) -> CmdResult {
    let sk = load_sk(&a.sk)?;
    check_select(&a.select, sk.params())?;
    let ss = sk.decaps(&read(&a.ct)?).map_err(|e| Failure::new("crypto", e))?;
    println!("{}", ss.to_hex());
    Ok(())
}

fn cmd_sign(a: SignArgs) -> CmdResult {
    let mut sk = load_sk(&a.sk)?;
    check_select(&a.select, sk.params())?;
    let msg = read(&a.msg)?;
    let sig = sk.sign(&msg, &parse_seed(&a.seed)).map_err(|e| Failure::new("crypto", e))?;
    if sk.scheme() == Scheme::HashSig {
        // Persist the advanced index before releasing the signature.
        write(&a.sk, &sk.to_file_bytes())?;
    }
    write(&a.sig, &sig)?;
    println!("signed {} bytes", sig.len());
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> CmdResult {
    let pk = load_pk(&a.pk)?;
    check_select(&a.select, pk.params())?;
    let valid = pk
        .verify(&read(&a.msg)?, &read(&a.sig)?)
        .map_err(|e| Failure::new("crypto", e))?;
    if !valid {
        return Err(Failure::new("invalid-signature", "signature does not verify"));
    }
    println!("valid");
    Ok(())
}

fn cmd_handshake(a: HandshakeArgs) -> CmdResult {
    let mode = Mode::parse(&a.mode).ok_or_else(|| Failure::new("usage", format!("unknown mode {}", a.mode)))?;
    let policy =
        AuthPolicy::parse(&a.policy).ok_or_else(|| Failure::new("usage", format!("unknown policy {}", a.policy)))?;
    let seed = parse_seed(&a.seed);
    let (lattice, legacy) = if a.quick {
        (LatticeParams::DESK_SMALL, LegacyParams::RSA_1024)
    } else {
        (LatticeParams::DESK_512, LegacyParams::RSA_2048)
    };
    let crypto = |e: &dyn std::fmt::Display| Failure::new("crypto", e);
    let server_legacy = legacy_keygen(legacy, &seed.derive(b"demo-server-legacy"))
        .map_err(|e| crypto(&e))?
        .1;
    let pqc_params = match a.auth.as_str() {
        "mq" => ParamSet::Mq(pqhs::mq::MqParams::DESK),
        "hsig" => ParamSet::HashSig(pqhs::hashsig::HashSigParams::SMALL),
        other => return Err(Failure::new("usage", format!("unknown auth scheme {other}"))),
    };
    let pqc = match keygen(pqc_params, &seed.derive(b"demo-server-pqc")).map_err(|e| crypto(&e))?.1 {
        AnySecretKey::Mq(sk) => PqcSecretKey::Mq(sk),
        AnySecretKey::HashSig(sk) => PqcSecretKey::Hash(sk),
        _ => unreachable!("pqc signature parameter set"),
    };
    let keys = SigningKeys {
        legacy: Some(server_legacy),
        pqc: Some(pqc),
    };
    let client = HandshakeConfig::client([mode].into_iter().collect(), policy)
        .with_pqc_kem(PqcKem::Lattice(lattice))
        .with_legacy(legacy);
    let mut server = HandshakeConfig::server(Mode::ALL.into_iter().collect(), keys)
        .with_pqc_kem(PqcKem::Lattice(lattice))
        .with_legacy(legacy);
    let t = run_loopback(&client, &mut server, &seed.derive(b"demo-client"), &seed.derive(b"demo-server"))
        .map_err(|e| Failure::new("handshake", e))?;
    println!("mode={}", t.mode);
    println!("client_session_digest={}", t.client_keys.digest().to_hex());
    println!("server_session_digest={}", t.server_keys.digest().to_hex());
    println!("wire_bytes={}", t.wire_bytes());
    Ok(())
}

fn load_tree(log: &Path) -> Result<AuditTree, Failure> {
    let bytes = match fs::read(log) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(io(log)(e)),
    };
    let records = parse_log(&bytes).map_err(|e| Failure::new("audit", e))?;
    Ok(AuditTree::from_records(records))
}

fn parse_digest(text: &str) -> Result<Digest, Failure> {
    hex::decode(text)
        .ok()
        .and_then(|b| Digest::from_slice(&b))
        .ok_or_else(|| Failure::new("usage", "expected 64 hex digits"))
}

fn cmd_audit(c: AuditCommand) -> CmdResult {
    let audit = |e: &dyn std::fmt::Display| Failure::new("audit", e);
    match c {
        AuditCommand::Append { log, record } => {
            let index = load_tree(&log)?.len();
            let mut file = fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(&log)
                .map_err(io(&log))?;
            std::io::Write::write_all(&mut file, &encode_log_record(record.as_bytes())).map_err(io(&log))?;
            println!("{index}");
        }
        AuditCommand::Root { log } => {
            let tree = load_tree(&log)?;
            let root = tree.root().map_err(|e| audit(&e))?;
            println!("root={} size={}", root.to_hex(), tree.len());
        }
        AuditCommand::Prove { log, index, out } => {
            let proof = load_tree(&log)?.prove_inclusion(index).map_err(|e| audit(&e))?;
            write(&out, &proof.to_bytes())?;
            println!("proof siblings={}", proof.siblings.len());
        }
        AuditCommand::Verify {
            root,
            index,
            record,
            proof,
        } => {
            let root = parse_digest(&root)?;
            let proof = InclusionProof::from_bytes(&read(&proof)?).map_err(|e| audit(&e))?;
            let ok = verify_inclusion(&root, index, &leaf_hash(record.as_bytes()), &proof).map_err(|e| audit(&e))?;
            if !ok {
                return Err(Failure::new("invalid-proof", "inclusion proof does not match root"));
            }
            println!("valid");
        }
        AuditCommand::Checkpoint { log, sk, out } => {
            let tree = load_tree(&log)?;
            let mut key = match load_sk(&sk)? {
                AnySecretKey::HashSig(k) => k,
                other => return Err(Failure::new("key-mismatch", format!("checkpoint needs an hsig key, got {}", other.scheme()))),
            };
            let params = key.public_key().params;
            let cp = tree.checkpoint(&mut key).map_err(|e| audit(&e))?;
            write(&sk, &AnySecretKey::HashSig(key).to_file_bytes())?;
            write(&out, &cp.to_frame(&params))?;
            println!("checkpoint size={} root={}", cp.tree_size, cp.root.to_hex());
        }
        AuditCommand::VerifyCheckpoint { pk, checkpoint, log } => {
            let pk = match load_pk(&pk)? {
                AnyPublicKey::HashSig(k) => k,
                other => return Err(Failure::new("key-mismatch", format!("checkpoint needs an hsig key, got {}", other.scheme()))),
            };
            let (params, cp) = SignedCheckpoint::from_frame(&read(&checkpoint)?).map_err(|e| audit(&e))?;
            if params != pk.params || !verify_checkpoint(&pk, &cp) {
                return Err(Failure::new("invalid-checkpoint", "checkpoint signature does not verify"));
            }
            if let Some(log) = log {
                if !load_tree(&log)?.matches_checkpoint(&cp) {
                    return Err(Failure::new("invalid-checkpoint", "log does not match checkpoint"));
                }
            }
            println!("valid");
        }
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> CmdResult {
    let suite = Suite::parse(&a.suite).ok_or_else(|| Failure::new("usage", format!("unknown suite {}", a.suite)))?;
    let mut config = SuiteConfig::new(suite, &a.out);
    if let Some(seed) = &a.seed {
        config.seed = parse_seed(seed);
    }
    config.parallel = a.parallel;
    let (report, paths) = run_suite(&config).map_err(|e| Failure::new("bench", e))?;
    println!(
        "bench rows={} sweep rows={} security rows={}",
        report.bench.len(),
        report.sweep.len(),
        report.security.len()
    );
    for p in paths {
        println!("{}", p.display());
    }
    Ok(())
}

fn cmd_simulate(a: SimulateArgs) -> CmdResult {
    let mut profile = SimProfile::by_name(&a.profile)
        .ok_or_else(|| Failure::new("usage", format!("unknown profile {}", a.profile)))?;
    let costs = match &a.bench_csv {
        Some(path) => {
            let records: Vec<BenchRecord> = read_csv(path).map_err(|e| Failure::new("bench", e))?;
            let find = |scheme: Scheme| {
                records
                    .iter()
                    .find(|r| r.scheme.starts_with(&format!("{scheme}/")))
                    .map(|r| r.scheme.clone())
                    .ok_or_else(|| Failure::new("bench", format!("bench.csv has no {scheme} rows")))
            };
            let names = [find(Scheme::Legacy)?, find(Scheme::Lattice)?, find(Scheme::Mq)?, find(Scheme::HashSig)?];
            let schemes: Vec<ParamSet> = names
                .iter()
                .filter_map(|n| pqhs::bench::parse_bench_name(n).ok())
                .collect();
            let matched = sweep_profiles(&schemes)
                .into_iter()
                .find(|p| p.name == profile.name)
                .expect("profile names are fixed");
            profile = matched;
            calibrate_costs(&records, &names[0], &names[1], &names[2], &names[3]).map_err(|e| Failure::new("bench", e))?
        }
        None => reference_costs(),
    };
    let defaults = default_sim_config(costs);
    let config = SimConfig {
        latency_us: a.latency_us.unwrap_or(defaults.latency_us),
        bandwidth_bps: a.bandwidth.or(defaults.bandwidth_bps),
        cores: a.cores.unwrap_or(defaults.cores),
        seed: a.seed,
        ..defaults
    };
    let sim = |e: &dyn std::fmt::Display| Failure::new("sim", e);
    let results = if a.sweep {
        sim_sweep(&config, &profile, &default_sweep_counts()).map_err(|e| sim(&e))?
    } else {
        let sessions = a.sessions.unwrap_or(100);
        let config = SimConfig { sessions, ..config };
        vec![(sessions, sim_run(&config, &profile).map_err(|e| sim(&e))?)]
    };
    let mut w = csv::Writer::from_writer(std::io::stdout());
    if results.is_empty() {
        println!("{SWEEP_CSV_HEADER}");
    }
    for (sessions, m) in results {
        w.serialize(SweepRow {
            profile: profile.name.clone(),
            sessions,
            mean_us: m.mean_us,
            p50_us: m.p50_us,
            p95_us: m.p95_us,
            wire_bytes: m.wire_bytes,
        })
        .map_err(|e| Failure::new("io", e))?;
    }
    w.flush().map_err(|e| Failure::new("io", e))?;
    Ok(())
}

fn cmd_seclevel(scheme: &str) -> CmdResult {
    let p = security_level(scheme).map_err(|e| Failure::new("unknown-scheme", e))?;
    println!("{},{}", p.classical_bits, p.quantum_bits);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Keygen(a) => cmd_keygen(a),
        Command::Encaps(a) => cmd_encaps(a),
        Command::Decaps(a) => cmd_decaps(a),
        Command::Sign(a) => cmd_sign(a),
        Command::Verify(a) => cmd_verify(a),
        Command::HandshakeDemo(a) => cmd_handshake(a),
        Command::Audit(c) => cmd_audit(c),
        Command::Bench(a) => cmd_bench(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Seclevel { scheme } => cmd_seclevel(&scheme),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error[{}]: {}", f.category, f.message.replace('\n', " "));
            ExitCode::from(EXIT_FAILURE)
        }
    }
}
