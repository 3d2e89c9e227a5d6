//! Benchmark harness, security table and report writers.
//!
//! Timings are wall-clock and host dependent; sizes come from actual
//! serializations. The hash-invocation counter gives a portable work figure
//! per operation.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hybrid::Mode;
use crate::keyfile::{keygen, AnyPublicKey, AnySecretKey, KeyError, ParamSet, Scheme};
use crate::netsim::{ops, percentile, sim_sweep, SimConfig, SimError, SimProfile};
use crate::primitives::{hash_invocations, RandomSeed};

pub const WARMUP_ITERATIONS: usize = 10;

pub const BENCH_CSV_HEADER: &str = "scheme,operation,iterations,mean_ns,p50_ns,p95_ns,pk_bytes,sk_bytes,ct_or_sig_bytes";
pub const SWEEP_CSV_HEADER: &str = "profile,sessions,mean_us,p50_us,p95_us,wire_bytes";

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown scheme {0}")]
    UnknownScheme(String),
    #[error("operation {operation} not available for {scheme}")]
    UnknownOp { scheme: String, operation: String },
    #[error("invalid benchmark request: {0}")]
    Invalid(String),
    #[error("key operation failed: {0}")]
    Key(#[from] KeyError),
    #[error("simulation failed: {0}")]
    Sim(#[from] SimError),
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operation {
    Keygen,
    Encaps,
    Decaps,
    Sign,
    Verify,
}

impl Operation {
    pub const ALL: [Operation; 5] = [
        Operation::Keygen,
        Operation::Encaps,
        Operation::Decaps,
        Operation::Sign,
        Operation::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Operation::Keygen => "keygen",
            Operation::Encaps => "encaps",
            Operation::Decaps => "decaps",
            Operation::Sign => "sign",
            Operation::Verify => "verify",
        }
    }

    pub fn parse(s: &str) -> Option<Operation> {
        Operation::ALL.into_iter().find(|o| o.name() == s)
    }

    fn supported_by(self, scheme: Scheme) -> bool {
        match self {
            Operation::Keygen => true,
            Operation::Encaps | Operation::Decaps => scheme.is_kem(),
            Operation::Sign | Operation::Verify => scheme.is_signature(),
        }
    }
}

/// Benchmark name of a parameter set, e.g. `lattice/desk-512`.
pub fn bench_name(params: &ParamSet) -> String {
    format!("{}/{}", params.scheme(), params.name())
}

pub fn parse_bench_name(name: &str) -> Result<ParamSet, BenchError> {
    let unknown = || BenchError::UnknownScheme(name.to_string());
    let (scheme, params) = name.split_once('/').ok_or_else(unknown)?;
    let scheme = Scheme::parse(scheme).map_err(|_| unknown())?;
    ParamSet::parse(scheme, params).map_err(|_| unknown())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub scheme: String,
    pub operation: Operation,
    pub iterations: usize,
    pub mean_ns: u64,
    pub p50_ns: u64,
    pub p95_ns: u64,
    pub pk_bytes: usize,
    pub sk_bytes: usize,
    pub ct_or_sig_bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkRecord {
    pub scheme: String,
    pub operation: Operation,
    pub hash_invocations_per_op: u64,
}

struct Fixture {
    pk: AnyPublicKey,
    sk: AnySecretKey,
    ct: Option<Vec<u8>>,
    sig: Option<Vec<u8>>,
    pk_bytes: usize,
    sk_bytes: usize,
}

impl Fixture {
    fn new(params: ParamSet, seed: &RandomSeed) -> Result<Self, BenchError> {
        let (pk, mut sk) = keygen(params, &seed.derive(b"bench-keygen"))?;
        let (pk_bytes, sk_bytes) = (pk.to_bytes().len(), sk.to_bytes().len());
        let ct = if params.scheme().is_kem() {
            Some(pk.encaps(&seed.derive(b"bench-ct"))?.0)
        } else {
            None
        };
        let sig = if params.scheme().is_signature() {
            Some(sk.sign(b"bench message", &seed.derive(b"bench-sig"))?)
        } else {
            None
        };
        Ok(Self {
            pk,
            sk,
            ct,
            sig,
            pk_bytes,
            sk_bytes,
        })
    }

    fn ct_or_sig_bytes(&self, op: Operation) -> usize {
        let sig = self.sig.as_ref().map(Vec::len);
        let ct = self.ct.as_ref().map(Vec::len);
        match op {
            Operation::Sign | Operation::Verify => sig.or(ct),
            _ => ct.or(sig),
        }
        .unwrap_or(0)
    }

    fn run_once(&mut self, params: ParamSet, op: Operation, seed: &RandomSeed) -> Result<(), BenchError> {
        match op {
            Operation::Keygen => {
                keygen(params, seed)?;
            }
            Operation::Encaps => {
                self.pk.encaps(seed)?;
            }
            Operation::Decaps => {
                self.sk.decaps(self.ct.as_ref().expect("kem fixture"))?;
            }
            Operation::Sign => {
                self.sk.sign(b"bench message", seed)?;
            }
            Operation::Verify => {
                let ok = self.pk.verify(b"bench message", self.sig.as_ref().expect("signature fixture"))?;
                assert!(ok, "benchmark fixture signature must verify");
            }
        }
        Ok(())
    }
}

fn check_request(params: ParamSet, op: Operation, iterations: usize) -> Result<(), BenchError> {
    if !op.supported_by(params.scheme()) {
        return Err(BenchError::UnknownOp {
            scheme: bench_name(&params),
            operation: op.name().to_string(),
        });
    }
    if iterations == 0 {
        return Err(BenchError::Invalid("iterations must be at least 1".into()));
    }
    if let (ParamSet::HashSig(p), Operation::Sign) = (params, op) {
        // The fixture itself consumes one leaf.
        let needed = (iterations + WARMUP_ITERATIONS + 1) as u64;
        if needed > p.capacity() {
            return Err(BenchError::Invalid(format!(
                "{needed} signatures exceed the key capacity {}",
                p.capacity()
            )));
        }
    }
    Ok(())
}

/// Times `iterations` runs of `op` after [`WARMUP_ITERATIONS`] untimed runs.
pub fn measure(params: ParamSet, op: Operation, iterations: usize, seed: &RandomSeed) -> Result<BenchRecord, BenchError> {
    check_request(params, op, iterations)?;
    let mut fixture = Fixture::new(params, seed)?;
    for i in 0..WARMUP_ITERATIONS {
        fixture.run_once(params, op, &seed.derive_indexed(b"bench-warmup", i as u64))?;
    }
    let mut samples = Vec::with_capacity(iterations);
    for i in 0..iterations {
        let iter_seed = seed.derive_indexed(b"bench-iter", i as u64);
        let start = Instant::now();
        fixture.run_once(params, op, &iter_seed)?;
        samples.push(start.elapsed().as_nanos() as u64);
    }
    let mean_ns = samples.iter().sum::<u64>() / iterations as u64;
    samples.sort_unstable();
    Ok(BenchRecord {
        scheme: bench_name(&params),
        operation: op,
        iterations,
        mean_ns,
        p50_ns: percentile(&samples, 50),
        p95_ns: percentile(&samples, 95),
        pk_bytes: fixture.pk_bytes,
        sk_bytes: fixture.sk_bytes,
        ct_or_sig_bytes: fixture.ct_or_sig_bytes(op),
    })
}

/// Mean hash invocations per run of `op` over `iterations` runs.
pub fn measure_work(params: ParamSet, op: Operation, iterations: usize, seed: &RandomSeed) -> Result<WorkRecord, BenchError> {
    check_request(params, op, iterations)?;
    let mut fixture = Fixture::new(params, seed)?;
    let before = hash_invocations();
    for i in 0..iterations {
        fixture.run_once(params, op, &seed.derive_indexed(b"bench-iter", i as u64))?;
    }
    Ok(WorkRecord {
        scheme: bench_name(&params),
        operation: op,
        hash_invocations_per_op: (hash_invocations() - before) / iterations as u64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SecuritySource {
    Reference,
    DeskEstimate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SecurityProfile {
    pub scheme: String,
    pub classical_bits: u32,
    pub quantum_bits: u32,
    pub source: SecuritySource,
}

/// `(name, classical, quantum, source)`. Desk estimates are coarse figures
/// for this suite's toy parameters, not values from the literature.
const SECURITY_TABLE: &[(&str, u32, u32, SecuritySource)] = &[
    ("rsa-3072", 128, 0, SecuritySource::Reference),
    ("ecc-256", 128, 0, SecuritySource::Reference),
    ("aes-128", 128, 64, SecuritySource::Reference),
    ("aes-256", 256, 128, SecuritySource::Reference),
    ("kyber", 192, 192, SecuritySource::Reference),
    ("dilithium", 192, 192, SecuritySource::Reference),
    ("sphincs+", 128, 128, SecuritySource::Reference),
    ("legacy/rsa-2048", 112, 0, SecuritySource::DeskEstimate),
    ("legacy/rsa-3072", 128, 0, SecuritySource::DeskEstimate),
    ("lattice/desk-512", 80, 72, SecuritySource::DeskEstimate),
    ("code/desk-code", 12, 6, SecuritySource::DeskEstimate),
    ("code/paper-shape", 16, 8, SecuritySource::DeskEstimate),
    ("mq/desk-uov", 48, 32, SecuritySource::DeskEstimate),
    ("hsig/desk", 256, 128, SecuritySource::DeskEstimate),
];

pub fn security_level(scheme: &str) -> Result<SecurityProfile, BenchError> {
    SECURITY_TABLE
        .iter()
        .find(|e| e.0 == scheme)
        .map(|&(name, classical_bits, quantum_bits, source)| SecurityProfile {
            scheme: name.to_string(),
            classical_bits,
            quantum_bits,
            source,
        })
        .ok_or_else(|| BenchError::UnknownScheme(scheme.to_string()))
}

pub fn security_table() -> Vec<SecurityProfile> {
    SECURITY_TABLE
        .iter()
        .map(|e| security_level(e.0).expect("table entry"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub profile: String,
    pub sessions: usize,
    pub mean_us: f64,
    pub p50_us: u64,
    pub p95_us: u64,
    pub wire_bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireRow {
    pub profile: String,
    pub mode: String,
    pub client_hello: usize,
    pub server_hello: usize,
    pub finish: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    /// Small parameters and few iterations; finishes in seconds.
    Quick,
    /// Default parameters.
    Full,
}

impl Suite {
    pub fn parse(s: &str) -> Option<Suite> {
        match s {
            "quick" => Some(Suite::Quick),
            "full" => Some(Suite::Full),
            _ => None,
        }
    }

    /// One parameter set per family.
    pub fn schemes(self) -> Vec<ParamSet> {
        let names: &[&str] = match self {
            Suite::Quick => &["lattice/desk-small", "code/desk-code", "mq/desk-uov", "hsig/small", "legacy/rsa-1024"],
            Suite::Full => &["lattice/desk-512", "code/desk-code", "mq/desk-uov", "hsig/desk", "legacy/rsa-2048"],
        };
        names.iter().map(|n| parse_bench_name(n).expect("registered")).collect()
    }

    fn iterations(self, op: Operation) -> usize {
        match (self, op) {
            (Suite::Quick, Operation::Keygen) => 2,
            (Suite::Quick, _) => 5,
            (Suite::Full, Operation::Keygen) => 5,
            (Suite::Full, _) => 100,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub suite: Suite,
    pub out_dir: PathBuf,
    pub seed: RandomSeed,
    /// Measure schemes on separate threads. Each timing loop stays on one thread.
    pub parallel: bool,
    pub sim: SimConfig,
    pub sweep_counts: Vec<usize>,
}

impl SuiteConfig {
    pub fn new(suite: Suite, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            suite,
            out_dir: out_dir.into(),
            seed: RandomSeed([0x5E; 32]),
            parallel: false,
            sim: default_sim_config(BTreeMap::new()),
            sweep_counts: crate::netsim::default_sweep_counts(),
        }
    }
}

/// Link and server model used for sweeps: 1 ms one-way latency, 1 Gbit/s,
/// four server cores.
pub fn default_sim_config(costs: BTreeMap<String, u64>) -> SimConfig {
    SimConfig {
        latency_us: 1_000,
        bandwidth_bps: Some(125_000_000),
        costs,
        cores: 4,
        sessions: 1,
        seed: 1,
    }
}

/// Medians (microseconds) from one release-build `bench --suite full` run on
/// the development host, for simulations without fresh calibration data.
pub fn reference_costs() -> BTreeMap<String, u64> {
    BTreeMap::from([
        (ops::LEGACY_ENCAPS.to_string(), 164),
        (ops::LATTICE_ENCAPS.to_string(), 5_622),
        (ops::LEGACY_SIGN.to_string(), 1_585),
        (ops::MQ_SIGN.to_string(), 120),
        (ops::HSIG_SIGN.to_string(), 1_550),
        (ops::SERVER_FINISH.to_string(), 0),
    ])
}

/// Converts benchmark medians into a simulator cost table (microseconds,
/// rounded up, at least 1).
///
/// The Finish check is a single hash comparison and is costed at zero, so it
/// never waits behind queued responses.
pub fn calibrate_costs(records: &[BenchRecord], legacy: &str, lattice: &str, mq: &str, hsig: &str) -> Result<BTreeMap<String, u64>, BenchError> {
    let p50 = |scheme: &str, op: Operation| {
        records
            .iter()
            .find(|r| r.scheme == scheme && r.operation == op)
            .map(|r| r.p50_ns.div_ceil(1000).max(1))
            .ok_or_else(|| BenchError::Invalid(format!("missing {scheme} {} record for calibration", op.name())))
    };
    Ok(BTreeMap::from([
        (ops::LEGACY_ENCAPS.to_string(), p50(legacy, Operation::Encaps)?),
        (ops::LATTICE_ENCAPS.to_string(), p50(lattice, Operation::Encaps)?),
        (ops::LEGACY_SIGN.to_string(), p50(legacy, Operation::Sign)?),
        (ops::MQ_SIGN.to_string(), p50(mq, Operation::Sign)?),
        (ops::HSIG_SIGN.to_string(), p50(hsig, Operation::Sign)?),
        (ops::SERVER_FINISH.to_string(), 0),
    ]))
}

/// Simulator profiles matching the suite's schemes.
pub fn sweep_profiles(schemes: &[ParamSet]) -> Vec<SimProfile> {
    let mut mq = SimProfile::mq_hybrid();
    let mut hsig = SimProfile::hsig_hybrid();
    for p in schemes {
        for profile in [&mut mq, &mut hsig] {
            match *p {
                ParamSet::Lattice(l) => profile.lattice = l,
                ParamSet::Legacy(l) => {
                    profile.legacy_kem = l;
                    profile.legacy_sig = Some(l);
                }
                _ => {}
            }
        }
        match *p {
            ParamSet::Mq(m) => mq.auth = crate::netsim::AuthScheme::Mq(m),
            ParamSet::HashSig(h) => hsig.auth = crate::netsim::AuthScheme::HashSig(h),
            _ => {}
        }
    }
    vec![mq, hsig]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub bench: Vec<BenchRecord>,
    pub work: Vec<WorkRecord>,
    pub sweep: Vec<SweepRow>,
    pub wire: Vec<WireRow>,
    pub security: Vec<SecurityProfile>,
}

fn measure_scheme(suite: Suite, params: ParamSet, seed: &RandomSeed) -> Result<(Vec<BenchRecord>, Vec<WorkRecord>), BenchError> {
    let mut bench = Vec::new();
    let mut work = Vec::new();
    for op in Operation::ALL.into_iter().filter(|op| op.supported_by(params.scheme())) {
        let op_seed = seed.derive(format!("{}/{}", bench_name(&params), op.name()).as_bytes());
        bench.push(measure(params, op, suite.iterations(op), &op_seed)?);
        work.push(measure_work(params, op, 1, &op_seed)?);
    }
    Ok((bench, work))
}

/// Runs the benchmark matrix, the handshake wire count, the netsim sweep and
/// the security table, returning the combined report.
pub fn run_benchmarks(config: &SuiteConfig) -> Result<Report, BenchError> {
    let schemes = config.suite.schemes();
    let results: Vec<Result<_, BenchError>> = if config.parallel {
        std::thread::scope(|scope| {
            let handles: Vec<_> = schemes
                .iter()
                .map(|&p| scope.spawn(move || measure_scheme(config.suite, p, &config.seed)))
                .collect();
            handles.into_iter().map(|h| h.join().expect("bench worker panicked")).collect()
        })
    } else {
        schemes.iter().map(|&p| measure_scheme(config.suite, p, &config.seed)).collect()
    };
    let mut bench = Vec::new();
    let mut work = Vec::new();
    for r in results {
        let (b, w) = r?;
        bench.extend(b);
        work.extend(w);
    }
    if config.suite == Suite::Full {
        let rsa_3072 = parse_bench_name("legacy/rsa-3072").expect("registered");
        bench.push(measure(rsa_3072, Operation::Keygen, 1, &config.seed)?);
    }

    let names: Vec<String> = schemes.iter().map(bench_name).collect();
    let find = |s: Scheme| names[schemes.iter().position(|p| p.scheme() == s).expect("one per family")].clone();
    let costs = calibrate_costs(
        &bench,
        &find(Scheme::Legacy),
        &find(Scheme::Lattice),
        &find(Scheme::Mq),
        &find(Scheme::HashSig),
    )?;
    let sim = SimConfig {
        costs,
        ..config.sim.clone()
    };
    let profiles = sweep_profiles(&schemes);
    let mut sweep = Vec::new();
    for profile in &profiles {
        for (sessions, m) in sim_sweep(&sim, profile, &config.sweep_counts)? {
            sweep.push(SweepRow {
                profile: profile.name.clone(),
                sessions,
                mean_us: m.mean_us,
                p50_us: m.p50_us,
                p95_us: m.p95_us,
                wire_bytes: m.wire_bytes,
            });
        }
    }

    let mut wire = Vec::new();
    for profile in &profiles {
        for mode in Mode::ALL {
            let p = SimProfile {
                mode,
                ..profile.clone()
            };
            let sizes = p.wire_sizes();
            wire.push(WireRow {
                profile: profile.name.clone(),
                mode: mode.name().to_string(),
                client_hello: sizes.client_hello,
                server_hello: sizes.server_hello,
                finish: sizes.finish,
                total: sizes.total(),
            });
        }
    }

    Ok(Report {
        bench,
        work,
        sweep,
        wire,
        security: security_table(),
    })
}

/// Output file names written by [`write_report`].
pub const REPORT_FILES: [&str; 6] = ["bench.csv", "work.csv", "sweep.csv", "wire.csv", "security.csv", "report.json"];

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: Option<&str>) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        if let Some(h) = header {
            w.write_record(h.split(','))?;
        }
    }
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| BenchError::Invalid(e.to_string()))?;
    fs::write(path, bytes).map_err(io_err(path))
}

pub fn write_report(report: &Report, out_dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let paths: Vec<PathBuf> = REPORT_FILES.iter().map(|f| out_dir.join(f)).collect();
    write_csv(&paths[0], &report.bench, Some(BENCH_CSV_HEADER))?;
    write_csv(&paths[1], &report.work, None)?;
    write_csv(&paths[2], &report.sweep, Some(SWEEP_CSV_HEADER))?;
    write_csv(&paths[3], &report.wire, None)?;
    write_csv(&paths[4], &report.security, None)?;
    let json = serde_json::to_string_pretty(report)?;
    fs::write(&paths[5], json).map_err(io_err(&paths[5]))?;
    Ok(paths)
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, BenchError> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(BenchError::from)).collect()
}

/// [`run_benchmarks`] followed by [`write_report`].
pub fn run_suite(config: &SuiteConfig) -> Result<(Report, Vec<PathBuf>), BenchError> {
    let report = run_benchmarks(config)?;
    let paths = write_report(&report, &config.out_dir)?;
    Ok((report, paths))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_security_values() {
        let expect = [
            ("rsa-3072", 128, 0),
            ("ecc-256", 128, 0),
            ("aes-128", 128, 64),
            ("aes-256", 256, 128),
            ("kyber", 192, 192),
            ("dilithium", 192, 192),
            ("sphincs+", 128, 128),
        ];
        for (name, c, q) in expect {
            let p = security_level(name).unwrap();
            assert_eq!((p.classical_bits, p.quantum_bits, p.source), (c, q, SecuritySource::Reference));
        }
        assert!(matches!(security_level("des"), Err(BenchError::UnknownScheme(_))));
    }

    #[test]
    fn security_table_invariants() {
        for p in security_table() {
            assert!(p.quantum_bits <= p.classical_bits, "{}", p.scheme);
            if p.scheme.contains("rsa") || p.scheme.starts_with("ecc") {
                assert_eq!(p.quantum_bits, 0);
            }
            if p.scheme.starts_with("aes") {
                assert_eq!(p.quantum_bits * 2, p.classical_bits);
            }
        }
    }

    #[test]
    fn single_iteration_percentiles_collapse() {
        let params = parse_bench_name("lattice/tiny").unwrap();
        let r = measure(params, Operation::Encaps, 1, &RandomSeed([1; 32])).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(r.p50_ns == r.p95_ns && r.p95_ns == r.mean_ns);
    }

    #[test]
    fn rejects_unsupported_requests() {
        let mq = parse_bench_name("mq/tiny").unwrap();
        assert!(matches!(
            measure(mq, Operation::Encaps, 1, &RandomSeed([1; 32])),
            Err(BenchError::UnknownOp { .. })
        ));
        assert!(matches!(
            measure(mq, Operation::Sign, 0, &RandomSeed([1; 32])),
            Err(BenchError::Invalid(_))
        ));
        let h1 = parse_bench_name("hsig/h1").unwrap();
        assert!(matches!(
            measure(h1, Operation::Sign, 1, &RandomSeed([1; 32])),
            Err(BenchError::Invalid(_))
        ));
        assert!(parse_bench_name("lattice").is_err());
        assert!(parse_bench_name("lattice/huge").is_err());
    }
}
