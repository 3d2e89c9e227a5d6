//! Deterministic discrete-event simulation of many concurrent handshakes.
//!
//! Crypto is not executed; each server operation occupies a virtual core
//! for a cost looked up in a table (normally calibrated from benchmark
//! medians). Virtual time is integer microseconds. Every session starts at
//! time zero (closed loop, simultaneous start), client-side processing is
//! free, and a server job with zero cost completes without queueing.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::hashsig::HashSigParams;
use crate::hybrid::Mode;
use crate::lattice::LatticeParams;
use crate::legacy::LegacyParams;
use crate::mq::MqParams;
use crate::primitives::{FRAME_HEADER_LEN, DIGEST_LEN};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
}

/// Cost-table operation names.
pub mod ops {
    pub const LEGACY_ENCAPS: &str = "legacy_encaps";
    pub const LATTICE_ENCAPS: &str = "lattice_encaps";
    pub const LEGACY_SIGN: &str = "legacy_sign";
    pub const MQ_SIGN: &str = "mq_sign";
    pub const HSIG_SIGN: &str = "hsig_sign";
    pub const SERVER_FINISH: &str = "server_finish";
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimConfig {
    /// One-way link latency in virtual microseconds.
    pub latency_us: u64,
    /// Bytes per virtual second; `None` models an infinitely fast link.
    pub bandwidth_bps: Option<u64>,
    /// Server cost per named operation, in virtual microseconds.
    pub costs: BTreeMap<String, u64>,
    pub cores: usize,
    pub sessions: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.sessions == 0 {
            return Err(SimError::Config("session count must be at least 1".into()));
        }
        if self.cores == 0 {
            return Err(SimError::Config("at least one core required".into()));
        }
        if self.bandwidth_bps == Some(0) {
            return Err(SimError::Config("bandwidth must be positive".into()));
        }
        Ok(())
    }

    fn cost(&self, op: &str) -> Result<u64, SimError> {
        self.costs
            .get(op)
            .copied()
            .ok_or_else(|| SimError::Config(format!("no cost for operation {op}")))
    }

    fn transit(&self, bytes: usize) -> u64 {
        let serialization = match self.bandwidth_bps {
            Some(bw) => (bytes as u64 * 1_000_000).div_ceil(bw),
            None => 0,
        };
        self.latency_us + serialization
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuthScheme {
    Mq(MqParams),
    HashSig(HashSigParams),
}

/// A handshake shape: negotiated mode plus the server's signing keys.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimProfile {
    pub name: String,
    pub mode: Mode,
    pub auth: AuthScheme,
    pub lattice: LatticeParams,
    pub legacy_kem: LegacyParams,
    /// Static legacy signing key held alongside the pqc key, if any.
    pub legacy_sig: Option<LegacyParams>,
}

impl SimProfile {
    pub fn mq_hybrid() -> Self {
        Self {
            name: "mq-auth-hybrid".into(),
            mode: Mode::Hybrid,
            auth: AuthScheme::Mq(MqParams::DESK),
            lattice: LatticeParams::DESK_512,
            legacy_kem: LegacyParams::RSA_2048,
            legacy_sig: Some(LegacyParams::RSA_2048),
        }
    }

    pub fn hsig_hybrid() -> Self {
        Self {
            name: "hsig-auth-hybrid".into(),
            auth: AuthScheme::HashSig(HashSigParams::DESK),
            ..Self::mq_hybrid()
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        [Self::mq_hybrid(), Self::hsig_hybrid()]
            .into_iter()
            .find(|p| p.name == name)
    }

    /// Frame lengths of the three flights, from the wire-format size formulas.
    pub fn wire_sizes(&self) -> WireSizes {
        let legacy_pk = |p: &LegacyParams| 4 + p.public_key_bytes();
        let mut client_hello = FRAME_HEADER_LEN + 32 + 1;
        if self.mode.uses_classical() {
            client_hello += legacy_pk(&self.legacy_kem);
        }
        if self.mode.uses_pqc() {
            client_hello += 1 + 2 + 2 + 4 + 4 + 2 + 4 + self.lattice.public_key_bytes();
        }

        let mut server_hello = FRAME_HEADER_LEN + 32 + 1 + 1;
        if self.mode.uses_classical() {
            server_hello += 4 + self.legacy_kem.modulus_bytes();
        }
        if self.mode.uses_pqc() {
            server_hello += 4 + self.lattice.ciphertext_bytes();
        }
        let mut signer_pks = 1;
        let mut signature = 1;
        if let Some(p) = &self.legacy_sig {
            signer_pks += legacy_pk(p);
            signature += FRAME_HEADER_LEN + p.modulus_bytes();
        }
        match &self.auth {
            AuthScheme::Mq(p) => {
                signer_pks += 1 + 2 + 2 + 4 + 4 + p.public_key_bytes();
                signature += FRAME_HEADER_LEN + p.signature_bytes();
            }
            AuthScheme::HashSig(p) => {
                signer_pks += 1 + 1 + 1 + 4 + p.public_key_bytes();
                signature += FRAME_HEADER_LEN + p.signature_bytes();
            }
        }
        server_hello += signer_pks + 4 + signature;

        WireSizes {
            client_hello,
            server_hello,
            finish: FRAME_HEADER_LEN + DIGEST_LEN,
        }
    }

    /// Operations the server performs to build its response.
    pub fn respond_ops(&self) -> Vec<&'static str> {
        let mut list = Vec::new();
        if self.mode.uses_classical() {
            list.push(ops::LEGACY_ENCAPS);
        }
        if self.mode.uses_pqc() {
            list.push(ops::LATTICE_ENCAPS);
        }
        if self.legacy_sig.is_some() {
            list.push(ops::LEGACY_SIGN);
        }
        list.push(match self.auth {
            AuthScheme::Mq(_) => ops::MQ_SIGN,
            AuthScheme::HashSig(_) => ops::HSIG_SIGN,
        });
        list
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WireSizes {
    pub client_hello: usize,
    pub server_hello: usize,
    pub finish: usize,
}

impl WireSizes {
    pub fn total(&self) -> usize {
        self.client_hello + self.server_hello + self.finish
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimMetrics {
    /// Per-session completion time in microseconds, indexed by session.
    pub completions_us: Vec<u64>,
    pub mean_us: f64,
    pub p50_us: u64,
    pub p95_us: u64,
    pub wire_bytes: usize,
}

/// Nearest-rank percentile of an ascending slice.
pub fn percentile(sorted: &[u64], pct: u64) -> u64 {
    assert!(!sorted.is_empty());
    let rank = (sorted.len() as u64 * pct).div_ceil(100).max(1);
    sorted[rank as usize - 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Job {
    Respond,
    Finish,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Event {
    ArriveServer(usize, Job),
    JobDone(usize, Job),
    ArriveClient(usize),
}

struct Scheduler {
    queue: BinaryHeap<Reverse<(u64, u64, Event)>>,
    seq: u64,
}

impl Scheduler {
    fn push(&mut self, time: u64, event: Event) {
        self.queue.push(Reverse((time, self.seq, event)));
        self.seq += 1;
    }
}

pub fn sim_run(config: &SimConfig, profile: &SimProfile) -> Result<SimMetrics, SimError> {
    config.validate()?;
    let respond_cost = profile
        .respond_ops()
        .into_iter()
        .map(|op| config.cost(op))
        .sum::<Result<u64, _>>()?;
    let finish_cost = config.cost(ops::SERVER_FINISH)?;
    let sizes = profile.wire_sizes();

    let mut order: Vec<usize> = (0..config.sessions).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    for i in (1..order.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        order.swap(i, j);
    }

    let mut sched = Scheduler {
        queue: BinaryHeap::new(),
        seq: 0,
    };
    for &s in &order {
        sched.push(config.transit(sizes.client_hello), Event::ArriveServer(s, Job::Respond));
    }

    let mut free_cores = config.cores;
    let mut waiting: VecDeque<(usize, Job)> = VecDeque::new();
    let mut completions = vec![0u64; config.sessions];
    let job_cost = |job: Job| match job {
        Job::Respond => respond_cost,
        Job::Finish => finish_cost,
    };

    while let Some(Reverse((now, _, event))) = sched.queue.pop() {
        match event {
            Event::ArriveServer(s, job) => {
                let cost = job_cost(job);
                if cost == 0 {
                    sched.push(now, Event::JobDone(s, job));
                } else if free_cores > 0 {
                    free_cores -= 1;
                    sched.push(now + cost, Event::JobDone(s, job));
                } else {
                    waiting.push_back((s, job));
                }
            }
            Event::JobDone(s, job) => {
                if job_cost(job) > 0 {
                    match waiting.pop_front() {
                        Some((next, next_job)) => sched.push(now + job_cost(next_job), Event::JobDone(next, next_job)),
                        None => free_cores += 1,
                    }
                }
                match job {
                    Job::Respond => sched.push(now + config.transit(sizes.server_hello), Event::ArriveClient(s)),
                    Job::Finish => completions[s] = now,
                }
            }
            Event::ArriveClient(s) => {
                sched.push(now + config.transit(sizes.finish), Event::ArriveServer(s, Job::Finish));
            }
        }
    }

    let mut sorted = completions.clone();
    sorted.sort_unstable();
    let mean_us = completions.iter().map(|&c| c as f64).sum::<f64>() / completions.len() as f64;
    Ok(SimMetrics {
        p50_us: percentile(&sorted, 50),
        p95_us: percentile(&sorted, 95),
        completions_us: completions,
        mean_us,
        wire_bytes: sizes.total(),
    })
}

/// Runs [`sim_run`] once per session count with a seed derived from the count.
pub fn sim_sweep(base: &SimConfig, profile: &SimProfile, counts: &[usize]) -> Result<Vec<(usize, SimMetrics)>, SimError> {
    counts
        .iter()
        .map(|&n| {
            let config = SimConfig {
                sessions: n,
                seed: base.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(n as u64),
                ..base.clone()
            };
            sim_run(&config, profile).map(|m| (n, m))
        })
        .collect()
}

pub fn default_sweep_counts() -> Vec<usize> {
    (1..=10).map(|i| i * 100).collect()
}

/// Least-squares fit `y = a + b x`; returns `(a, b, r_squared)`.
pub fn linear_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let syy: f64 = points.iter().map(|(_, y)| (y - my).powi(2)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (a, b, r2)
}

/// Cost table with every known operation set to `cost`.
pub fn uniform_costs(cost: u64) -> BTreeMap<String, u64> {
    [
        ops::LEGACY_ENCAPS,
        ops::LATTICE_ENCAPS,
        ops::LEGACY_SIGN,
        ops::MQ_SIGN,
        ops::HSIG_SIGN,
        ops::SERVER_FINISH,
    ]
    .into_iter()
    .map(|op| (op.to_string(), cost))
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_net(costs: BTreeMap<String, u64>, sessions: usize) -> SimConfig {
        SimConfig {
            latency_us: 0,
            bandwidth_bps: None,
            costs,
            cores: 1,
            sessions,
            seed: 7,
        }
    }

    /// Costs where the whole handshake costs `c` on the server.
    fn single_cost(c: u64) -> BTreeMap<String, u64> {
        let mut costs = uniform_costs(0);
        costs.insert(ops::MQ_SIGN.into(), c);
        costs
    }

    #[test]
    fn zero_everything_completes_at_zero() {
        let m = sim_run(&zero_net(uniform_costs(0), 50), &SimProfile::mq_hybrid()).unwrap();
        assert!(m.completions_us.iter().all(|&c| c == 0));
    }

    #[test]
    fn single_session_three_flights() {
        let config = SimConfig {
            latency_us: 10_000,
            ..zero_net(uniform_costs(0), 1)
        };
        let m = sim_run(&config, &SimProfile::mq_hybrid()).unwrap();
        assert_eq!(m.completions_us, vec![30_000]);
    }

    #[test]
    fn fifo_closed_form() {
        for n in [1usize, 2, 7, 100, 1000] {
            let c = 250;
            let m = sim_run(&zero_net(single_cost(c), n), &SimProfile::mq_hybrid()).unwrap();
            let total: u64 = m.completions_us.iter().sum();
            // mean == c (N+1) / 2, compared as sums to stay in integers.
            assert_eq!(2 * total, c * n as u64 * (n as u64 + 1));
        }
    }

    #[test]
    fn doubling_sessions_doubles_mean() {
        let base = zero_net(single_cost(100), 1);
        let sweep = sim_sweep(&base, &SimProfile::mq_hybrid(), &[200, 400, 500, 1000]).unwrap();
        for pair in [(0, 1), (2, 3)] {
            let ratio = sweep[pair.1].1.mean_us / sweep[pair.0].1.mean_us;
            assert!((1.8..=2.2).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn deterministic_and_monotone() {
        let config = SimConfig {
            latency_us: 500,
            bandwidth_bps: Some(125_000_000),
            cores: 4,
            ..zero_net(uniform_costs(40), 1)
        };
        let counts = default_sweep_counts();
        let a = sim_sweep(&config, &SimProfile::hsig_hybrid(), &counts).unwrap();
        let b = sim_sweep(&config, &SimProfile::hsig_hybrid(), &counts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 10);
        for w in a.windows(2) {
            assert!(w[1].1.mean_us >= w[0].1.mean_us);
        }
        for (_, m) in &a {
            assert!(m.p50_us <= m.p95_us);
        }
    }

    #[test]
    fn config_errors() {
        let mut config = zero_net(uniform_costs(0), 0);
        assert!(sim_run(&config, &SimProfile::mq_hybrid()).is_err());
        config.sessions = 1;
        config.costs.remove(ops::HSIG_SIGN);
        assert!(sim_run(&config, &SimProfile::hsig_hybrid()).is_err());
        assert!(sim_run(&config, &SimProfile::mq_hybrid()).is_ok());
    }

    #[test]
    fn percentile_nearest_rank() {
        let v: Vec<u64> = (1..=100).collect();
        assert_eq!(percentile(&v, 50), 50);
        assert_eq!(percentile(&v, 95), 95);
        assert_eq!(percentile(&[5], 95), 5);
    }

    #[test]
    fn linear_fit_exact_line() {
        let pts: Vec<_> = (0..10).map(|i| (i as f64, 3.0 + 2.0 * i as f64)).collect();
        let (a, b, r2) = linear_fit(&pts);
        assert!((a - 3.0).abs() < 1e-9 && (b - 2.0).abs() < 1e-9 && (r2 - 1.0).abs() < 1e-12);
    }
}
