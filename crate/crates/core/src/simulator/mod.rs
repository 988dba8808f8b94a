//! Seeded slot-level Monte Carlo of the marked bipolar network.
//!
//! Every global slot: devices whose offset matches the cycle phase generate
//! a packet with a fresh deadline, every pending device transmits with
//! probability `p_A`, fades are drawn afresh per link and interfering pair,
//! transmissions with SIR above `theta` are delivered, and packets whose
//! deadline has run out expire. Absorbed devices stay idle until their next
//! generation slot.
//!
//! Replication `k` draws everything from `ChaCha8Rng::seed_from_u64(seed)`
//! switched to stream `k`, so replications are independent and each one is
//! reproducible on its own.

pub mod bridge;
pub mod geometry;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metadist::MacroState;
use crate::params::{NetworkParams, SimConfig, TrafficParams};

pub use bridge::{conditional_tsp, frozen_activity_run, LinkCounts};
pub use geometry::{realize_network, torus_distance, NetworkRealization, Point};

/// Realizations at or below this size cache the full path-gain matrix.
const GAIN_CACHE_LIMIT: usize = 2048;

/// RNG of replication `replication` under master seed `seed`.
pub fn replication_rng(seed: u64, replication: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication as u64);
    rng
}

/// Path gains `dist(tx_j, rx_i)^-eta`, optionally truncated at a cutoff.
pub(crate) struct PathGains<'a> {
    real: &'a NetworkRealization,
    half_eta: f64,
    cutoff_sq: f64,
    cache: Option<Vec<f64>>,
}

impl<'a> PathGains<'a> {
    pub(crate) fn new(real: &'a NetworkRealization, eta: f64, cutoff: Option<f64>) -> Self {
        let mut gains = Self {
            real,
            half_eta: eta / 2.0,
            cutoff_sq: cutoff.map_or(f64::INFINITY, |r| r * r),
            cache: None,
        };
        let n = real.len();
        if n <= GAIN_CACHE_LIMIT {
            let mut cache = Vec::with_capacity(n * n);
            for j in 0..n {
                for i in 0..n {
                    cache.push(gains.compute(j, i));
                }
            }
            gains.cache = Some(cache);
        }
        gains
    }

    fn compute(&self, from: usize, to: usize) -> f64 {
        let d2 = geometry::torus_distance_sq(self.real.tx_positions[from], self.real.rx_positions[to], self.real.side);
        if d2 > self.cutoff_sq {
            0.0
        } else {
            d2.powf(-self.half_eta)
        }
    }

    /// Gain from transmitter `from` to receiver `to`.
    #[inline]
    pub(crate) fn get(&self, from: usize, to: usize) -> f64 {
        match &self.cache {
            Some(c) => c[from * self.real.len() + to],
            None => self.compute(from, to),
        }
    }
}

/// Device-slot occupancy tallies over the measurement window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ActivityCounts {
    pub backoff: u64,
    pub transmit: u64,
    pub delivered: u64,
    pub expired: u64,
    /// Device has not generated its first packet yet.
    pub idle: u64,
}

impl ActivityCounts {
    fn add(&mut self, other: &Self) {
        self.backoff += other.backoff;
        self.transmit += other.transmit;
        self.delivered += other.delivered;
        self.expired += other.expired;
        self.idle += other.idle;
    }

    pub fn total(&self) -> u64 {
        self.backoff + self.transmit + self.delivered + self.expired + self.idle
    }
}

/// Tallies of one or more simulation runs.
///
/// Only packets generated in post-warm-up cycles are counted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimStats {
    /// Transmission attempts per link.
    pub attempts: Vec<u64>,
    /// Attempts with SIR above threshold per link.
    pub successes: Vec<u64>,
    pub generated: u64,
    pub delivered: u64,
    pub expired: u64,
    /// `success_latency[t-1]`: deliveries in local slot `t`.
    pub success_latency: Vec<u64>,
    /// `timeout_latency[t-1]`: expiries after local slot `t`.
    pub timeout_latency: Vec<u64>,
    pub activity: ActivityCounts,
    pub measured_slots: u64,
}

impl SimStats {
    fn new(links: usize, duty_cycle: usize) -> Self {
        Self {
            attempts: vec![0; links],
            successes: vec![0; links],
            generated: 0,
            delivered: 0,
            expired: 0,
            success_latency: vec![0; duty_cycle - 1],
            timeout_latency: vec![0; duty_cycle - 1],
            activity: ActivityCounts::default(),
            measured_slots: 0,
        }
    }

    /// Pools another run; links are appended in order.
    pub fn merge(&mut self, other: &SimStats) {
        self.attempts.extend_from_slice(&other.attempts);
        self.successes.extend_from_slice(&other.successes);
        self.generated += other.generated;
        self.delivered += other.delivered;
        self.expired += other.expired;
        for (a, b) in self.success_latency.iter_mut().zip(&other.success_latency) {
            *a += b;
        }
        for (a, b) in self.timeout_latency.iter_mut().zip(&other.timeout_latency) {
            *a += b;
        }
        self.activity.add(&other.activity);
        self.measured_slots += other.measured_slots;
    }

    pub fn success_fraction(&self) -> f64 {
        ratio(self.delivered, self.generated)
    }

    pub fn timeout_fraction(&self) -> f64 {
        ratio(self.expired, self.generated)
    }

    fn mean_slot(hist: &[u64]) -> Option<f64> {
        let n: u64 = hist.iter().sum();
        (n > 0).then(|| {
            hist.iter()
                .enumerate()
                .map(|(i, c)| (i + 1) as f64 * *c as f64)
                .sum::<f64>()
                / n as f64
        })
    }

    pub fn mean_success_latency(&self) -> Option<f64> {
        Self::mean_slot(&self.success_latency)
    }

    pub fn mean_timeout_latency(&self) -> Option<f64> {
        Self::mean_slot(&self.timeout_latency)
    }

    /// Empirical latency pmf of delivered packets.
    pub fn latency_pmf(&self) -> Vec<f64> {
        let n: u64 = self.success_latency.iter().sum();
        self.success_latency.iter().map(|c| ratio(*c, n)).collect()
    }

    /// Occupancy fractions over all measured device-slots. Devices before
    /// their first packet count as backoff.
    pub fn empirical_macro(&self) -> MacroState<f64> {
        let a = &self.activity;
        let n = a.total();
        MacroState {
            x0: ratio(a.backoff + a.idle, n),
            x1: ratio(a.transmit, n),
            ys: ratio(a.delivered, n),
            yf: ratio(a.expired, n),
        }
    }

    /// Per-link empirical TSPs of links with at least `min_attempts` attempts.
    pub fn link_tsps(&self, min_attempts: u64) -> Vec<f64> {
        self.attempts
            .iter()
            .zip(&self.successes)
            .filter(|(a, _)| **a >= min_attempts.max(1))
            .map(|(a, s)| *s as f64 / *a as f64)
            .collect()
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Idle,
    Pending {
        slot: usize,
        deadline: usize,
        counted: bool,
    },
    Delivered,
    Expired,
}

fn deadline_sampler(traffic: &TrafficParams<f64>) -> impl Fn(f64) -> usize + '_ {
    let pmf = &traffic.deadlines;
    let mut cum = Vec::with_capacity(pmf.probs().len());
    let mut acc = 0.0;
    for p in pmf.probs() {
        acc += p;
        cum.push(acc);
    }
    move |u: f64| {
        let k = cum.partition_point(|c| *c <= u).min(cum.len() - 1);
        pmf.tau_min() + k
    }
}

/// Runs the slotted protocol on a fixed realization.
///
/// Simulates `n_cycles + 1` duty cycles; the extra cycle lets packets of the
/// last measured cycle finish, so every counted packet is absorbed.
pub fn run_simulation<R: Rng + ?Sized>(
    real: &NetworkRealization,
    net: &NetworkParams<f64>,
    traffic: &TrafficParams<f64>,
    sim: &SimConfig,
    rng: &mut R,
) -> SimStats {
    let n = real.len();
    let duty = traffic.duty_cycle;
    let p = traffic.p_aloha;
    let signal = net.link_distance.powf(-net.eta);
    let gains = PathGains::new(real, net.eta, sim.cutoff_radius);
    let draw_deadline = deadline_sampler(traffic);

    let mut stats = SimStats::new(n, duty);
    let mut phase = vec![Phase::Idle; n];
    let mut transmitters: Vec<usize> = Vec::with_capacity(n);
    let mut delivered = vec![false; n];

    for g in 0..(sim.n_cycles + 1) * duty {
        let cycle = g / duty;
        let cycle_phase = g % duty;
        let measuring = cycle >= sim.warmup_cycles && cycle < sim.n_cycles;

        for (dev, state) in phase.iter_mut().enumerate() {
            if real.offsets[dev] == cycle_phase {
                let counted = measuring;
                if counted {
                    stats.generated += 1;
                }
                *state = Phase::Pending {
                    slot: 1,
                    deadline: draw_deadline(rng.random()),
                    counted,
                };
            }
        }

        transmitters.clear();
        let mut backoff = 0u64;
        for (dev, state) in phase.iter().enumerate() {
            if let Phase::Pending { .. } = state {
                if rng.random_bool(p) {
                    transmitters.push(dev);
                } else {
                    backoff += 1;
                }
            }
        }

        if measuring {
            stats.measured_slots += 1;
            let act = &mut stats.activity;
            act.backoff += backoff;
            act.transmit += transmitters.len() as u64;
            for state in &phase {
                match state {
                    Phase::Idle => act.idle += 1,
                    Phase::Delivered => act.delivered += 1,
                    Phase::Expired => act.expired += 1,
                    Phase::Pending { .. } => {}
                }
            }
        }

        // Interfering fades are drawn per (interferer, receiver) pair.
        for &i in &transmitters {
            let h: f64 = Exp1.sample(rng);
            let mut interference = 0.0;
            for &j in &transmitters {
                if j != i {
                    let g: f64 = Exp1.sample(rng);
                    interference += g * gains.get(j, i);
                }
            }
            delivered[i] = h * signal > net.theta * interference;
            if let Phase::Pending { counted: true, .. } = phase[i] {
                stats.attempts[i] += 1;
                if delivered[i] {
                    stats.successes[i] += 1;
                }
            }
        }

        for (dev, state) in phase.iter_mut().enumerate() {
            if let Phase::Pending {
                slot,
                deadline,
                counted,
            } = *state
            {
                if delivered[dev] {
                    delivered[dev] = false;
                    if counted {
                        stats.delivered += 1;
                        stats.success_latency[slot - 1] += 1;
                    }
                    *state = Phase::Delivered;
                } else if slot >= deadline {
                    if counted {
                        stats.expired += 1;
                        stats.timeout_latency[slot - 1] += 1;
                    }
                    *state = Phase::Expired;
                } else {
                    *state = Phase::Pending {
                        slot: slot + 1,
                        deadline,
                        counted,
                    };
                }
            }
        }
    }
    stats
}

/// Metadata of one replication.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationInfo {
    pub replication: usize,
    pub seed: u64,
    pub stream: u64,
    pub devices: usize,
}

/// Pooled statistics over all replications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub stats: SimStats,
    pub replications: Vec<ReplicationInfo>,
}

/// Realizes and simulates `sim.replications` independent networks in
/// parallel and pools them in replication order.
pub fn simulate(net: &NetworkParams<f64>, traffic: &TrafficParams<f64>, sim: &SimConfig) -> Result<SimReport> {
    net.validate()?;
    traffic.validate()?;
    sim.validate()?;
    let runs: Vec<(ReplicationInfo, SimStats)> = (0..sim.replications)
        .into_par_iter()
        .map(|k| {
            let mut rng = replication_rng(sim.seed, k);
            let real = realize_network(net, traffic, sim, &mut rng)?;
            let stats = run_simulation(&real, net, traffic, sim, &mut rng);
            let info = ReplicationInfo {
                replication: k,
                seed: sim.seed,
                stream: k as u64,
                devices: real.len(),
            };
            Ok((info, stats))
        })
        .collect::<Result<_>>()?;
    let mut iter = runs.into_iter();
    let (info, mut stats) = iter.next().expect("at least one replication");
    let mut infos = vec![info];
    for (info, s) in iter {
        stats.merge(&s);
        infos.push(info);
    }
    Ok(SimReport {
        stats,
        replications: infos,
    })
}

/// One point of an empirical meta-distribution curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CcdfPoint {
    pub gamma: f64,
    pub ccdf: f64,
    pub n_links: usize,
}

/// Fraction of qualifying links whose empirical TSP is at least `gamma`.
pub fn empirical_meta_ccdf(stats: &SimStats, grid: &[f64], min_attempts: u64) -> Result<Vec<CcdfPoint>> {
    if let Some(g) = grid.iter().find(|g| !(**g >= 0.0 && **g <= 1.0)) {
        return Err(crate::error::invalid(format!("ccdf grid value {g} outside [0, 1]")));
    }
    let tsps = stats.link_tsps(min_attempts);
    if tsps.is_empty() {
        return Err(Error::NoQualifyingLinks(min_attempts));
    }
    let n = tsps.len();
    Ok(grid
        .iter()
        .map(|&gamma| CcdfPoint {
            gamma,
            ccdf: tsps.iter().filter(|s| **s >= gamma).count() as f64 / n as f64,
            n_links: n,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(lambda: f64) -> NetworkParams<f64> {
        NetworkParams {
            lambda,
            link_distance: 2.0,
            eta: 4.0,
            theta: 5.0,
            tx_power: 1.0,
        }
    }

    fn lone_device() -> NetworkRealization {
        NetworkRealization {
            tx_positions: vec![Point::new(10.0, 10.0)],
            rx_positions: vec![Point::new(12.0, 10.0)],
            offsets: vec![1],
            side: 100.0,
        }
    }

    #[test]
    fn lone_device_always_decodes() {
        let traffic = TrafficParams::uniform(6, 0.4, 2).unwrap();
        let sim = SimConfig {
            n_cycles: 4000,
            warmup_cycles: 1,
            ..SimConfig::default()
        };
        let stats = run_simulation(&lone_device(), &net(0.05), &traffic, &sim, &mut replication_rng(9, 0));
        assert_eq!(stats.attempts[0], stats.successes[0]);
        assert_eq!(stats.generated, 3999);
        assert_eq!(stats.generated, stats.delivered + stats.expired);
        // analytical chain with s = 1
        let exact = crate::chain::absorption_summary(1.0, &traffic).unwrap();
        let emp = stats.success_fraction();
        let se = (exact.success() * (1.0 - exact.success()) / stats.generated as f64).sqrt();
        assert!((emp - exact.success()).abs() < 4.0 * se, "{emp} vs {}", exact.success());
        // geometric latency truncated by the deadline
        let pmf = exact.latency_pmf().unwrap();
        for (e, a) in stats.latency_pmf().iter().zip(pmf) {
            assert!((e - a).abs() < 0.03);
        }
    }

    #[test]
    fn silent_network_times_out() {
        let traffic = TrafficParams::uniform(4, 0.0, 1).unwrap();
        let sim = SimConfig {
            side: 30.0,
            n_cycles: 20,
            ..SimConfig::default()
        };
        let mut rng = replication_rng(1, 0);
        let real = realize_network(&net(0.05), &traffic, &sim, &mut rng).unwrap();
        let stats = run_simulation(&real, &net(0.05), &traffic, &sim, &mut rng);
        assert!(stats.attempts.iter().all(|a| *a == 0));
        assert_eq!(stats.delivered, 0);
        assert_eq!(stats.expired, stats.generated);
        assert!(stats.generated > 0);
    }

    #[test]
    fn conservation_and_determinism() {
        let traffic = TrafficParams::uniform(5, 0.5, 1).unwrap();
        let sim = SimConfig {
            side: 40.0,
            n_cycles: 60,
            warmup_cycles: 2,
            replications: 3,
            seed: 77,
            ..SimConfig::default()
        };
        let a = simulate(&net(0.05), &traffic, &sim).unwrap();
        let b = simulate(&net(0.05), &traffic, &sim).unwrap();
        assert_eq!(a, b);
        let s = &a.stats;
        assert_eq!(s.generated, s.delivered + s.expired);
        assert!(s.attempts.iter().zip(&s.successes).all(|(a, s)| s <= a));
        assert_eq!(a.replications.len(), 3);
        let devices: usize = a.replications.iter().map(|r| r.devices).sum();
        assert_eq!(s.attempts.len(), devices);
        assert_eq!(s.success_latency.iter().sum::<u64>(), s.delivered);
        assert_eq!(s.timeout_latency.iter().sum::<u64>(), s.expired);
    }

    #[test]
    fn replications_use_distinct_streams() {
        let mut a = replication_rng(5, 0);
        let mut b = replication_rng(5, 1);
        assert_ne!(a.random::<u64>(), b.random::<u64>());
    }

    #[test]
    fn ccdf_edges() {
        let mut stats = SimStats::new(3, 4);
        stats.attempts = vec![100, 100, 10];
        stats.successes = vec![100, 40, 10];
        let pts = empirical_meta_ccdf(&stats, &[0.0, 0.5, 1.0], 50).unwrap();
        assert_eq!(pts[0].ccdf, 1.0);
        assert_eq!(pts[1].ccdf, 0.5);
        assert_eq!(pts[2].ccdf, 0.5);
        assert_eq!(pts[0].n_links, 2);
        assert_eq!(
            empirical_meta_ccdf(&stats, &[0.5], 1000),
            Err(Error::NoQualifyingLinks(1000))
        );
        assert!(empirical_meta_ccdf(&stats, &[1.5], 1).is_err());
    }

    #[test]
    fn cutoff_only_removes_interference() {
        let traffic = TrafficParams::uniform(4, 0.5, 1).unwrap();
        let sim = SimConfig {
            side: 40.0,
            n_cycles: 40,
            ..SimConfig::default()
        };
        let mut rng = replication_rng(2, 0);
        let real = realize_network(&net(0.05), &traffic, &sim, &mut rng).unwrap();
        let full = PathGains::new(&real, 4.0, None);
        let cut = PathGains::new(&real, 4.0, Some(5.0));
        for j in 0..real.len().min(20) {
            for i in 0..real.len().min(20) {
                assert!(cut.get(j, i) <= full.get(j, i));
            }
        }
    }
}
