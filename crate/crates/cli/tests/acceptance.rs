//! Acceptance report: one PASS/FAIL line per criterion, exit status 1 if
//! any criterion fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use staloha::{
    absorption_summary, conditional_tsp, empirical_meta_ccdf, enumerate_paths_oracle, frozen_activity_run, moment_m1,
    moment_m2, network_kpis, realize_network, replication_rng, run_fixed_point, simulate, slot_matrices, solve_chain,
    solve_fixed_point, DeadlinePmf, MacroState, NetworkParams, SimConfig, SlotAveraging, SolverConfig, TrafficParams,
};

type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
    notes: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self {
            pass,
            detail,
            notes: Vec::new(),
        }
    }
}

fn random_traffic(rng: &mut ChaCha8Rng, max_duty: usize) -> TrafficParams<f64> {
    let duty = rng.random_range(3..=max_duty);
    let p = match rng.random_range(0..10) {
        0 => 1.0,
        _ => rng.random_range(0.01..1.0),
    };
    let tau_min = rng.random_range(1..duty);
    let weights: Vec<f64> = (tau_min..duty).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    let pmf = DeadlinePmf::new(tau_min, weights.iter().map(|w| w / total).collect()).unwrap();
    TrafficParams::new(duty, p, pmf).unwrap()
}

fn random_tsp(rng: &mut ChaCha8Rng) -> f64 {
    match rng.random_range(0..10) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.random(),
    }
}

fn chain_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let traffic = random_traffic(&mut rng, 6);
        let s = random_tsp(&mut rng);
        let fast = absorption_summary(s, &traffic).unwrap();
        let slow = enumerate_paths_oracle(s, &traffic).unwrap();
        for k in 0..2 {
            worst = worst
                .max((fast.a[k] - slow.a[k]).abs())
                .max((fast.d[k] - slow.d[k]).abs());
        }
        if let (Ok(a), Ok(b)) = (fast.latency_pmf(), slow.latency_pmf()) {
            for (x, y) in a.iter().zip(b) {
                worst = worst.max((x - y).abs());
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        worst <= 1e-12 && elapsed < Duration::from_secs(1),
        format!(
            "100 instances, max abs error {worst:.2e} (tol 1e-12), {:.1} ms (limit 1 s)",
            elapsed.as_secs_f64() * 1e3
        ),
    )
}

fn stochasticity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut rows, mut remark, mut split) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let traffic = random_traffic(&mut rng, 60);
        let s = random_tsp(&mut rng);
        let duty = traffic.duty_cycle;
        for t in 1..duty {
            let m = slot_matrices(s, &traffic, t).unwrap();
            for i in 0..2 {
                let sum = m.q[i][0] + m.q[i][1] + m.h[i][0] + m.h[i][1];
                rows = rows.max((sum - 1.0).abs());
            }
        }
        let chain = solve_chain(s, &traffic).unwrap();
        for t in 1..=duty {
            let x = chain.x_at(t);
            let y = chain.cumulative_y(t);
            remark = remark.max((x[0] + x[1] + y[0] + y[1] - 1.0).abs());
        }
        let sum = chain.summary();
        split = split.max((sum.a[0] + sum.a[1] - 1.0).abs());
    }
    Outcome::new(
        rows <= 1e-12 && remark <= 1e-10 && split <= 1e-10,
        format!(
            "10^4 points: row sums {rows:.1e} (1e-12), normalization {remark:.1e} (1e-10), a_s+a_f {split:.1e} (1e-10)"
        ),
    )
}

fn fig2_net(eta: f64) -> NetworkParams<f64> {
    NetworkParams {
        lambda: 0.05,
        link_distance: 2.0,
        eta,
        theta: 5.0,
        tx_power: 1.0,
    }
}

fn fig2_traffic() -> TrafficParams<f64> {
    TrafficParams::uniform(4, 0.5, 1).unwrap()
}

/// TSP of a receiver at the centre of a square of interferer candidates
/// (intensity `lambda (1 - ys)`, each active w.p. `x1 / (1 - ys)`).
fn sampled_tsp(net: &NetworkParams<f64>, state: &MacroState<f64>, side: f64, rng: &mut ChaCha8Rng) -> f64 {
    let q = state.x1 / (1.0 - state.ys);
    let count = Poisson::new(net.lambda * (1.0 - state.ys) * side * side)
        .unwrap()
        .sample(rng) as usize;
    let k = net.theta * net.link_distance.powf(net.eta);
    (0..count).fold(1.0, |acc, _| {
        let (x, y) = (
            rng.random_range(-side / 2.0..side / 2.0),
            rng.random_range(-side / 2.0..side / 2.0),
        );
        acc * (1.0 - q + q / (1.0 + k / (x * x + y * y).powf(net.eta / 2.0)))
    })
}

fn moments() -> Outcome {
    let net = fig2_net(4.0);
    let state = solve_fixed_point(&net, &fig2_traffic(), &SolverConfig::default())
        .unwrap()
        .macro_state;
    let side = 100.0 * net.link_distance;
    let runs = 20_000;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let samples: Vec<f64> = (0..runs).map(|_| sampled_tsp(&net, &state, side, &mut rng)).collect();
    let stat = |f: &dyn Fn(f64) -> f64| {
        let v: Vec<f64> = samples.iter().map(|s| f(*s)).collect();
        let mean = v.iter().sum::<f64>() / runs as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (runs as f64 - 1.0);
        (mean, (var / runs as f64).sqrt())
    };
    let (e1, se1) = stat(&|s| s);
    let (e2, se2) = stat(&|s| s * s);
    let (m1, m2) = (moment_m1(&net, state.x1), moment_m2(&net, state.x1, state.ys).unwrap());
    let (z1, z2) = ((e1 - m1).abs() / se1, (e2 - m2).abs() / se2);
    let elapsed = start.elapsed();
    Outcome::new(
        z1 <= 3.0 && z2 <= 3.0 && elapsed < Duration::from_secs(120),
        format!(
            "{runs} realizations, side {side} m: M1 {m1:.5} vs {e1:.5} ({z1:.2} SE), M2 {m2:.5} vs {e2:.5} ({z2:.2} SE), {:.1} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn convergence() -> Outcome {
    let grid = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
    let mut cases = Vec::new();
    for tau in 1..=3 {
        for p in grid {
            cases.push((fig2_net(4.0), TrafficParams::uniform(4, p, tau).unwrap()));
        }
    }
    let fig3 = NetworkParams {
        lambda: 0.5,
        ..fig2_net(4.0)
    };
    for tau in [1, 10] {
        for p in grid {
            cases.push((fig3, TrafficParams::uniform(50, p, tau).unwrap()));
        }
    }
    let mut failures = Vec::new();
    let mut most = 0;
    for (net, traffic) in &cases {
        match run_fixed_point(net, traffic, &SolverConfig::default()) {
            Ok(eq) if eq.converged && eq.residual <= 1e-8 => most = most.max(eq.iterations),
            Ok(eq) => failures.push(format!(
                "T={} p={} residual {:.1e}",
                traffic.duty_cycle, traffic.p_aloha, eq.residual
            )),
            Err(e) => failures.push(format!("T={} p={}: {e}", traffic.duty_cycle, traffic.p_aloha)),
        }
    }
    Outcome::new(
        failures.is_empty(),
        format!(
            "{} grid points, {} failures, at most {most} iterations (cap 500)",
            cases.len(),
            failures.len()
        ),
    )
}

fn fig2_gap(traffic: &TrafficParams<f64>, averaging: SlotAveraging, sim: &SimConfig) -> (f64, usize) {
    let net = fig2_net(4.0);
    let solver = SolverConfig {
        averaging,
        ..SolverConfig::default()
    };
    let eq = solve_fixed_point(&net, traffic, &solver).unwrap();
    let report = simulate(&net, traffic, sim).unwrap();
    let grid: Vec<f64> = (1..=19).map(|i| i as f64 / 20.0).collect();
    let points = empirical_meta_ccdf(&report.stats, &grid, sim.min_attempts).unwrap();
    let gap = points
        .iter()
        .map(|p| (eq.meta.ccdf(p.gamma).unwrap() - p.ccdf).abs())
        .fold(0.0, f64::max);
    (gap, points[0].n_links)
}

fn meta_distribution() -> Outcome {
    let sim = SimConfig {
        side: 100.0,
        n_cycles: 502,
        warmup_cycles: 2,
        replications: 5,
        seed: 1,
        ..SimConfig::default()
    };
    let start = Instant::now();
    let (gap, links) = fig2_gap(&fig2_traffic(), SlotAveraging::Window, &sim);
    let elapsed = start.elapsed();
    let mut out = Outcome::new(
        gap <= 0.05 && elapsed < Duration::from_secs(600),
        format!(
            "T=4, tau_min=1, p_A=0.5, 500 cycles x 5 replications, {links} links: max CCDF gap {gap:.4} (tol 0.05), {:.1} s",
            elapsed.as_secs_f64()
        ),
    );
    out.notes
        .push("diagnostic, not part of the criterion: same comparison with activity averaged over all T slots".into());
    for (tau, p) in [(1, 0.5), (1, 0.2), (1, 0.8), (2, 0.5), (3, 0.2), (3, 0.5)] {
        let traffic = TrafficParams::uniform(4, p, tau).unwrap();
        let (window, _) = fig2_gap(&traffic, SlotAveraging::Window, &sim);
        let (cycle, _) = fig2_gap(&traffic, SlotAveraging::Cycle, &sim);
        out.notes.push(format!(
            "tau_min={tau} p_A={p}: gap {window:.4} (T-1 slots), {cycle:.4} (T slots)"
        ));
    }
    out
}

fn fig3_kpis(eta: f64, tau: usize, p: f64) -> (f64, f64) {
    let net = NetworkParams {
        lambda: 0.5,
        ..fig2_net(eta)
    };
    let eq = solve_fixed_point(
        &net,
        &TrafficParams::uniform(50, p, tau).unwrap(),
        &SolverConfig::default(),
    )
    .unwrap();
    let kpi = network_kpis(&eq);
    (kpi.success, kpi.mean_success_latency.unwrap())
}

fn figure_points() -> Outcome {
    let deviations = |eta: f64| {
        let (s1, lat) = fig3_kpis(eta, 1, 0.5);
        let (s10, _) = fig3_kpis(eta, 10, 0.2);
        [(s1, 0.7776), (s10, 0.7749), (lat, 3.3929)].map(|(got, want)| (got, (got - want).abs()))
    };
    let main = deviations(4.0);
    let pass = main.iter().all(|(_, d)| *d <= 0.05);
    let mut out = Outcome::new(
        pass,
        format!(
            "eta=4: success {:.4} (0.7776, dev {:.4}), success {:.4} (0.7749, dev {:.4}), latency {:.4} (3.3929, dev {:.4}); tol 0.05",
            main[0].0, main[0].1, main[1].0, main[1].1, main[2].0, main[2].1
        ),
    );
    for eta in [3.0, 3.5, 4.5] {
        let d = deviations(eta);
        out.notes.push(format!(
            "eta={eta}: deviations {:.4}, {:.4}, {:.4} (values {:.4}, {:.4}, {:.4})",
            d[0].1, d[1].1, d[2].1, d[0].0, d[1].0, d[2].0
        ));
    }
    out
}

fn unimodal(v: &[f64]) -> bool {
    let peak = argmax(v);
    v[..=peak].windows(2).all(|w| w[0] < w[1]) && v[peak..].windows(2).all(|w| w[0] > w[1])
}

fn argmax(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |best, i| if v[i] > v[best] { i } else { best })
}

fn qualitative() -> Outcome {
    let grid = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
    let curve = |tau| grid.iter().map(|p| fig3_kpis(4.0, tau, *p).0).collect::<Vec<_>>();
    let (strict, loose) = (curve(1), curve(10));
    let (i1, i10) = (argmax(&strict), argmax(&loose));
    let pass = unimodal(&strict) && unimodal(&loose) && grid[i1] > grid[i10] && strict[i1] > loose[i10];
    Outcome::new(
        pass,
        format!(
            "unimodal {}/{}, argmax p_A {} (tau_min=1) vs {} (tau_min=10), peak success {:.4} vs {:.4}",
            unimodal(&strict),
            unimodal(&loose),
            grid[i1],
            grid[i10],
            strict[i1],
            loose[i10]
        ),
    )
}

fn bridge() -> Outcome {
    let net = fig2_net(4.0);
    let traffic = fig2_traffic();
    let state = solve_fixed_point(&net, &traffic, &SolverConfig::default())
        .unwrap()
        .macro_state;
    let sim = SimConfig {
        side: 60.0,
        ..SimConfig::default()
    };
    let real = realize_network(&net, &traffic, &sim, &mut replication_rng(808, 0)).unwrap();
    let slots = 10_000;
    let counts = frozen_activity_run(&real, &state, &net, slots, &mut replication_rng(808, 1));
    let within = (0..real.len())
        .filter(|&link| {
            let p = conditional_tsp(&real, link, &state, &net);
            let se = (p * (1.0 - p) / counts.attempts[link] as f64).sqrt();
            (counts.frequency(link) - p).abs() <= 3.0 * se
        })
        .count();
    let share = within as f64 / real.len() as f64;
    Outcome::new(
        share >= 0.95,
        format!(
            "{} links, {slots} slots each: {:.1}% within 3 binomial SE (need 95%)",
            real.len(),
            share * 100.0
        ),
    )
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let path = e.unwrap().path();
            (
                path.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&path).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/fig2.toml");
    let run = |name: &str| {
        let dir = tmp.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_staloha"))
            .arg("simulate")
            .arg("--config")
            .arg(&config)
            .args(["--seed", "42", "--set", "sim.n_cycles=102", "--out"])
            .arg(&dir)
            .output()
            .unwrap()
            .status;
        assert!(status.success(), "simulate exited with {status}");
        read_dir_sorted(&dir)
    };
    let (a, b) = (run("first"), run("second"));
    let same = !a.is_empty() && a == b;
    Outcome::new(same, format!("{} output files, byte-identical: {same}", a.len()))
}

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("chain exactness", chain_exactness),
        ("stochasticity invariants", stochasticity),
        ("moments vs geometry oracle", moments),
        ("fixed-point convergence", convergence),
        ("meta distribution, analysis vs simulation", meta_distribution),
        ("figure 3/4 points", figure_points),
        ("qualitative structure", qualitative),
        ("conditional TSP bridge", bridge),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = check();
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {} [{verdict}] {name}: {}", i + 1, outcome.detail);
        for note in &outcome.notes {
            println!("    {note}");
        }
        if !outcome.pass {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
