//! The four subcommands. Each writes its files into `output.dir` and
//! returns a short report for the terminal.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use staloha::simulator::geometry::geometry_warning;
use staloha::{
    empirical_meta_ccdf, network_kpis, run_fixed_point, simulate, CcdfPoint, Equilibrium, Error, NetworkKpis, SimReport,
};

use crate::config::{Engine, RunConfig};
use crate::error::{CliError, EXIT_NON_CONVERGENCE, EXIT_OK, EXIT_VALIDATION};
use crate::output::{num, opt, Output, VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    ValidationFailed,
    NotConverged,
}

#[derive(Debug)]
pub struct Report {
    pub status: Status,
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Ok => EXIT_OK,
            Status::ValidationFailed => EXIT_VALIDATION,
            Status::NotConverged => EXIT_NON_CONVERGENCE,
        }
    }
}

#[derive(Serialize)]
struct KpiSummary {
    success: f64,
    timeout: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_success_latency: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_timeout_latency: Option<f64>,
}

impl From<&NetworkKpis<f64>> for KpiSummary {
    fn from(k: &NetworkKpis<f64>) -> Self {
        Self {
            success: k.success,
            timeout: k.timeout,
            mean_success_latency: k.mean_success_latency,
            mean_timeout_latency: k.mean_timeout_latency,
        }
    }
}

impl From<&SimReport> for KpiSummary {
    fn from(r: &SimReport) -> Self {
        let s = &r.stats;
        Self {
            success: s.success_fraction(),
            timeout: s.timeout_fraction(),
            mean_success_latency: s.mean_success_latency(),
            mean_timeout_latency: s.mean_timeout_latency(),
        }
    }
}

#[derive(Serialize)]
struct EquilibriumSummary {
    converged: bool,
    iterations: usize,
    residual: f64,
    damped: bool,
    x0: f64,
    x1: f64,
    ys: f64,
    yf: f64,
    m1: f64,
    m2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta_b: Option<f64>,
}

impl From<&Equilibrium<f64>> for EquilibriumSummary {
    fn from(eq: &Equilibrium<f64>) -> Self {
        let m = &eq.macro_state;
        Self {
            converged: eq.converged,
            iterations: eq.iterations,
            residual: eq.residual,
            damped: eq.damped,
            x0: m.x0,
            x1: m.x1,
            ys: m.ys,
            yf: m.yf,
            m1: eq.meta.m1,
            m2: eq.meta.m2,
            beta_a: eq.meta.shape.map(|s| s.a),
            beta_b: eq.meta.shape.map(|s| s.b),
        }
    }
}

#[derive(Serialize)]
struct SimSummary {
    devices: usize,
    generated: u64,
    delivered: u64,
    expired: u64,
    measured_slots: u64,
    qualifying_links: usize,
    x0: f64,
    x1: f64,
    ys: f64,
    yf: f64,
}

impl SimSummary {
    fn new(report: &SimReport, min_attempts: u64) -> Self {
        let s = &report.stats;
        let m = s.empirical_macro();
        Self {
            devices: report.replications.iter().map(|r| r.devices).sum(),
            generated: s.generated,
            delivered: s.delivered,
            expired: s.expired,
            measured_slots: s.measured_slots,
            qualifying_links: s.link_tsps(min_attempts).len(),
            x0: m.x0,
            x1: m.x1,
            ys: m.ys,
            yf: m.yf,
        }
    }
}

struct Analysis {
    eq: Equilibrium<f64>,
    kpi: NetworkKpis<f64>,
}

fn analysis(cfg: &RunConfig) -> Result<Analysis, CliError> {
    let eq = run_fixed_point(&cfg.network_params(), &cfg.traffic_params()?, &cfg.solver_config())?;
    let kpi = network_kpis(&eq);
    Ok(Analysis { eq, kpi })
}

fn convergence_line(eq: &Equilibrium<f64>) -> String {
    if eq.converged {
        format!(
            "converged in {} iterations (residual {})",
            eq.iterations,
            num(eq.residual)
        )
    } else {
        format!(
            "did not converge after {} iterations (residual {})",
            eq.iterations,
            num(eq.residual)
        )
    }
}

fn kpi_line(label: &str, k: &KpiSummary) -> String {
    format!(
        "{label}: success {:.6}, timeout {:.6}, mean success latency {}",
        k.success,
        k.timeout,
        k.mean_success_latency
            .map(|v| format!("{v:.6}"))
            .unwrap_or_else(|| "n/a".into())
    )
}

fn analytical_ccdf(eq: &Equilibrium<f64>, grid: &[f64]) -> Result<Vec<f64>, CliError> {
    grid.iter().map(|g| eq.meta.ccdf(*g).map_err(CliError::from)).collect()
}

/// Empirical curve; `None` when no link made enough attempts.
fn empirical_ccdf(report: &SimReport, grid: &[f64], min_attempts: u64) -> Result<Option<Vec<CcdfPoint>>, CliError> {
    match empirical_meta_ccdf(&report.stats, grid, min_attempts) {
        Ok(points) => Ok(Some(points)),
        Err(Error::NoQualifyingLinks(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn run_sim(cfg: &RunConfig, lines: &mut Vec<String>) -> Result<SimReport, CliError> {
    let traffic = cfg.traffic_params()?;
    let net = cfg.network_params();
    if let Some(w) = geometry_warning(cfg.sim.side, net.link_distance) {
        lines.push(format!("warning: {w}"));
    }
    Ok(simulate(&net, &traffic, &cfg.sim_config())?)
}

/// Writes KPIs, the meta-CCDF curve, class medians, the latency pmf and the
/// residual trace of the analytical engine.
pub fn analyze(cfg: &RunConfig) -> Result<Report, CliError> {
    let Analysis { eq, kpi } = analysis(cfg)?;
    let mut out = Output::new(cfg, "analyze")?;
    let grid = &cfg.output.gamma;

    let ccdf = analytical_ccdf(&eq, grid)?;
    let rows: Vec<_> = grid.iter().zip(&ccdf).map(|(g, c)| vec![num(*g), num(*c)]).collect();
    out.table("meta_ccdf", &["gamma", "ccdf_analytical"], &rows)?;

    let rows: Vec<_> = eq
        .per_class
        .iter()
        .enumerate()
        .map(|(i, class)| {
            let s = &class.summary;
            vec![
                (i + 1).to_string(),
                num(eq.meta.omegas[i]),
                num(eq.meta.omegas[i + 1]),
                num(eq.meta.medians[i]),
                num(s.success()),
                num(s.timeout()),
                opt(s.mean_success_time().ok()),
            ]
        })
        .collect();
    out.table(
        "classes",
        &[
            "class",
            "lower",
            "upper",
            "median",
            "success",
            "timeout",
            "mean_success_latency",
        ],
        &rows,
    )?;

    let rows: Vec<_> = kpi
        .latency_pmf
        .iter()
        .enumerate()
        .map(|(t, p)| vec![(t + 1).to_string(), num(*p)])
        .collect();
    out.table("latency", &["latency", "probability"], &rows)?;

    let rows: Vec<_> = eq
        .trace
        .iter()
        .enumerate()
        .map(|(i, r)| vec![(i + 1).to_string(), num(*r)])
        .collect();
    out.table("trace", &["iteration", "residual"], &rows)?;

    #[derive(Serialize)]
    struct Summary {
        command: &'static str,
        version: &'static str,
        equilibrium: EquilibriumSummary,
        kpi: KpiSummary,
    }
    let kpis = KpiSummary::from(&kpi);
    let lines = vec![convergence_line(&eq), kpi_line("analysis", &kpis)];
    out.summary(&Summary {
        command: "analyze",
        version: VERSION,
        equilibrium: (&eq).into(),
        kpi: kpis,
    })?;

    let status = if eq.converged { Status::Ok } else { Status::NotConverged };
    Ok(Report {
        status,
        files: out.written().to_vec(),
        lines,
    })
}

/// Writes the pooled Monte Carlo statistics: summary, empirical meta CCDF,
/// latency histogram, per-link tallies and per-replication metadata.
pub fn simulate_cmd(cfg: &RunConfig) -> Result<Report, CliError> {
    let mut lines = Vec::new();
    let report = run_sim(cfg, &mut lines)?;
    let stats = &report.stats;
    let mut out = Output::new(cfg, "simulate")?;
    let grid = &cfg.output.gamma;

    let rows: Vec<_> = match empirical_ccdf(&report, grid, cfg.sim.min_attempts)? {
        Some(points) => points
            .iter()
            .map(|p| vec![num(p.gamma), num(p.ccdf), p.n_links.to_string()])
            .collect(),
        None => {
            lines.push(format!(
                "no link reached {} attempts; empirical ccdf left blank",
                cfg.sim.min_attempts
            ));
            grid.iter().map(|g| vec![num(*g), String::new(), "0".into()]).collect()
        }
    };
    out.table("meta_ccdf", &["gamma", "ccdf_empirical", "n_links"], &rows)?;

    let pmf = stats.latency_pmf();
    let rows: Vec<_> = (0..stats.success_latency.len())
        .map(|i| {
            vec![
                (i + 1).to_string(),
                stats.success_latency[i].to_string(),
                stats.timeout_latency[i].to_string(),
                num(pmf[i]),
            ]
        })
        .collect();
    out.table("latency", &["latency", "delivered", "expired", "success_pmf"], &rows)?;

    let mut rows = Vec::with_capacity(stats.attempts.len());
    let mut offset = 0;
    for rep in &report.replications {
        for link in 0..rep.devices {
            let (a, s) = (stats.attempts[offset + link], stats.successes[offset + link]);
            let tsp = if a > 0 { num(s as f64 / a as f64) } else { String::new() };
            rows.push(vec![
                rep.replication.to_string(),
                link.to_string(),
                a.to_string(),
                s.to_string(),
                tsp,
            ]);
        }
        offset += rep.devices;
    }
    out.table("links", &["replication", "link", "attempts", "successes", "tsp"], &rows)?;

    let rows: Vec<_> = report
        .replications
        .iter()
        .map(|r| {
            vec![
                r.replication.to_string(),
                r.seed.to_string(),
                r.stream.to_string(),
                r.devices.to_string(),
            ]
        })
        .collect();
    out.table("replications", &["replication", "seed", "stream", "devices"], &rows)?;

    #[derive(Serialize)]
    struct Summary {
        command: &'static str,
        version: &'static str,
        simulation: SimSummary,
        kpi: KpiSummary,
    }
    let kpis = KpiSummary::from(&report);
    lines.push(kpi_line("simulation", &kpis));
    out.summary(&Summary {
        command: "simulate",
        version: VERSION,
        simulation: SimSummary::new(&report, cfg.sim.min_attempts),
        kpi: kpis,
    })?;
    Ok(Report {
        status: Status::Ok,
        files: out.written().to_vec(),
        lines,
    })
}

/// Gaps between the two engines.
#[derive(Debug, Clone, Serialize)]
pub struct Deviation {
    pub ccdf_gap: f64,
    pub success_gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub latency_gap: Option<f64>,
    pub n_links: usize,
    pub pass: bool,
}

/// Runs both engines and compares them against `[validate]` tolerances.
/// `validate.sim_theta`, when set, replaces the simulator's threshold.
pub fn validate(cfg: &RunConfig) -> Result<Report, CliError> {
    let Analysis { eq, kpi } = analysis(cfg)?;
    let mut lines = vec![convergence_line(&eq)];
    let mut sim_cfg = cfg.clone();
    if let Some(theta) = cfg.validate.sim_theta {
        sim_cfg.network.theta = theta;
        lines.push(format!("simulator threshold overridden to {}", num(theta)));
    }
    let report = run_sim(&sim_cfg, &mut lines)?;
    let grid = &cfg.output.gamma;
    let points = empirical_meta_ccdf(&report.stats, grid, cfg.sim.min_attempts)?;
    let ana = analytical_ccdf(&eq, grid)?;

    let ccdf_gap = points
        .iter()
        .zip(&ana)
        .map(|(p, a)| (p.ccdf - a).abs())
        .fold(0.0, f64::max);
    let success_gap = (kpi.success - report.stats.success_fraction()).abs();
    let latency_gap = match (kpi.mean_success_latency, report.stats.mean_success_latency()) {
        (Some(a), Some(b)) => Some((a - b).abs()),
        _ => None,
    };
    let tol = &cfg.validate;
    let pass = ccdf_gap <= tol.ccdf_tol
        && success_gap <= tol.success_tol
        && latency_gap.map_or(true, |g| g <= tol.latency_tol);
    let deviation = Deviation {
        ccdf_gap,
        success_gap,
        latency_gap,
        n_links: points[0].n_links,
        pass,
    };

    let mut out = Output::new(cfg, "validate")?;
    let rows: Vec<_> = points
        .iter()
        .zip(&ana)
        .map(|(p, a)| vec![num(p.gamma), num(*a), num(p.ccdf), p.n_links.to_string()])
        .collect();
    out.table(
        "meta_ccdf",
        &["gamma", "ccdf_analytical", "ccdf_empirical", "n_links"],
        &rows,
    )?;

    #[derive(Serialize)]
    struct Summary<'a> {
        command: &'static str,
        version: &'static str,
        deviation: &'a Deviation,
        tolerance: &'a crate::config::ValidateSection,
        equilibrium: EquilibriumSummary,
        analysis: KpiSummary,
        simulation: KpiSummary,
    }
    let (ka, ks) = (KpiSummary::from(&kpi), KpiSummary::from(&report));
    lines.push(kpi_line("analysis", &ka));
    lines.push(kpi_line("simulation", &ks));
    lines.push(format!(
        "max ccdf gap {:.4} (tol {}), success gap {:.4} (tol {}), latency gap {} (tol {}): {}",
        ccdf_gap,
        num(tol.ccdf_tol),
        success_gap,
        num(tol.success_tol),
        latency_gap.map(|g| format!("{g:.4}")).unwrap_or_else(|| "n/a".into()),
        num(tol.latency_tol),
        if pass { "PASS" } else { "FAIL" }
    ));
    out.summary(&Summary {
        command: "validate",
        version: VERSION,
        deviation: &deviation,
        tolerance: tol,
        equilibrium: (&eq).into(),
        analysis: ka,
        simulation: ks,
    })?;

    let status = if !eq.converged {
        Status::NotConverged
    } else if pass {
        Status::Ok
    } else {
        Status::ValidationFailed
    };
    Ok(Report {
        status,
        files: out.written().to_vec(),
        lines,
    })
}

struct SweepRow {
    cells: Vec<String>,
    converged: bool,
}

fn sweep_point(cfg: &RunConfig, engine: Engine, value: f64) -> Result<SweepRow, CliError> {
    match engine {
        Engine::Analytical => {
            let Analysis { eq, kpi } = analysis(cfg)?;
            Ok(SweepRow {
                cells: vec![
                    num(value),
                    num(kpi.success),
                    num(kpi.timeout),
                    opt(kpi.mean_success_latency),
                    opt(kpi.mean_timeout_latency),
                    num(eq.meta.m1),
                    eq.iterations.to_string(),
                    eq.converged.to_string(),
                ],
                converged: eq.converged,
            })
        }
        Engine::Simulation => {
            let report = simulate(&cfg.network_params(), &cfg.traffic_params()?, &cfg.sim_config())?;
            let s = &report.stats;
            let devices: usize = report.replications.iter().map(|r| r.devices).sum();
            Ok(SweepRow {
                cells: vec![
                    num(value),
                    num(s.success_fraction()),
                    num(s.timeout_fraction()),
                    opt(s.mean_success_latency()),
                    opt(s.mean_timeout_latency()),
                    s.generated.to_string(),
                    devices.to_string(),
                ],
                converged: true,
            })
        }
    }
}

/// One KPI row per grid value, evaluated in parallel and written in grid
/// order.
pub fn sweep(cfg: &RunConfig) -> Result<Report, CliError> {
    let spec = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep needs a [sweep] section".into()))?;
    let points: Vec<RunConfig> = spec
        .values
        .iter()
        .map(|v| cfg.with_sweep_value(spec.variable, *v))
        .collect::<Result<_, _>>()?;
    let rows: Vec<SweepRow> = points
        .par_iter()
        .zip(spec.values.par_iter())
        .map(|(point, value)| sweep_point(point, spec.engine, *value))
        .collect::<Result<_, _>>()?;

    let var = spec.variable.name();
    let columns: Vec<&str> = match spec.engine {
        Engine::Analytical => vec![
            var,
            "success",
            "timeout",
            "mean_success_latency",
            "mean_timeout_latency",
            "m1",
            "iterations",
            "converged",
        ],
        Engine::Simulation => {
            vec![
                var,
                "success",
                "timeout",
                "mean_success_latency",
                "mean_timeout_latency",
                "generated",
                "devices",
            ]
        }
    };
    let mut out = Output::new(cfg, "sweep")?;
    let cells: Vec<Vec<String>> = rows.iter().map(|r| r.cells.clone()).collect();
    out.table("sweep", &columns, &cells)?;

    let failed: Vec<String> = rows
        .iter()
        .zip(&spec.values)
        .filter(|(r, _)| !r.converged)
        .map(|(_, v)| num(*v))
        .collect();
    #[derive(Serialize)]
    struct Summary {
        command: &'static str,
        version: &'static str,
        variable: &'static str,
        engine: Engine,
        points: usize,
        non_converged: Vec<String>,
    }
    out.summary(&Summary {
        command: "sweep",
        version: VERSION,
        variable: var,
        engine: spec.engine,
        points: rows.len(),
        non_converged: failed.clone(),
    })?;
    let mut lines = vec![format!("{} points over {var}", rows.len())];
    let status = if failed.is_empty() {
        Status::Ok
    } else {
        lines.push(format!("no convergence at {var} = {}", failed.join(", ")));
        Status::NotConverged
    };
    Ok(Report {
        status,
        files: out.written().to_vec(),
        lines,
    })
}
