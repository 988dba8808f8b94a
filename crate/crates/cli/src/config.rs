//! Run configuration: a TOML file with `[network]`, `[traffic]`, `[solver]`
//! and `[sim]` sections plus optional `[output]`, `[validate]` and `[sweep]`.
//!
//! Overrides of the form `section.key=value` are applied to the parsed
//! table before it is checked, so they go through the same validation as
//! file values.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use staloha::{DeadlinePmf, NetworkParams, SimConfig, SlotAveraging, SolverConfig, TrafficParams};
use toml::{Table, Value};

use crate::error::CliError;

/// Short key spellings accepted in files and overrides.
const ALIASES: &[(&str, &str, &str)] = &[
    ("network", "R", "link_distance"),
    ("network", "w", "tx_power"),
    ("traffic", "T", "duty_cycle"),
    ("traffic", "p_A", "p_aloha"),
    ("traffic", "pA", "p_aloha"),
    ("solver", "L", "classes"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    /// Transmitter density per square meter.
    pub lambda: f64,
    pub link_distance: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    pub theta: f64,
    #[serde(default = "default_tx_power")]
    pub tx_power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficSection {
    pub duty_cycle: usize,
    pub p_aloha: f64,
    /// Shortest deadline. Alone it means uniform deadlines on
    /// `tau_min..T-1`; with `deadline_pmf` it is the pmf's first support point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_min: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deadline_pmf: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub classes: usize,
    pub epsilon: f64,
    pub max_iters: usize,
    pub beta_tol: f64,
    pub averaging: SlotAveraging,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::<f64>::default();
        Self {
            classes: d.classes,
            epsilon: d.epsilon,
            max_iters: d.max_iters,
            beta_tol: d.beta_tol,
            averaging: d.averaging,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub side: f64,
    /// Total cycles, warm-up included.
    pub n_cycles: usize,
    pub warmup_cycles: usize,
    pub seed: u64,
    pub replications: usize,
    pub min_attempts: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff_radius: Option<f64>,
}

impl Default for SimSection {
    fn default() -> Self {
        let d = SimConfig::default();
        Self {
            side: d.side,
            n_cycles: d.n_cycles,
            warmup_cycles: d.warmup_cycles,
            seed: d.seed,
            replications: d.replications,
            min_attempts: d.min_attempts,
            cutoff_radius: d.cutoff_radius,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Tsv,
}

impl Format {
    pub fn delimiter(self) -> u8 {
        match self {
            Format::Csv => b',',
            Format::Tsv => b'\t',
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Tsv => "tsv",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub format: Format,
    /// Thresholds at which meta-distribution curves are sampled.
    pub gamma: Vec<f64>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            format: Format::Csv,
            gamma: default_gamma_grid(),
        }
    }
}

/// Tolerances for `validate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateSection {
    /// Max absolute gap between the analytical and empirical meta CCDF.
    pub ccdf_tol: f64,
    /// Absolute gap in the success probability.
    pub success_tol: f64,
    /// Absolute gap in the mean success latency, in slots.
    pub latency_tol: f64,
    /// Threshold used by the simulator instead of `network.theta`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sim_theta: Option<f64>,
}

impl Default for ValidateSection {
    fn default() -> Self {
        Self {
            ccdf_tol: 0.05,
            success_tol: 0.05,
            latency_tol: 0.25,
            sim_theta: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVariable {
    #[serde(rename = "p_A")]
    PAloha,
    #[serde(rename = "tau_min")]
    TauMin,
    #[serde(rename = "lambda")]
    Lambda,
    #[serde(rename = "theta")]
    Theta,
    #[serde(rename = "T")]
    DutyCycle,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::PAloha => "p_A",
            SweepVariable::TauMin => "tau_min",
            SweepVariable::Lambda => "lambda",
            SweepVariable::Theta => "theta",
            SweepVariable::DutyCycle => "T",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    #[default]
    Analytical,
    Simulation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    #[serde(default)]
    pub engine: Engine,
}

/// Fully resolved configuration, defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub network: NetworkSection,
    pub traffic: TrafficSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub validate: ValidateSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

fn default_eta() -> f64 {
    4.0
}

fn default_tx_power() -> f64 {
    1.0
}

/// `0.05, 0.10, ..., 0.95`.
pub fn default_gamma_grid() -> Vec<f64> {
    (1..=19).map(|i| i as f64 / 20.0).collect()
}

/// Splits `section.key=value`; the value is read as a TOML literal and
/// falls back to a bare string.
pub fn parse_override(spec: &str) -> Result<(String, String, Value), CliError> {
    let bad = || CliError::Config(format!("override `{spec}` is not of the form section.key=value"));
    let (path, raw) = spec.split_once('=').ok_or_else(bad)?;
    let (section, key) = path.trim().split_once('.').ok_or_else(bad)?;
    if section.is_empty() || key.is_empty() || key.contains('.') {
        return Err(bad());
    }
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").ok_or_else(bad)?,
        Err(_) => Value::String(raw.to_string()),
    };
    Ok((section.to_string(), key.to_string(), value))
}

fn canonical<'a>(section: &str, key: &'a str) -> &'a str {
    ALIASES
        .iter()
        .find(|(s, alias, _)| *s == section && *alias == key)
        .map(|(_, _, name)| *name)
        .unwrap_or(key)
}

fn canonicalize(table: &mut Table) -> Result<(), CliError> {
    for (section, body) in table.iter_mut() {
        let Some(body) = body.as_table_mut() else { continue };
        let keys: Vec<String> = body.keys().cloned().collect();
        for key in keys {
            let name = canonical(section, &key);
            if name != key {
                if body.contains_key(name) {
                    return Err(CliError::Config(format!("[{section}] sets both `{key}` and `{name}`")));
                }
                let v = body.remove(&key).expect("key listed above");
                body.insert(name.to_string(), v);
            }
        }
    }
    Ok(())
}

impl RunConfig {
    /// Parses TOML text and applies `section.key=value` overrides.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut table: Table = text.parse().map_err(|e| CliError::Config(format!("config: {e}")))?;
        canonicalize(&mut table)?;
        for spec in overrides {
            let (section, key, value) = parse_override(spec)?;
            let key = canonical(&section, &key).to_string();
            let entry = table
                .entry(section.clone())
                .or_insert_with(|| Value::Table(Table::new()));
            let body = entry
                .as_table_mut()
                .ok_or_else(|| CliError::Config(format!("`{section}` is not a section")))?;
            body.insert(key, value);
        }
        let mut cfg: RunConfig = Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(format!("config: {}", e.message())))?;
        cfg.resolve()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text, overrides)
    }

    /// Fills implied values and checks every parameter.
    fn resolve(&mut self) -> Result<(), CliError> {
        let t = &mut self.traffic;
        match (&t.deadline_pmf, t.tau_min) {
            (None, None) => {
                return Err(CliError::Config("[traffic] needs tau_min or deadline_pmf".into()));
            }
            (Some(pmf), None) => {
                if pmf.len() >= t.duty_cycle {
                    return Err(CliError::Config(format!(
                        "deadline_pmf has {} entries but deadlines must lie below T = {}",
                        pmf.len(),
                        t.duty_cycle
                    )));
                }
                t.tau_min = Some(t.duty_cycle - pmf.len());
            }
            _ => {}
        }
        self.check()
    }

    pub fn check(&self) -> Result<(), CliError> {
        let net = self.network_params();
        let traffic = self.traffic_params()?;
        staloha::validate(&net, &traffic, &self.solver_config()).map_err(CliError::config)?;
        self.sim_config().validate().map_err(CliError::config)?;
        if self.output.gamma.iter().any(|g| !(0.0..=1.0).contains(g)) {
            return Err(CliError::Config("output.gamma values must lie in [0, 1]".into()));
        }
        let v = &self.validate;
        if [v.ccdf_tol, v.success_tol, v.latency_tol]
            .iter()
            .any(|x| x.is_nan() || *x < 0.0)
        {
            return Err(CliError::Config("validate tolerances must be non-negative".into()));
        }
        if let Some(th) = v.sim_theta {
            if th.is_nan() || th <= 0.0 {
                return Err(CliError::Config("validate.sim_theta must be positive".into()));
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(CliError::Config("sweep.values is empty".into()));
            }
        }
        Ok(())
    }

    pub fn network_params(&self) -> NetworkParams<f64> {
        let n = &self.network;
        NetworkParams {
            lambda: n.lambda,
            link_distance: n.link_distance,
            eta: n.eta,
            theta: n.theta,
            tx_power: n.tx_power,
        }
    }

    pub fn traffic_params(&self) -> Result<TrafficParams<f64>, CliError> {
        let t = &self.traffic;
        let tau_min = t
            .tau_min
            .ok_or_else(|| CliError::Config("[traffic] needs tau_min".into()))?;
        let deadlines = match &t.deadline_pmf {
            Some(pmf) => {
                if tau_min + pmf.len() != t.duty_cycle {
                    return Err(CliError::Config(format!(
                        "deadline_pmf must have T - tau_min = {} entries, got {}",
                        t.duty_cycle.saturating_sub(tau_min),
                        pmf.len()
                    )));
                }
                DeadlinePmf::new(tau_min, pmf.clone()).map_err(CliError::config)?
            }
            None => staloha::uniform_deadline_pmf(tau_min, t.duty_cycle).map_err(CliError::config)?,
        };
        TrafficParams::new(t.duty_cycle, t.p_aloha, deadlines).map_err(CliError::config)
    }

    pub fn solver_config(&self) -> SolverConfig<f64> {
        let s = &self.solver;
        SolverConfig {
            classes: s.classes,
            epsilon: s.epsilon,
            max_iters: s.max_iters,
            beta_tol: s.beta_tol,
            averaging: s.averaging,
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        let s = &self.sim;
        SimConfig {
            side: s.side,
            n_cycles: s.n_cycles,
            warmup_cycles: s.warmup_cycles,
            seed: s.seed,
            replications: s.replications,
            min_attempts: s.min_attempts,
            cutoff_radius: s.cutoff_radius,
        }
    }

    /// Copy with one sweep variable set to `value`.
    pub fn with_sweep_value(&self, var: SweepVariable, value: f64) -> Result<Self, CliError> {
        let mut cfg = self.clone();
        let count = |v: f64| -> Result<usize, CliError> {
            if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(CliError::Config(format!(
                    "sweep value {v} of {} must be a whole number",
                    var.name()
                )))
            }
        };
        match var {
            SweepVariable::PAloha => cfg.traffic.p_aloha = value,
            SweepVariable::Lambda => cfg.network.lambda = value,
            SweepVariable::Theta => cfg.network.theta = value,
            SweepVariable::TauMin | SweepVariable::DutyCycle => {
                if cfg.traffic.deadline_pmf.is_some() {
                    return Err(CliError::Config(format!(
                        "sweeping {} needs uniform deadlines (drop deadline_pmf)",
                        var.name()
                    )));
                }
                if var == SweepVariable::TauMin {
                    cfg.traffic.tau_min = Some(count(value)?);
                } else {
                    cfg.traffic.duty_cycle = count(value)?;
                }
            }
        }
        cfg.check()?;
        Ok(cfg)
    }

    /// The resolved configuration as TOML text.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Everything that determines the numbers in an output file, i.e. the
    /// resolved configuration without the output directory.
    pub fn provenance_toml(&self) -> String {
        let mut table = Table::try_from(self).expect("configuration serializes");
        if let Some(Value::Table(out)) = table.get_mut("output") {
            out.remove("dir");
        }
        toml::to_string(&table).expect("configuration serializes")
    }
}
