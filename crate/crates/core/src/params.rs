//! Physical-layer, traffic, solver and simulation parameters shared by both
//! engines.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::{Real, Scalar};

/// Tolerance on the deadline pmf normalization.
pub const PMF_SUM_TOL: f64 = 1e-12;

/// Physical layer of the bipolar network.
///
/// `tx_power` is carried for reporting only. The network is interference
/// limited, so the common transmit power cancels out of every SIR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams<F> {
    /// Device intensity in devices per square meter.
    pub lambda: F,
    /// Transmitter-receiver distance in meters.
    pub link_distance: F,
    /// Path-loss exponent, must exceed 2.
    pub eta: F,
    /// Linear SIR decoding threshold.
    pub theta: F,
    /// Transmit power in mW.
    pub tx_power: F,
}

impl<F: Real> NetworkParams<F> {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= F::zero()) || !self.lambda.is_finite() {
            return Err(invalid("lambda must be non-negative and finite"));
        }
        if !(self.link_distance > F::zero()) || !self.link_distance.is_finite() {
            return Err(invalid("link distance must be positive"));
        }
        if !(self.eta > F::lit(2.0)) || !self.eta.is_finite() {
            return Err(invalid("eta must exceed 2"));
        }
        if !(self.theta > F::zero()) || !self.theta.is_finite() {
            return Err(invalid("theta must be positive"));
        }
        if !(self.tx_power > F::zero()) {
            return Err(invalid("transmit power must be positive"));
        }
        Ok(())
    }
}

/// Deadline distribution on `{tau_min, ..., tau_min + probs.len() - 1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeadlinePmf<S> {
    tau_min: usize,
    probs: Vec<S>,
}

impl<S: Scalar> DeadlinePmf<S> {
    pub fn new(tau_min: usize, probs: Vec<S>) -> Result<Self> {
        let pmf = Self { tau_min, probs };
        pmf.validate()?;
        Ok(pmf)
    }

    /// Point mass at `tau`.
    pub fn deterministic(tau: usize) -> Result<Self> {
        Self::new(tau, vec![S::one()])
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau_min < 1 {
            return Err(invalid("tau_min must be at least 1"));
        }
        if self.probs.is_empty() {
            return Err(invalid("deadline pmf must have non-empty support"));
        }
        if self.probs.iter().any(|p| *p < S::zero()) {
            return Err(invalid("pmf entries must be non-negative"));
        }
        let total = self.probs.iter().fold(S::zero(), |acc, p| acc + *p);
        if (total.approx() - 1.0).abs() > PMF_SUM_TOL {
            return Err(invalid("pmf must sum to 1"));
        }
        Ok(())
    }

    pub fn tau_min(&self) -> usize {
        self.tau_min
    }

    /// Largest deadline in the support.
    pub fn tau_max(&self) -> usize {
        self.tau_min + self.probs.len() - 1
    }

    pub fn probs(&self) -> &[S] {
        &self.probs
    }

    /// P(tau = t).
    pub fn pmf(&self, t: usize) -> S {
        if t < self.tau_min {
            return S::zero();
        }
        self.probs.get(t - self.tau_min).copied().unwrap_or_else(S::zero)
    }

    /// Deadline CDF `F(t) = P(tau <= t)`; exactly one from the top of the
    /// support onwards.
    pub fn cdf(&self, t: usize) -> S {
        if t < self.tau_min {
            return S::zero();
        }
        if t >= self.tau_max() {
            return S::one();
        }
        self.probs[..=t - self.tau_min]
            .iter()
            .fold(S::zero(), |acc, p| acc + *p)
    }
}

/// Free-function form of [`DeadlinePmf::cdf`].
pub fn deadline_cdf<S: Scalar>(pmf: &DeadlinePmf<S>, t: usize) -> S {
    pmf.cdf(t)
}

/// Uniform deadlines on `{tau_min, ..., duty_cycle - 1}`.
pub fn uniform_deadline_pmf<S: Scalar>(tau_min: usize, duty_cycle: usize) -> Result<DeadlinePmf<S>> {
    if tau_min < 1 || tau_min >= duty_cycle {
        return Err(invalid(format!(
            "tau_min must lie in 1..={} (got {tau_min})",
            duty_cycle.saturating_sub(1)
        )));
    }
    let n = duty_cycle - tau_min;
    let p = S::one() / S::from_count(n);
    DeadlinePmf::new(tau_min, vec![p; n])
}

/// Periodic traffic and access protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficParams<S> {
    /// Duty-cycle length `T` in slots.
    pub duty_cycle: usize,
    /// Aloha transmit probability.
    pub p_aloha: S,
    pub deadlines: DeadlinePmf<S>,
}

impl<S: Scalar> TrafficParams<S> {
    pub fn new(duty_cycle: usize, p_aloha: S, deadlines: DeadlinePmf<S>) -> Result<Self> {
        let traffic = Self {
            duty_cycle,
            p_aloha,
            deadlines,
        };
        traffic.validate()?;
        Ok(traffic)
    }

    /// Uniform deadlines on `{tau_min, ..., duty_cycle - 1}`.
    pub fn uniform(duty_cycle: usize, p_aloha: S, tau_min: usize) -> Result<Self> {
        Self::new(duty_cycle, p_aloha, uniform_deadline_pmf(tau_min, duty_cycle)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.duty_cycle < 3 {
            return Err(invalid("duty cycle T must be at least 3"));
        }
        // p_A = 0 is admitted as a degenerate limit (never transmits).
        if self.p_aloha < S::zero() || self.p_aloha > S::one() {
            return Err(invalid("p_A must lie in [0, 1]"));
        }
        self.deadlines.validate()?;
        if self.deadlines.tau_max() > self.duty_cycle - 1 {
            return Err(invalid(format!(
                "deadline support must lie within 1..={}",
                self.duty_cycle - 1
            )));
        }
        Ok(())
    }

    /// Aloha initialization vector `{1 - p_A, p_A}`.
    pub fn init_vector(&self) -> [S; 2] {
        [S::one() - self.p_aloha, self.p_aloha]
    }

    /// Number of local slots in the transient window, `T - 1`.
    pub fn window(&self) -> usize {
        self.duty_cycle - 1
    }
}

/// Which local slots the macro state averages over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlotAveraging {
    /// The `T-1` slots of the transient window.
    #[default]
    Window,
    /// All `T` slots of the duty cycle, counting the always-idle slot `T`.
    /// This is the occupancy a device actually shows over a full period.
    Cycle,
}

/// Fixed-point solver and discretization settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig<F> {
    /// Number of equal-mass TSP classes `L`.
    pub classes: usize,
    /// Fixed-point tolerance on the macro state.
    pub epsilon: F,
    pub max_iters: usize,
    /// Target accuracy of incomplete-beta evaluations.
    pub beta_tol: F,
    #[serde(default)]
    pub averaging: SlotAveraging,
}

impl<F: Real> Default for SolverConfig<F> {
    fn default() -> Self {
        Self {
            classes: 25,
            epsilon: F::lit(1e-8),
            max_iters: 500,
            beta_tol: F::lit(1e-12).max(F::epsilon() * F::lit(8.0)),
            averaging: SlotAveraging::Window,
        }
    }
}

impl<F: Real> SolverConfig<F> {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 1 {
            return Err(invalid("number of TSP classes L must be at least 1"));
        }
        if !(self.epsilon > F::zero()) {
            return Err(invalid("epsilon must be positive"));
        }
        if self.max_iters < 1 {
            return Err(invalid("max_iters must be at least 1"));
        }
        if !(self.beta_tol > F::zero()) {
            return Err(invalid("beta_tol must be positive"));
        }
        Ok(())
    }
}

/// Monte Carlo settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Torus side length in meters.
    pub side: f64,
    /// Total duty cycles simulated, warm-up included.
    pub n_cycles: usize,
    /// Leading cycles whose packets are discarded.
    pub warmup_cycles: usize,
    pub seed: u64,
    pub replications: usize,
    /// Minimum attempts for a link to enter the empirical meta distribution.
    pub min_attempts: u64,
    /// Interferers beyond this torus distance are ignored; `None` sums all.
    pub cutoff_radius: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            side: 100.0,
            n_cycles: 502,
            warmup_cycles: 2,
            seed: 1,
            replications: 5,
            min_attempts: 50,
            cutoff_radius: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.side > 0.0) || !self.side.is_finite() {
            return Err(invalid("torus side must be positive"));
        }
        if self.n_cycles <= self.warmup_cycles {
            return Err(invalid("n_cycles must exceed warmup_cycles"));
        }
        if self.replications < 1 {
            return Err(invalid("replications must be at least 1"));
        }
        if let Some(r) = self.cutoff_radius {
            if !(r > 0.0) {
                return Err(invalid("cutoff radius must be positive"));
            }
        }
        Ok(())
    }
}

/// Checks every invariant of the analytical inputs.
pub fn validate<F: Real>(net: &NetworkParams<F>, traffic: &TrafficParams<F>, solver: &SolverConfig<F>) -> Result<()> {
    net.validate()?;
    traffic.validate()?;
    solver.validate()
}
