//! Fixed-point coupling of the per-class packet chains with the meta
//! distribution of the TSP.
//!
//! Each round builds the TSP classes from the current macro state, solves one
//! chain per class and averages the chains over classes and local slots into
//! the next macro state. Since offsets are uniform every global slot sees the
//! same statistics, so one chain per class and round suffices.

use serde::Serialize;

use crate::chain::{solve_chain, AbsorptionSummary, ChainSolution, SUCCESS, TIMEOUT};
use crate::error::{Error, Result};
use crate::metadist::{MacroState, MetaModel};
use crate::params::{validate, NetworkParams, SlotAveraging, SolverConfig, TrafficParams};
use crate::scalar::Real;

/// Consecutive non-improving rounds before half-step damping engages.
pub const STALL_ROUNDS: usize = 10;

#[derive(Debug, Clone)]
pub struct ClassSolution<F> {
    pub chain: ChainSolution<F>,
    pub summary: AbsorptionSummary<F>,
}

/// Outcome of the fixed-point iteration.
#[derive(Debug, Clone)]
pub struct Equilibrium<F> {
    pub macro_state: MacroState<F>,
    /// Meta model the final class solutions were built from.
    pub meta: MetaModel<F>,
    pub per_class: Vec<ClassSolution<F>>,
    pub iterations: usize,
    /// Max componentwise change of the macro state in the last round.
    pub residual: F,
    pub converged: bool,
    /// Whether half-step damping was switched on.
    pub damped: bool,
    /// Residual of every round.
    pub trace: Vec<F>,
}

/// Averages class chains over classes (equal weight) and over local slots
/// `1..T-1`. The absorbed part is the slot-averaged cumulative absorption,
/// so the result is a probability vector.
pub fn average_over_offsets<F: Real>(solutions: &[ChainSolution<F>]) -> MacroState<F> {
    let mut acc = [F::zero(); 4];
    let Some(first) = solutions.first() else {
        return MacroState {
            x0: F::zero(),
            x1: F::zero(),
            ys: F::zero(),
            yf: F::zero(),
        };
    };
    let window = first.slots() - 1;
    for sol in solutions {
        let mut cum = [F::zero(); 2];
        for t in 1..=window {
            let x = sol.x_at(t);
            let y = sol.y_at(t);
            cum = [cum[0] + y[0], cum[1] + y[1]];
            acc[0] = acc[0] + x[0];
            acc[1] = acc[1] + x[1];
            acc[2] = acc[2] + cum[0];
            acc[3] = acc[3] + cum[1];
        }
    }
    let norm = F::from_count(solutions.len() * window);
    MacroState {
        x0: acc[0] / norm,
        x1: acc[1] / norm,
        ys: acc[2] / norm,
        yf: acc[3] / norm,
    }
}

/// Like [`average_over_offsets`] but over all `T` slots of the duty cycle.
/// Local slot `T` holds no packet, so it adds pure absorbed mass.
pub fn average_over_cycle<F: Real>(solutions: &[ChainSolution<F>]) -> MacroState<F> {
    let Some(first) = solutions.first() else {
        return average_over_offsets(solutions);
    };
    let window = F::from_count(first.slots() - 1);
    let duty = F::from_count(first.slots());
    let w = average_over_offsets(solutions);
    let classes = F::from_count(solutions.len());
    let mut last = [F::zero(); 2];
    for sol in solutions {
        let cum = sol.cumulative_y(sol.slots());
        last = [last[0] + cum[0] / classes, last[1] + cum[1] / classes];
    }
    let scale = window / duty;
    MacroState {
        x0: w.x0 * scale,
        x1: w.x1 * scale,
        ys: (w.ys * window + last[0]) / duty,
        yf: (w.yf * window + last[1]) / duty,
    }
}

fn average<F: Real>(solutions: &[ChainSolution<F>], mode: SlotAveraging) -> MacroState<F> {
    match mode {
        SlotAveraging::Window => average_over_offsets(solutions),
        SlotAveraging::Cycle => average_over_cycle(solutions),
    }
}

/// Macro state the iteration starts from: nothing absorbed, and the Aloha
/// initialization spread over the averaged slots.
pub fn initial_state<F: Real>(traffic: &TrafficParams<F>, mode: SlotAveraging) -> MacroState<F> {
    let w = F::from_count(match mode {
        SlotAveraging::Window => traffic.window(),
        SlotAveraging::Cycle => traffic.duty_cycle,
    });
    let beta = traffic.init_vector();
    MacroState {
        x0: beta[0] / w,
        x1: beta[1] / w,
        ys: F::zero(),
        yf: F::zero(),
    }
}

fn solve_classes<F: Real>(meta: &MetaModel<F>, traffic: &TrafficParams<F>) -> Result<Vec<ClassSolution<F>>> {
    meta.medians
        .iter()
        .map(|&s| {
            let chain = solve_chain(s, traffic)?;
            let summary = chain.summary();
            Ok(ClassSolution { chain, summary })
        })
        .collect()
}

/// Runs the iteration to convergence or the iteration cap and reports the
/// state either way.
pub fn run_fixed_point<F: Real>(
    net: &NetworkParams<F>,
    traffic: &TrafficParams<F>,
    solver: &SolverConfig<F>,
) -> Result<Equilibrium<F>> {
    validate(net, traffic, solver)?;
    let mut state = initial_state(traffic, solver.averaging);
    let mut trace = Vec::new();
    let mut damped = false;
    let mut stalled = 0;
    let mut prev_residual = F::infinity();

    loop {
        let meta = MetaModel::from_state(net, &state, solver.classes, solver.beta_tol)?;
        let per_class = solve_classes(&meta, traffic)?;
        let chains: Vec<_> = per_class.iter().map(|c| c.chain.clone()).collect();
        let next = average(&chains, solver.averaging);
        let residual = next.max_abs_diff(&state);
        trace.push(residual);

        if residual >= prev_residual {
            stalled += 1;
        } else {
            stalled = 0;
        }
        prev_residual = residual;
        if stalled >= STALL_ROUNDS {
            damped = true;
        }

        let converged = residual <= solver.epsilon;
        state = if damped && !converged {
            next.midpoint(&state)
        } else {
            next
        };
        if converged || trace.len() >= solver.max_iters {
            return Ok(Equilibrium {
                macro_state: state,
                meta,
                per_class,
                iterations: trace.len(),
                residual,
                converged,
                damped,
                trace,
            });
        }
    }
}

/// Fixed point of the coupled chain and meta-distribution model.
pub fn solve_fixed_point<F: Real>(
    net: &NetworkParams<F>,
    traffic: &TrafficParams<F>,
    solver: &SolverConfig<F>,
) -> Result<Equilibrium<F>> {
    let eq = run_fixed_point(net, traffic, solver)?;
    if eq.converged {
        Ok(eq)
    } else {
        Err(Error::NonConvergence {
            iterations: eq.iterations,
            residual: eq.residual.approx(),
        })
    }
}

/// Network-wide packet outcomes, averaged over TSP classes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkKpis<F> {
    pub success: F,
    pub timeout: F,
    /// Mean slots to delivery among delivered packets.
    pub mean_success_latency: Option<F>,
    /// Mean slots to expiry among expired packets.
    pub mean_timeout_latency: Option<F>,
    /// `latency_pmf[t-1]` = P(latency = t | delivered).
    pub latency_pmf: Vec<F>,
}

pub fn network_kpis<F: Real>(eq: &Equilibrium<F>) -> NetworkKpis<F> {
    let classes = F::from_count(eq.per_class.len().max(1));
    let mut a = [F::zero(); 2];
    let mut d = [F::zero(); 2];
    let mut mass: Vec<F> = Vec::new();
    for class in &eq.per_class {
        let sum = &class.summary;
        for k in [SUCCESS, TIMEOUT] {
            a[k] = a[k] + sum.a[k];
            d[k] = d[k] + sum.d[k];
        }
        let succ = class.chain.y[1..].iter().map(|y| y[SUCCESS]);
        if mass.is_empty() {
            mass = succ.collect();
        } else {
            for (m, v) in mass.iter_mut().zip(succ) {
                *m = *m + v;
            }
        }
    }
    let ratio = |num: F, den: F| (den > F::zero()).then(|| num / den);
    let latency_pmf = if a[SUCCESS] > F::zero() {
        mass.iter().map(|m| *m / a[SUCCESS]).collect()
    } else {
        vec![F::zero(); mass.len()]
    };
    NetworkKpis {
        success: a[SUCCESS] / classes,
        timeout: a[TIMEOUT] / classes,
        mean_success_latency: ratio(d[SUCCESS], a[SUCCESS]),
        mean_timeout_latency: ratio(d[TIMEOUT], a[TIMEOUT]),
        latency_pmf,
    }
}
