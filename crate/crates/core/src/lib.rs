//! Analytical and Monte Carlo performance evaluation of slotted-Aloha IoT
//! networks with periodic traffic and hard packet deadlines.
//!
//! The analytical engine couples a per-class absorbing Markov chain of each
//! packet ([`chain`]) with the beta-approximated meta distribution of the
//! transmission success probability ([`metadist`]) through a fixed-point
//! iteration ([`coupler`]). The Monte Carlo engine ([`simulator`]) realizes
//! a marked Poisson bipolar network on a torus and runs the protocol slot by
//! slot.
//!
//! The math is generic: the chain runs on any [`Scalar`] (including exact
//! rationals), the geometry layer on any [`Real`]. Aliases below fix the
//! common instantiations.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod coupler;
pub mod error;
pub mod metadist;
pub mod params;
pub mod scalar;
pub mod simulator;

pub use chain::{
    absorption_distribution, absorption_summary, enumerate_paths_oracle, slot_matrices, solve_chain,
    transient_distribution, AbsorptionSummary, ChainSolution, SlotMatrices,
};
pub use coupler::{
    average_over_cycle, average_over_offsets, network_kpis, run_fixed_point, solve_fixed_point, Equilibrium,
    NetworkKpis,
};
pub use error::{Error, Result};
pub use metadist::{
    inv_reg_inc_beta, meta_ccdf, moment_m1, moment_m2, reg_inc_beta, tsp_class_medians, MacroState, MetaModel,
};
pub use params::{
    deadline_cdf, uniform_deadline_pmf, validate, DeadlinePmf, NetworkParams, SimConfig, SlotAveraging, SolverConfig,
    TrafficParams,
};
pub use scalar::{Real, Scalar};
pub use simulator::{
    conditional_tsp, empirical_meta_ccdf, frozen_activity_run, realize_network, replication_rng, run_simulation,
    simulate, torus_distance, CcdfPoint, LinkCounts, NetworkRealization, Point, ReplicationInfo, SimReport, SimStats,
};

/// Exact rational scalar for the chain layer.
pub type Rational = num_rational::Ratio<i128>;

pub type NetworkParamsF64 = NetworkParams<f64>;
pub type NetworkParamsF32 = NetworkParams<f32>;
pub type TrafficParamsF64 = TrafficParams<f64>;
pub type TrafficParamsF32 = TrafficParams<f32>;
pub type TrafficParamsExact = TrafficParams<Rational>;
pub type DeadlinePmfF64 = DeadlinePmf<f64>;
pub type DeadlinePmfExact = DeadlinePmf<Rational>;
pub type SolverConfigF64 = SolverConfig<f64>;
pub type ChainSolutionF64 = ChainSolution<f64>;
pub type ChainSolutionExact = ChainSolution<Rational>;
pub type AbsorptionSummaryF64 = AbsorptionSummary<f64>;
pub type AbsorptionSummaryExact = AbsorptionSummary<Rational>;
pub type MacroStateF64 = MacroState<f64>;
pub type MetaModelF64 = MetaModel<f64>;
pub type EquilibriumF64 = Equilibrium<f64>;
pub type EquilibriumF32 = Equilibrium<f32>;
pub type NetworkKpisF64 = NetworkKpis<f64>;
