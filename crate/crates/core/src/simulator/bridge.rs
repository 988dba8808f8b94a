//! Link-level TSP under frozen, independent device activity.
//!
//! Given a macro state, a device that has not yet delivered transmits with
//! probability `x1 / (1 - ys)`. With Rayleigh fading the resulting TSP of a
//! fixed link has a closed product form; [`frozen_activity_run`] samples the
//! same situation slot by slot.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

use crate::metadist::MacroState;
use crate::params::NetworkParams;

use super::geometry::{torus_distance, NetworkRealization};
use super::PathGains;

/// TSP of link `link` when every other device in the realization transmits
/// independently with probability `x1 / (1 - ys)`.
///
/// Each interferer at torus distance `d` from the test receiver contributes
/// the factor `x1 / ((1 + theta R^eta / d^eta)(1 - ys)) + (x0 + yf) / (1 - ys)`.
pub fn conditional_tsp(
    real: &NetworkRealization,
    link: usize,
    state: &MacroState<f64>,
    net: &NetworkParams<f64>,
) -> f64 {
    let rx = real.rx_positions[link];
    let norm = 1.0 - state.ys;
    let silent = (state.x0 + state.yf) / norm;
    let ratio = net.theta * net.link_distance.powf(net.eta);
    real.tx_positions
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != link)
        .map(|(_, tx)| {
            let d = torus_distance(*tx, rx, real.side);
            state.x1 / ((1.0 + ratio / d.powf(net.eta)) * norm) + silent
        })
        .product()
}

/// Per-link attempt and success tallies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LinkCounts {
    pub attempts: Vec<u64>,
    pub successes: Vec<u64>,
}

impl LinkCounts {
    pub fn frequency(&self, link: usize) -> f64 {
        self.successes[link] as f64 / self.attempts[link] as f64
    }
}

/// Every slot, each device is independently active with probability
/// `x1 / (1 - ys)`; every link then makes one decode attempt against the
/// active devices other than itself, with fresh unit-mean exponential fades.
pub fn frozen_activity_run<R: Rng + ?Sized>(
    real: &NetworkRealization,
    state: &MacroState<f64>,
    net: &NetworkParams<f64>,
    slots: usize,
    rng: &mut R,
) -> LinkCounts {
    let n = real.len();
    let activity = state.conditional_activity().clamp(0.0, 1.0);
    let gains = PathGains::new(real, net.eta, None);
    let signal = net.link_distance.powf(-net.eta);
    let mut counts = LinkCounts {
        attempts: vec![0; n],
        successes: vec![0; n],
    };
    let mut active = Vec::with_capacity(n);
    for _ in 0..slots {
        active.clear();
        active.extend((0..n).filter(|_| rng.random_bool(activity)));
        for i in 0..n {
            let h: f64 = Exp1.sample(rng);
            let mut interference = 0.0;
            for &j in &active {
                if j != i {
                    let g: f64 = Exp1.sample(rng);
                    interference += g * gains.get(j, i);
                }
            }
            counts.attempts[i] += 1;
            if h * signal > net.theta * interference {
                counts.successes[i] += 1;
            }
        }
    }
    counts
}
