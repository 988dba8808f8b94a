//! Per-class absorbing Markov chain of a packet, from generation to either
//! successful delivery or deadline expiry.
//!
//! Transient states are `{backoff, transmit}` indexed by the local slot
//! `t = 1..T-1`; absorbing states are `{success, timeout}`. Only the 2x2 slot
//! blocks are ever built: products are accumulated as a running row vector.

pub mod oracle;

use crate::error::{Error, Result};
use crate::params::TrafficParams;
use crate::scalar::Scalar;

pub use oracle::enumerate_paths_oracle;

/// Index of the backoff state in `x` vectors.
pub const BACKOFF: usize = 0;
/// Index of the transmit state in `x` vectors.
pub const TRANSMIT: usize = 1;
/// Index of the success state in `y` vectors.
pub const SUCCESS: usize = 0;
/// Index of the timeout state in `y` vectors.
pub const TIMEOUT: usize = 1;

/// Tolerated overshoot of a TSP outside `[0, 1]` before it is rejected.
const TSP_SLACK: f64 = 1e-9;

pub type Vec2<S> = [S; 2];
pub type Mat2<S> = [[S; 2]; 2];

/// Transition blocks of one local slot: transient-to-transient `q` and
/// transient-to-absorbing `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotMatrices<S> {
    pub q: Mat2<S>,
    pub h: Mat2<S>,
}

impl<S: Scalar> SlotMatrices<S> {
    /// Sum of row `i` of `[q | h]`.
    pub fn row_sum(&self, i: usize) -> S {
        self.q[i][0] + self.q[i][1] + self.h[i][0] + self.h[i][1]
    }
}

fn vec_mat<S: Scalar>(v: Vec2<S>, m: &Mat2<S>) -> Vec2<S> {
    [v[0] * m[0][0] + v[1] * m[1][0], v[0] * m[0][1] + v[1] * m[1][1]]
}

/// Checks a TSP value and clamps round-off back into `[0, 1]`.
pub fn clamp_tsp<S: Scalar>(s: S) -> Result<S> {
    let v = s.approx();
    if !(-TSP_SLACK..=1.0 + TSP_SLACK).contains(&v) {
        return Err(Error::TspOutOfRange(v));
    }
    if s < S::zero() {
        Ok(S::zero())
    } else if s > S::one() {
        Ok(S::one())
    } else {
        Ok(s)
    }
}

fn blocks<S: Scalar>(s: S, p: S, cdf: S) -> SlotMatrices<S> {
    let one = S::one();
    let (fail, survive) = (one - s, one - cdf);
    SlotMatrices {
        q: [
            [survive * (one - p), survive * p],
            [survive * fail * (one - p), survive * fail * p],
        ],
        h: [[S::zero(), cdf], [s, fail * cdf]],
    }
}

/// Transition blocks for local slot `t` of a class with TSP `s`.
pub fn slot_matrices<S: Scalar>(s: S, traffic: &TrafficParams<S>, t: usize) -> Result<SlotMatrices<S>> {
    let max = traffic.window();
    if t < 1 || t > max {
        return Err(Error::SlotOutOfRange { slot: t, max });
    }
    let s = clamp_tsp(s)?;
    Ok(blocks(s, traffic.p_aloha, traffic.deadlines.cdf(t)))
}

/// Transient and absorption vectors over local slots `1..=T` for one class.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSolution<S> {
    /// `x[t-1]` = {backoff, transmit} occupancy at local slot `t`.
    pub x: Vec<Vec2<S>>,
    /// `y[t-1]` = {success, timeout} absorption at local slot `t`.
    pub y: Vec<Vec2<S>>,
    /// TSP of the class.
    pub s: S,
    /// Aloha initialization vector.
    pub beta: Vec2<S>,
}

impl<S: Scalar> ChainSolution<S> {
    /// Duty-cycle length the solution spans.
    pub fn slots(&self) -> usize {
        self.x.len()
    }

    /// Occupancy at 1-based local slot `t`.
    pub fn x_at(&self, t: usize) -> Vec2<S> {
        self.x[t - 1]
    }

    /// Absorption at 1-based local slot `t`.
    pub fn y_at(&self, t: usize) -> Vec2<S> {
        self.y[t - 1]
    }

    /// Absorption accumulated over slots `1..=t`.
    pub fn cumulative_y(&self, t: usize) -> Vec2<S> {
        self.y[..t]
            .iter()
            .fold([S::zero(), S::zero()], |acc, y| [acc[0] + y[0], acc[1] + y[1]])
    }
}

/// Solves the chain in one left-to-right pass.
///
/// `x_1 = beta`, `x_{t+1} = x_t Q_t`, `y_1 = 0`, `y_{t+1} = x_t H_t` for
/// `t = 1..T-1`, and `x_T = 0` because the deadline CDF reaches one at `T-1`.
pub fn solve_chain<S: Scalar>(s: S, traffic: &TrafficParams<S>) -> Result<ChainSolution<S>> {
    let s = clamp_tsp(s)?;
    let duty = traffic.duty_cycle;
    let beta = traffic.init_vector();
    let zero = [S::zero(), S::zero()];
    let mut x = Vec::with_capacity(duty);
    let mut y = Vec::with_capacity(duty);
    x.push(beta);
    y.push(zero);
    let mut state = beta;
    for t in 1..duty {
        let m = blocks(s, traffic.p_aloha, traffic.deadlines.cdf(t));
        y.push(vec_mat(state, &m.h));
        state = if t + 1 == duty { zero } else { vec_mat(state, &m.q) };
        x.push(state);
    }
    Ok(ChainSolution { x, y, s, beta })
}

/// Occupancy sequence `x_1..x_T`.
pub fn transient_distribution<S: Scalar>(s: S, traffic: &TrafficParams<S>) -> Result<Vec<Vec2<S>>> {
    Ok(solve_chain(s, traffic)?.x)
}

/// Absorption sequence `y_1..y_T`.
pub fn absorption_distribution<S: Scalar>(s: S, traffic: &TrafficParams<S>) -> Result<Vec<Vec2<S>>> {
    Ok(solve_chain(s, traffic)?.y)
}

/// Eventual absorption split and scaled mean absorption times of a packet.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionSummary<S> {
    /// {P(success), P(timeout)}.
    pub a: Vec2<S>,
    /// Absorption probabilities weighted by the slot of absorption.
    pub d: Vec2<S>,
    /// `latency[t-1]` = P(latency = t | success) for `t = 1..T-1`.
    latency: Option<Vec<S>>,
}

impl<S: Scalar> AbsorptionSummary<S> {
    /// Builds a summary from success and timeout mass per latency
    /// `t = 1..T-1` (slot of absorption).
    pub fn from_latency_mass(success: &[S], timeout: &[S]) -> Self {
        let mut a = [S::zero(), S::zero()];
        let mut d = [S::zero(), S::zero()];
        for (i, (ps, pf)) in success.iter().zip(timeout).enumerate() {
            let w = S::from_count(i + 1);
            a[SUCCESS] = a[SUCCESS] + *ps;
            a[TIMEOUT] = a[TIMEOUT] + *pf;
            d[SUCCESS] = d[SUCCESS] + w * *ps;
            d[TIMEOUT] = d[TIMEOUT] + w * *pf;
        }
        let latency = (a[SUCCESS] > S::zero()).then(|| success.iter().map(|p| *p / a[SUCCESS]).collect());
        Self { a, d, latency }
    }

    pub fn success(&self) -> S {
        self.a[SUCCESS]
    }

    pub fn timeout(&self) -> S {
        self.a[TIMEOUT]
    }

    /// Success latency pmf over `t = 1..T-1`.
    pub fn latency_pmf(&self) -> Result<&[S]> {
        self.latency.as_deref().ok_or(Error::NoSuccesses)
    }

    /// Mean slots until delivery, given delivery.
    pub fn mean_success_time(&self) -> Result<S> {
        if self.a[SUCCESS] > S::zero() {
            Ok(self.d[SUCCESS] / self.a[SUCCESS])
        } else {
            Err(Error::NoSuccesses)
        }
    }

    /// Mean slots until expiry, given expiry; `None` if packets never expire.
    pub fn mean_timeout_time(&self) -> Option<S> {
        (self.a[TIMEOUT] > S::zero()).then(|| self.d[TIMEOUT] / self.a[TIMEOUT])
    }
}

impl<S: Scalar> ChainSolution<S> {
    pub fn summary(&self) -> AbsorptionSummary<S> {
        // y_{t+1} holds the mass absorbed while in local slot t.
        let success: Vec<S> = self.y[1..].iter().map(|y| y[SUCCESS]).collect();
        let timeout: Vec<S> = self.y[1..].iter().map(|y| y[TIMEOUT]).collect();
        AbsorptionSummary::from_latency_mass(&success, &timeout)
    }
}

/// Absorption split, scaled mean times and latency pmf for a class with TSP `s`.
pub fn absorption_summary<S: Scalar>(s: S, traffic: &TrafficParams<S>) -> Result<AbsorptionSummary<S>> {
    Ok(solve_chain(s, traffic)?.summary())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::DeadlinePmf;

    fn fixed3(p: f64) -> TrafficParams<f64> {
        TrafficParams::new(4, p, DeadlinePmf::deterministic(3).unwrap()).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-14
    }

    #[test]
    fn certain_decode_absorbs_transmissions() {
        let traffic = fixed3(0.3);
        let m = slot_matrices(1.0, &traffic, 1).unwrap();
        assert_eq!(m.q[1], [0.0, 0.0]);
        assert_eq!(m.h[1], [1.0, 0.0]);
    }

    #[test]
    fn elapsed_deadline_forces_absorption() {
        let traffic = fixed3(0.3);
        let m = slot_matrices(0.4, &traffic, 3).unwrap();
        assert_eq!(m.q, [[0.0; 2]; 2]);
        assert!(close(m.h[0][0] + m.h[0][1], 1.0));
        assert!(close(m.h[1][0] + m.h[1][1], 1.0));
    }

    #[test]
    fn half_half_substitution() {
        let m = slot_matrices(0.5, &fixed3(0.5), 1).unwrap();
        assert_eq!(m.q, [[0.5, 0.5], [0.25, 0.25]]);
        assert_eq!(m.h, [[0.0, 0.0], [0.5, 0.0]]);
        assert_eq!(m.row_sum(0), 1.0);
        assert_eq!(m.row_sum(1), 1.0);
    }

    #[test]
    fn slot_range_and_tsp_range() {
        let traffic = fixed3(0.5);
        assert_eq!(
            slot_matrices(0.5, &traffic, 0),
            Err(Error::SlotOutOfRange { slot: 0, max: 3 })
        );
        assert!(slot_matrices(0.5, &traffic, 4).is_err());
        assert!(matches!(slot_matrices(1.1, &traffic, 1), Err(Error::TspOutOfRange(_))));
        // round-off is clamped
        let m = slot_matrices(1.0 + 1e-12, &traffic, 1).unwrap();
        assert_eq!(m.h[1][0], 1.0);
    }

    #[test]
    fn transient_vectors() {
        let x = transient_distribution(0.5, &fixed3(0.5)).unwrap();
        assert_eq!(x[0], [0.5, 0.5]);
        assert_eq!(x[1], [0.375, 0.375]);
        assert_eq!(x[2], [0.28125, 0.28125]);
        assert_eq!(x[3], [0.0, 0.0]);

        let x = transient_distribution(1.0, &fixed3(1.0)).unwrap();
        assert_eq!(x[0], [0.0, 1.0]);
        assert!(x[1..].iter().all(|v| *v == [0.0, 0.0]));
    }

    #[test]
    fn absorption_vectors() {
        let y = absorption_distribution(0.5, &fixed3(0.5)).unwrap();
        assert_eq!(y[0], [0.0, 0.0]);
        assert_eq!(y[1], [0.25, 0.0]);
        assert_eq!(y[2], [0.1875, 0.0]);
        assert_eq!(y[3], [0.140625, 0.421875]);

        let y = absorption_distribution(1.0, &fixed3(1.0)).unwrap();
        assert_eq!(y[1], [1.0, 0.0]);
        assert!(y[2..].iter().all(|v| *v == [0.0, 0.0]));
    }

    #[test]
    fn summaries() {
        let sum = absorption_summary(0.5, &fixed3(0.5)).unwrap();
        assert_eq!(sum.a, [0.578125, 0.421875]);
        assert_eq!(sum.success() + sum.timeout(), 1.0);

        let sure = absorption_summary(1.0, &fixed3(1.0)).unwrap();
        assert_eq!(sure.a, [1.0, 0.0]);
        assert_eq!(sure.mean_success_time().unwrap(), 1.0);
        assert_eq!(sure.latency_pmf().unwrap(), &[1.0, 0.0, 0.0]);
        assert_eq!(sure.mean_timeout_time(), None);

        let never = absorption_summary(0.0, &fixed3(0.5)).unwrap();
        assert_eq!(never.a, [0.0, 1.0]);
        assert_eq!(never.latency_pmf(), Err(Error::NoSuccesses));
        assert_eq!(never.mean_success_time(), Err(Error::NoSuccesses));
        assert_eq!(never.mean_timeout_time(), Some(3.0));
    }

    #[test]
    fn remark_normalization_on_uniform_deadlines() {
        let traffic = TrafficParams::uniform(7, 0.35, 2).unwrap();
        let sol = solve_chain(0.6f64, &traffic).unwrap();
        for t in 1..=7 {
            let x = sol.x_at(t);
            let c = sol.cumulative_y(t);
            assert!((x[0] + x[1] + c[0] + c[1] - 1.0).abs() < 1e-12, "slot {t}");
        }
    }
}
