//! Brute-force reference for the packet chain.
//!
//! Walks every outcome sequence of a packet slot by slot: the Aloha draw
//! (transmit or back off), the decode draw when transmitting, then the
//! per-slot deadline draw that expires the packet with probability `F(t)`.
//! No transition matrices are formed, so this shares no code path with
//! [`super::solve_chain`].

use crate::error::{Error, Result};
use crate::params::TrafficParams;
use crate::scalar::Scalar;

use super::{clamp_tsp, AbsorptionSummary};

/// Largest duty cycle the enumeration accepts.
pub const MAX_ENUMERATION_SLOTS: usize = 8;

struct Walk<'a, S> {
    s: S,
    p: S,
    cdf: &'a [S],
    last: usize,
    success: Vec<S>,
    timeout: Vec<S>,
}

impl<S: Scalar> Walk<'_, S> {
    fn visit(&mut self, t: usize, transmitting: bool, weight: S) {
        if weight == S::zero() {
            return;
        }
        let one = S::one();
        let mut alive = weight;
        if transmitting {
            self.success[t - 1] = self.success[t - 1] + weight * self.s;
            alive = weight * (one - self.s);
        }
        let expire = self.cdf[t];
        self.timeout[t - 1] = self.timeout[t - 1] + alive * expire;
        if t == self.last {
            return;
        }
        let carry = alive * (one - expire);
        self.visit(t + 1, true, carry * self.p);
        self.visit(t + 1, false, carry * (one - self.p));
    }
}

/// Exact absorption split, scaled times and latency pmf by enumeration.
pub fn enumerate_paths_oracle<S: Scalar>(s: S, traffic: &TrafficParams<S>) -> Result<AbsorptionSummary<S>> {
    let duty = traffic.duty_cycle;
    if duty > MAX_ENUMERATION_SLOTS {
        return Err(Error::EnumerationTooLarge {
            got: duty,
            max: MAX_ENUMERATION_SLOTS,
        });
    }
    let s = clamp_tsp(s)?;
    let cdf: Vec<S> = (0..duty).map(|t| traffic.deadlines.cdf(t)).collect();
    let last = duty - 1;
    let mut walk = Walk {
        s,
        p: traffic.p_aloha,
        cdf: &cdf,
        last,
        success: vec![S::zero(); last],
        timeout: vec![S::zero(); last],
    };
    let p = traffic.p_aloha;
    walk.visit(1, true, p);
    walk.visit(1, false, S::one() - p);
    Ok(AbsorptionSummary::from_latency_mass(&walk.success, &walk.timeout))
}
