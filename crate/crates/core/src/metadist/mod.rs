//! Meta distribution of the transmission success probability (TSP).
//!
//! Closed-form first and second TSP moments under the mean-field activity
//! model, the moment-matched beta approximation of the TSP distribution, and
//! its discretization into `L` equal-mass TSP classes.

pub mod special;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::params::NetworkParams;
use crate::scalar::Real;

pub use special::{inv_reg_inc_beta, ln_beta, ln_gamma, reg_inc_beta};

/// `M2 - M1^2` at or below this is treated as a point-mass TSP.
pub const DEGENERATE_VARIANCE: f64 = 1e-14;

/// Network-averaged state of a device: probabilities of being in backoff,
/// transmitting, or already absorbed as success or timeout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroState<F> {
    pub x0: F,
    pub x1: F,
    pub ys: F,
    pub yf: F,
}

impl<F: Real> MacroState<F> {
    pub fn total(&self) -> F {
        self.x0 + self.x1 + self.ys + self.yf
    }

    pub fn as_array(&self) -> [F; 4] {
        [self.x0, self.x1, self.ys, self.yf]
    }

    /// Largest componentwise absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> F {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .fold(F::zero(), |m, (a, b)| m.max((*a - b).abs()))
    }

    /// Componentwise midpoint.
    pub fn midpoint(&self, other: &Self) -> Self {
        let h = F::lit(0.5);
        Self {
            x0: (self.x0 + other.x0) * h,
            x1: (self.x1 + other.x1) * h,
            ys: (self.ys + other.ys) * h,
            yf: (self.yf + other.yf) * h,
        }
    }

    /// Probability that a potential interferer (not yet delivered) transmits.
    pub fn conditional_activity(&self) -> F {
        self.x1 / (F::one() - self.ys)
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: F| v >= F::zero() && v <= F::one();
        if !self.as_array().into_iter().all(in_unit) {
            return Err(invalid("macro state entries must lie in [0, 1]"));
        }
        if (self.total() - F::one()).abs() > F::lit(1e-10) {
            return Err(invalid("macro state must sum to 1"));
        }
        Ok(())
    }
}

/// `2 pi^2 lambda R^2 theta^(2/eta) / sin(2 pi / eta)`: the interference
/// scale shared by both moments, per unit of transmit activity.
fn interference_scale<F: Real>(net: &NetworkParams<F>) -> F {
    let two = F::lit(2.0);
    let delta = two / net.eta;
    two * F::PI() * F::PI() * net.lambda * net.link_distance * net.link_distance * net.theta.powf(delta)
        / (two * F::PI() / net.eta).sin()
}

/// First TSP moment for transmit activity `x1`.
pub fn moment_m1<F: Real>(net: &NetworkParams<F>, x1: F) -> F {
    (-interference_scale(net) * x1 / net.eta).exp()
}

/// Second TSP moment for transmit activity `x1` and delivered fraction `ys`.
pub fn moment_m2<F: Real>(net: &NetworkParams<F>, x1: F, ys: F) -> Result<F> {
    if !(ys < F::one()) {
        return Err(invalid("ys must be below 1 for the second moment"));
    }
    let two = F::lit(2.0);
    let eta = net.eta;
    let spread = two * eta - (eta - two) * x1 / (F::one() - ys);
    Ok((-interference_scale(net) * x1 / (eta * eta) * spread).exp())
}

/// Shape parameters of the moment-matched beta distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaShape<F> {
    pub a: F,
    pub b: F,
}

impl<F: Real> BetaShape<F> {
    /// Matches mean `m1` and second moment `m2`.
    pub fn from_moments(m1: F, m2: F) -> Result<Self> {
        let var = m2 - m1 * m1;
        if !(var > F::lit(DEGENERATE_VARIANCE)) {
            return Err(Error::DegenerateBeta(var.approx()));
        }
        let common = (m1 - m2) / var;
        let shape = Self {
            a: m1 * common,
            b: (F::one() - m1) * common,
        };
        if !(shape.a > F::zero() && shape.b > F::zero()) {
            return Err(Error::Domain(format!("moments ({:?}, {:?}) admit no beta fit", m1, m2)));
        }
        Ok(shape)
    }
}

/// Beta-approximated meta distribution `P(TSP > gamma)`.
pub fn meta_ccdf<F: Real>(gamma: F, m1: F, m2: F) -> Result<F> {
    let shape = BetaShape::from_moments(m1, m2)?;
    Ok(F::one() - reg_inc_beta(gamma, shape.a, shape.b)?)
}

/// Moments, beta fit and TSP-class discretization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaModel<F> {
    pub m1: F,
    pub m2: F,
    /// `None` for a point-mass TSP distribution.
    pub shape: Option<BetaShape<F>>,
    /// Class boundaries `omega_0 = 0 < ... < omega_L = 1`.
    pub omegas: Vec<F>,
    /// Class representatives `s_1 <= ... <= s_L`.
    pub medians: Vec<F>,
}

impl<F: Real> MetaModel<F> {
    /// Meta-distribution CCDF at `gamma`. A degenerate model is a point
    /// mass at `m1`.
    pub fn ccdf(&self, gamma: F) -> Result<F> {
        match self.shape {
            Some(BetaShape { a, b }) => Ok(F::one() - reg_inc_beta(gamma, a, b)?),
            None => Ok(if gamma < self.m1 { F::one() } else { F::zero() }),
        }
    }

    pub fn classes(&self) -> usize {
        self.medians.len()
    }

    /// Builds the model for the activity in `state`.
    pub fn from_state(net: &NetworkParams<F>, state: &MacroState<F>, classes: usize, tol: F) -> Result<Self> {
        let m1 = moment_m1(net, state.x1);
        let m2 = moment_m2(net, state.x1, state.ys)?;
        tsp_class_medians(classes, m1, m2, tol)
    }
}

/// Splits the TSP distribution into `classes` equal-mass intervals and
/// returns each interval's median.
///
/// Boundary `omega_l` is the beta quantile at `l / L` and median `s_l` the
/// quantile at `(2l - 1) / (2L)`, so each interval carries mass `1/L` split
/// evenly by its median. A degenerate fit puts every median at `m1`.
pub fn tsp_class_medians<F: Real>(classes: usize, m1: F, m2: F, tol: F) -> Result<MetaModel<F>> {
    if classes < 1 {
        return Err(invalid("number of TSP classes L must be at least 1"));
    }
    let shape = match BetaShape::from_moments(m1, m2) {
        Ok(shape) => shape,
        Err(Error::DegenerateBeta(_)) => {
            let l = F::from_count(classes);
            let omegas = (0..=classes).map(|i| F::from_count(i) / l).collect();
            return Ok(MetaModel {
                m1,
                m2,
                shape: None,
                omegas,
                medians: vec![m1; classes],
            });
        }
        Err(e) => return Err(e),
    };
    let l = F::from_count(classes);
    let two = F::lit(2.0);
    let mut omegas = Vec::with_capacity(classes + 1);
    omegas.push(F::zero());
    for i in 1..classes {
        omegas.push(inv_reg_inc_beta(F::from_count(i) / l, shape.a, shape.b, tol)?);
    }
    omegas.push(F::one());
    let medians = (1..=classes)
        .map(|i| {
            let p = (two * F::from_count(i) - F::one()) / (two * l);
            inv_reg_inc_beta(p, shape.a, shape.b, tol)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetaModel {
        m1,
        m2,
        shape: Some(shape),
        omegas,
        medians,
    })
}
