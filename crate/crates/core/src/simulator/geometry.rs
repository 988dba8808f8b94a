//! Marked Poisson bipolar network on a square torus.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::params::{NetworkParams, SimConfig, TrafficParams};

/// Side-to-link-distance ratio below which edge effects are noticeable.
pub const MIN_SIDE_RATIO: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

fn wrap_delta(d: f64, side: f64) -> f64 {
    let d = d.abs() % side;
    d.min(side - d)
}

/// Euclidean distance with per-axis wrap-around.
pub fn torus_distance(p: Point, q: Point, side: f64) -> f64 {
    torus_distance_sq(p, q, side).sqrt()
}

pub fn torus_distance_sq(p: Point, q: Point, side: f64) -> f64 {
    let dx = wrap_delta(p.x - q.x, side);
    let dy = wrap_delta(p.y - q.y, side);
    dx * dx + dy * dy
}

/// Warning text when the torus is too small relative to the link distance.
pub fn geometry_warning(side: f64, link_distance: f64) -> Option<String> {
    (side < MIN_SIDE_RATIO * link_distance).then(|| {
        format!("torus side {side} m is below {MIN_SIDE_RATIO}x the link distance {link_distance} m; edge effects may bias results")
    })
}

/// One realization of transmitters, their receivers and duty-cycle offsets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkRealization {
    pub tx_positions: Vec<Point>,
    pub rx_positions: Vec<Point>,
    /// Offset mark of each device in `0..T`.
    pub offsets: Vec<usize>,
    pub side: f64,
}

impl NetworkRealization {
    pub fn len(&self) -> usize {
        self.tx_positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tx_positions.is_empty()
    }

    /// Places `n` links uniformly with uniform receiver bearings and offsets.
    pub fn uniform<R: Rng + ?Sized>(n: usize, link_distance: f64, duty_cycle: usize, side: f64, rng: &mut R) -> Self {
        let mut tx_positions = Vec::with_capacity(n);
        let mut rx_positions = Vec::with_capacity(n);
        let mut offsets = Vec::with_capacity(n);
        for _ in 0..n {
            let tx = Point::new(rng.random::<f64>() * side, rng.random::<f64>() * side);
            let angle = rng.random::<f64>() * std::f64::consts::TAU;
            let rx = Point::new(
                (tx.x + link_distance * angle.cos()).rem_euclid(side),
                (tx.y + link_distance * angle.sin()).rem_euclid(side),
            );
            tx_positions.push(tx);
            rx_positions.push(rx);
            offsets.push(rng.random_range(0..duty_cycle));
        }
        Self {
            tx_positions,
            rx_positions,
            offsets,
            side,
        }
    }
}

/// Draws a Poisson number of devices (mean `lambda * side^2`) on the torus.
pub fn realize_network<R: Rng + ?Sized>(
    net: &NetworkParams<f64>,
    traffic: &TrafficParams<f64>,
    sim: &SimConfig,
    rng: &mut R,
) -> Result<NetworkRealization> {
    if !(2.0 * net.link_distance < sim.side) {
        return Err(invalid("torus side must exceed twice the link distance"));
    }
    let mean = net.lambda * sim.side * sim.side;
    let n = if mean > 0.0 {
        let poisson = Poisson::new(mean).map_err(|e| invalid(format!("device count: {e}")))?;
        poisson.sample(rng) as usize
    } else {
        0
    };
    if n == 0 {
        return Err(Error::EmptyRealization);
    }
    Ok(NetworkRealization::uniform(
        n,
        net.link_distance,
        traffic.duty_cycle,
        sim.side,
        rng,
    ))
}
