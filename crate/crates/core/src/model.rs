//! Vehicle state, limits and gains, the four constraint functions and the
//! speed-tracking Lyapunov row, plus double-integrator dynamics.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Origin of a vehicle: the main road or the merging road.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lane {
    Main,
    Merge,
}

impl Lane {
    pub fn other(self) -> Lane {
        match self {
            Lane::Main => Lane::Merge,
            Lane::Merge => Lane::Main,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Lane::Main => "main",
            Lane::Merge => "merge",
        }
    }
}

impl fmt::Display for Lane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VehicleLimits {
    pub v_min: f64,
    pub v_max: f64,
    pub u_min: f64,
    pub u_max: f64,
}

impl Default for VehicleLimits {
    fn default() -> Self {
        Self {
            v_min: 0.0,
            v_max: 30.0,
            u_min: -5.886,
            u_max: 4.905,
        }
    }
}

impl VehicleLimits {
    /// Worst-case control magnitude `max(|u_min|, u_max)`.
    pub fn u_m(&self) -> f64 {
        self.u_min.abs().max(self.u_max)
    }

    pub fn clamp_u(&self, u: f64) -> f64 {
        u.clamp(self.u_min, self.u_max)
    }

    pub fn clamp_v(&self, v: f64) -> f64 {
        v.clamp(self.v_min, self.v_max)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.v_min >= 0.0 && self.v_max > self.v_min) {
            return Err(format!(
                "speed limits require v_max > v_min >= 0 (got v_min={}, v_max={})",
                self.v_min, self.v_max
            ));
        }
        if !(self.u_min < 0.0 && self.u_max > 0.0) {
            return Err(format!(
                "control limits require u_min < 0 < u_max (got u_min={}, u_max={})",
                self.u_min, self.u_max
            ));
        }
        Ok(())
    }
}

/// Class-K slopes, QP weights and the geometric constants shared by every
/// vehicle in the zone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GainConfig {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    /// Weight of the CLF relaxation in the QP objective.
    pub lambda: f64,
    /// CLF convergence rate.
    pub epsilon: f64,
    /// Reaction time, s.
    pub phi: f64,
    /// Minimum standstill gap, m.
    pub delta: f64,
    /// Distance from each origin to the merging point, m.
    pub length: f64,
    /// Travel-time weight of the normalized objective, in `[0, 1)`.
    pub alpha: f64,
}

impl Default for GainConfig {
    fn default() -> Self {
        Self {
            k1: 1.0,
            k2: 1.0,
            k3: 1.0,
            k4: 1.0,
            lambda: 10.0,
            epsilon: 1.0,
            phi: 1.8,
            delta: 0.0,
            length: 400.0,
            alpha: 0.1,
        }
    }
}

impl GainConfig {
    /// Travel-time weight of the un-normalized objective:
    /// `alpha * max(u_max², u_min²) / (2 (1 - alpha))`.
    pub fn beta(&self, lim: &VehicleLimits) -> f64 {
        let umax2 = lim.u_max.powi(2).max(lim.u_min.powi(2));
        self.alpha * umax2 / (2.0 * (1.0 - self.alpha))
    }

    /// Inverse of [`GainConfig::beta`].
    pub fn alpha_for_beta(beta: f64, lim: &VehicleLimits) -> f64 {
        let umax2 = lim.u_max.powi(2).max(lim.u_min.powi(2));
        2.0 * beta / (umax2 + 2.0 * beta)
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, k) in [("k1", self.k1), ("k2", self.k2), ("k3", self.k3), ("k4", self.k4)] {
            if !(k > 0.0) {
                return Err(format!("{name} must be > 0 (got {k})"));
            }
        }
        if !(self.lambda > 0.0) {
            return Err(format!("lambda must be > 0 (got {})", self.lambda));
        }
        if !(self.epsilon > 0.0) {
            return Err(format!("epsilon must be > 0 (got {})", self.epsilon));
        }
        if !(self.phi >= 0.0 && self.delta >= 0.0) {
            return Err("phi and delta must be nonnegative".into());
        }
        if !(self.length > 0.0) {
            return Err(format!("length must be > 0 (got {})", self.length));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(format!("alpha must lie in [0, 1) (got {})", self.alpha));
        }
        Ok(())
    }
}

/// Position, speed and applied control of one CAV with its solve bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavState {
    pub id: usize,
    pub lane: Lane,
    /// Distance from the vehicle's own origin, m.
    pub x: f64,
    pub v: f64,
    pub u: f64,
    pub t_last: f64,
    /// Scheduled next solve; only meaningful for self-triggered control.
    pub t_next: f64,
}

impl CavState {
    pub fn new(id: usize, lane: Lane, x: f64, v: f64) -> Self {
        Self {
            id,
            lane,
            x,
            v,
            u: 0.0,
            t_last: 0.0,
            t_next: f64::INFINITY,
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            x: self.x,
            v: self.v,
            u: self.u,
            t_last: self.t_last,
        }
    }
}

/// What a vehicle knows about a neighbor at solve time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snapshot {
    pub x: f64,
    pub v: f64,
    pub u: f64,
    pub t_last: f64,
}

impl Snapshot {
    pub fn at(x: f64, v: f64) -> Self {
        Self {
            x,
            v,
            u: 0.0,
            t_last: 0.0,
        }
    }
}

/// The preceding vehicle in the same lane and the merging-conflict vehicle.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NeighborView {
    pub ip: Option<Snapshot>,
    pub ic: Option<Snapshot>,
}

impl NeighborView {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn count(&self) -> usize {
        self.ip.is_some() as usize + self.ic.is_some() as usize
    }
}

/// Rear-end safety: `x_ip - x_i - phi v_i - delta`.
pub fn b1(xi: &CavState, xip: &Snapshot, g: &GainConfig) -> f64 {
    rear_end_gap(xi.x, xi.v, xip.x, g)
}

pub(crate) fn rear_end_gap(x: f64, v: f64, x_ip: f64, g: &GainConfig) -> f64 {
    x_ip - x - g.phi * v - g.delta
}

/// Safe merging relaxed along the road: `x_ic - x_i - (phi x_i / L) v_i - delta`.
pub fn b2(xi: &CavState, xic: &Snapshot, g: &GainConfig) -> f64 {
    merge_gap(xi.x, xi.v, xic.x, g)
}

pub(crate) fn merge_gap(x: f64, v: f64, x_ic: f64, g: &GainConfig) -> f64 {
    x_ic - x - g.phi * x / g.length * v - g.delta
}

pub fn b3(xi: &CavState, lim: &VehicleLimits) -> f64 {
    lim.v_max - xi.v
}

pub fn b4(xi: &CavState, lim: &VehicleLimits) -> f64 {
    xi.v - lim.v_min
}

/// The speed-tracking CLF row `coeff_u * u + constant <= e` for
/// `V = (v - v_ref)²`. The drift along `f` vanishes for these dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClfRow {
    pub coeff_u: f64,
    pub constant: f64,
}

pub fn clf_terms(v: f64, v_ref: f64, epsilon: f64) -> ClfRow {
    let err = v - v_ref;
    ClfRow {
        coeff_u: 2.0 * err,
        constant: epsilon * err * err,
    }
}

/// Additive disturbance on both integrator channels, drawn uniformly and
/// held constant over each integration substep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    pub enabled: bool,
    /// Half-width of the position-rate disturbance, m/s.
    pub position: f64,
    /// Half-width of the speed-rate disturbance, m/s².
    pub speed: f64,
    /// Substeps per integration interval.
    pub substeps: usize,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            enabled: false,
            position: 2.0,
            speed: 0.2,
            substeps: 20,
        }
    }
}

/// Advances `(x, v)` by `dt` with `u` held constant.
///
/// Without noise this is the exact double-integrator update. With noise the
/// interval is split into `substeps` pieces, each with a fresh uniform draw
/// of `(w1, w2)` integrated exactly.
pub fn step_dynamics<R: Rng + ?Sized>(
    xi: &CavState,
    u: f64,
    dt: f64,
    noise: Option<(&NoiseModel, &mut R)>,
) -> CavState {
    let mut next = *xi;
    next.u = u;
    match noise {
        None => {
            next.x = xi.x + xi.v * dt + 0.5 * u * dt * dt;
            next.v = xi.v + u * dt;
        }
        Some((model, rng)) => {
            let n = model.substeps.max(1);
            let h = dt / n as f64;
            let (mut x, mut v) = (xi.x, xi.v);
            for _ in 0..n {
                let w1 = if model.position > 0.0 {
                    rng.gen_range(-model.position..=model.position)
                } else {
                    0.0
                };
                let w2 = if model.speed > 0.0 {
                    rng.gen_range(-model.speed..=model.speed)
                } else {
                    0.0
                };
                let a = u + w2;
                x += (v + w1) * h + 0.5 * a * h * h;
                v += a * h;
            }
            next.x = x;
            next.v = v;
        }
    }
    next
}

/// Noise-free step, for call sites that never inject disturbances.
pub fn step_exact(xi: &CavState, u: f64, dt: f64) -> CavState {
    step_dynamics::<rand::rngs::ThreadRng>(xi, u, dt, None)
}
