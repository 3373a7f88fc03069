//! Self-triggered control.
//!
//! Each solve tightens the CBF rows by margins that keep the original rows
//! nonnegative for at least `min_dwell` under a held control, predicts the
//! first instant any original row would reach zero, and schedules the next
//! solve on the `min_dwell` grid.

use serde::{Deserialize, Serialize};

use crate::model::{CavState, GainConfig, NeighborView, Snapshot, VehicleLimits};
use crate::ocbf::{self, Fallback, StepOutcome, TrackingTarget};
use crate::qp::{QpProblem, QpRow};
use crate::roots;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriggerConfig {
    /// Minimum inter-event time; also the scheduling grid, s.
    pub min_dwell: f64,
    /// Maximum inter-event time, s.
    pub max_dwell: f64,
    /// Use the margin and cubic coefficients exactly as originally printed
    /// (rear-end margin with a bare `|u_ip|` term and `|v_ip|`, merging
    /// terms scaled by `k4`) instead of the derived bounds.
    pub literal_margins: bool,
}

impl Default for TriggerConfig {
    fn default() -> Self {
        Self {
            min_dwell: 0.05,
            max_dwell: 1.0,
            literal_margins: false,
        }
    }
}

impl TriggerConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.min_dwell > 0.0 && self.max_dwell >= self.min_dwell) {
            return Err(format!(
                "trigger times require 0 < T_d <= T_max (got T_d={}, T_max={})",
                self.min_dwell, self.max_dwell
            ));
        }
        Ok(())
    }
}

/// Right-hand-side tightening of each CBF row.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MarginSet {
    /// Maximum-speed row.
    pub sigma1: f64,
    /// Minimum-speed row.
    pub sigma2: f64,
    /// Rear-end row.
    pub sigma3: f64,
    /// Merging row.
    pub sigma4: f64,
}

fn merge_gain(g: &GainConfig, tc: &TriggerConfig) -> f64 {
    if tc.literal_margins {
        g.k4
    } else {
        g.k2
    }
}

/// Margins for a solve at `xi`. With `worst_case` set the neighbors'
/// controls are replaced by `u_M`.
pub fn margins(
    xi: &CavState,
    nb: &NeighborView,
    g: &GainConfig,
    lim: &VehicleLimits,
    tc: &TriggerConfig,
    worst_case: bool,
) -> MarginSet {
    let td = tc.min_dwell;
    let um = lim.u_m();
    let c = g.phi / g.length;
    let neighbor_u = |s: &Snapshot| if worst_case { um } else { s.u.abs() };

    let sigma3 = nb.ip.as_ref().map_or(0.0, |ip| {
        let uip = neighbor_u(ip);
        if tc.literal_margins {
            uip + g.k1 * (0.5 * td * td * (uip + um) + (ip.v.abs() + (1.0 + g.phi) * um) * td)
        } else {
            // bounds |Δu| τ + k1 (|Δu| τ²/2 + |Δv| τ + phi |u| τ) on [0, T_d]
            let dv = (ip.v - xi.v).abs();
            (uip + um) * td + g.k1 * (0.5 * td * td * (uip + um) + (dv + g.phi * um) * td)
        }
    });

    let sigma4 = nb.ic.as_ref().map_or(0.0, |ic| {
        let uic = neighbor_u(ic);
        let k = merge_gain(g, tc);
        let (v, x) = (xi.v.abs(), xi.x.abs());
        if tc.literal_margins {
            0.5 * c * um * um * td.powi(3)
                + k * (1.5 * c * (um * um + v * um) + 0.5 * (uic + um)) * td * td
                + (uic + (3.0 * c * v + c * x + 1.0) * um + ic.v.abs() + v + c * xi.v * xi.v) * k * td
        } else {
            0.5 * k * c * um * um * td.powi(3)
                + (1.5 * c * um * um + 0.5 * k * (uic + um) + 1.5 * k * c * um * v) * td * td
                + ((uic + um) + 3.0 * c * um * v + k * (ic.v.abs() + v + c * xi.v * xi.v + c * um * x)) * td
        }
    });

    MarginSet {
        sigma1: g.k3 * um * td,
        sigma2: g.k4 * um * td,
        sigma3,
        sigma4,
    }
}

/// The margin-tightened QP.
pub fn build_rows(
    xi: &CavState,
    nb: &NeighborView,
    g: &GainConfig,
    lim: &VehicleLimits,
    target: &TrackingTarget,
    m: &MarginSet,
) -> QpProblem {
    let tighten = |row: QpRow, sigma: f64| QpRow { c0: row.c0 - sigma, ..row };
    let mut p = QpProblem::with_bounds(target.u_ref, g.lambda, lim.u_min, lim.u_max);
    if let Some(ip) = &nb.ip {
        p.push(tighten(ocbf::rear_end_row(xi, ip, g), m.sigma3));
    }
    if let Some(ic) = &nb.ic {
        p.push(tighten(ocbf::merge_row(xi, ic, g), m.sigma4));
    }
    p.push(tighten(ocbf::speed_max_row(xi, g, lim), m.sigma1));
    p.push(tighten(ocbf::speed_min_row(xi, g, lim), m.sigma2));
    if let Some(v_ref) = target.v_ref {
        p.push(ocbf::clf_row(xi.v, v_ref, g));
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfSolve {
    pub outcome: StepOutcome,
    pub margins: MarginSet,
}

pub fn self_triggered_qp(
    xi: &CavState,
    nb: &NeighborView,
    g: &GainConfig,
    lim: &VehicleLimits,
    tc: &TriggerConfig,
    target: &TrackingTarget,
    worst_case_neighbors: bool,
    fallback: Fallback,
) -> SelfSolve {
    let m = margins(xi, nb, g, lim, tc, worst_case_neighbors);
    let p = build_rows(xi, nb, g, lim, target, &m);
    SelfSolve {
        outcome: ocbf::solve_or_fallback(&p, xi.u, fallback, lim),
        margins: m,
    }
}

/// Polynomial coefficients (ascending powers of `τ`) of the rear-end row
/// value along constant controls.
pub fn rear_end_poly(xi: &CavState, ip: &Snapshot, u: f64, g: &GainConfig) -> [f64; 3] {
    let c0 = ocbf::rear_end_row(xi, ip, g).eval(u, 0.0);
    let du = ip.u - u;
    let dv = ip.v - xi.v;
    [c0, du + g.k1 * (dv - g.phi * u), 0.5 * g.k1 * du]
}

/// Polynomial coefficients (ascending) of the merging row value along
/// constant controls.
pub fn merge_poly(xi: &CavState, ic: &Snapshot, u: f64, g: &GainConfig, tc: &TriggerConfig) -> [f64; 4] {
    let c0 = ocbf::merge_row(xi, ic, g).eval(u, 0.0);
    let c = g.phi / g.length;
    let du = ic.u - u;
    let dv = ic.v - xi.v;
    let (v, x) = (xi.v, xi.x);
    if tc.literal_margins {
        let k = g.k4;
        [
            c0,
            k * (du - 3.0 * c * v * u + dv - c * v * v - c * u * x),
            0.5 * du - k * 1.5 * c * u * u - k * 1.5 * c * v * u,
            -k * 0.5 * c * u * u,
        ]
    } else {
        let k = g.k2;
        [
            c0,
            du - 3.0 * c * u * v + k * (dv - c * v * v - c * u * x),
            -1.5 * c * u * u + 0.5 * k * du - 1.5 * k * c * u * v,
            -0.5 * k * c * u * u,
        ]
    }
}

/// Predicted first zero of each original CBF row under held controls:
/// `[max speed, min speed, rear-end, merging]`, `+∞` when never reached or
/// the neighbor is absent. Neighbor snapshots must be current at `t_now`.
pub fn predict_trigger_times(
    xi: &CavState,
    nb: &NeighborView,
    u: f64,
    g: &GainConfig,
    lim: &VehicleLimits,
    tc: &TriggerConfig,
    t_now: f64,
) -> [f64; 4] {
    let t1 = if u > 0.0 {
        t_now + (-u + g.k3 * lim.v_max - g.k3 * xi.v) / (g.k3 * u)
    } else {
        f64::INFINITY
    };
    let t2 = if u < 0.0 {
        t_now + (-u + g.k4 * lim.v_min - g.k4 * xi.v) / (g.k4 * u)
    } else {
        f64::INFINITY
    };
    let t3 = nb.ip.as_ref().map_or(f64::INFINITY, |ip| {
        let [c0, c1, c2] = rear_end_poly(xi, ip, u, g);
        roots::least_positive(&roots::quadratic_roots(c2, c1, c0)).map_or(f64::INFINITY, |tau| t_now + tau)
    });
    let t4 = nb.ic.as_ref().map_or(f64::INFINITY, |ic| {
        let [c0, c1, c2, c3] = merge_poly(xi, ic, u, g, tc);
        roots::least_positive(&roots::cubic_roots(c3, c2, c1, c0)).map_or(f64::INFINITY, |tau| t_now + tau)
    });
    [t1, t2, t3, t4]
}

fn to_grid(t: f64, td: f64) -> f64 {
    // floor with a tolerance for representation error of multiples of td
    (t / td + 1e-9).floor()
}

/// Next solve instant in grid units of `min_dwell`, and whether it falls on
/// a neighbor's scheduled instant (worst-case protocol for that solve).
pub fn next_grid_index(
    candidates: [f64; 4],
    k_now: u64,
    tc: &TriggerConfig,
    ip_next: Option<u64>,
    ic_next: Option<u64>,
) -> (u64, bool) {
    let td = tc.min_dwell;
    let t_now = k_now as f64 * td;
    let t_min = candidates.iter().copied().fold(t_now + tc.max_dwell, f64::min);
    let r_min = ip_next.into_iter().chain(ic_next).min();
    let k_next = match r_min {
        Some(r) if to_grid(t_min, td) > r as f64 => r + 1,
        _ => {
            let k = to_grid(t_min, td);
            if k.is_finite() && k > 0.0 {
                k as u64
            } else {
                0
            }
        }
    };
    let k_next = k_next.max(k_now + 1);
    let coincides = ip_next == Some(k_next) || ic_next == Some(k_next);
    (k_next, coincides)
}

/// [`next_grid_index`] in seconds.
pub fn next_instant(
    candidates: [f64; 4],
    t_now: f64,
    tc: &TriggerConfig,
    t_ip_next: Option<f64>,
    t_ic_next: Option<f64>,
) -> (f64, bool) {
    let td = tc.min_dwell;
    let k_now = (t_now / td).round() as u64;
    let grid = |t: Option<f64>| t.filter(|t| t.is_finite()).map(|t| (t / td).round() as u64);
    let (k, flag) = next_grid_index(candidates, k_now, tc, grid(t_ip_next), grid(t_ic_next));
    (k as f64 * td, flag)
}
