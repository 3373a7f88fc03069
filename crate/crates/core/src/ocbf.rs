//! Time-driven OCBF: the CBF/CLF-constrained tracking QP re-solved every
//! control period.

use serde::{Deserialize, Serialize};

use crate::model::{self, CavState, GainConfig, NeighborView, VehicleLimits};
use crate::qp::{self, QpProblem, QpRow, RowKind};

/// Reference values the QP tracks at the current instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingTarget {
    pub u_ref: f64,
    /// Reference speed for the CLF row; `None` drops the row.
    pub v_ref: Option<f64>,
}

/// Control applied when a QP is infeasible.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    /// Maximum braking, `u = u_min`.
    #[default]
    MaxBrake,
    /// Keep the previously applied control.
    HoldPrevious,
}

impl Fallback {
    pub fn control(self, previous: f64, lim: &VehicleLimits) -> f64 {
        match self {
            Fallback::MaxBrake => lim.u_min,
            Fallback::HoldPrevious => lim.clamp_u(previous),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub u: f64,
    pub e: f64,
    pub feasible: bool,
}

/// Rear-end CBF row `(v_ip - v_i) - phi u + k1 b1 >= 0`.
pub fn rear_end_row(xi: &CavState, ip: &model::Snapshot, g: &GainConfig) -> QpRow {
    QpRow::new(-g.phi, 0.0, ip.v - xi.v + g.k1 * model::b1(xi, ip, g)).with_kind(RowKind::RearEnd)
}

/// Merging CBF row
/// `(v_ic - v_i - (phi/L) v_i²) - (phi x_i / L) u + k2 b2 >= 0`.
pub fn merge_row(xi: &CavState, ic: &model::Snapshot, g: &GainConfig) -> QpRow {
    let lf = ic.v - xi.v - g.phi / g.length * xi.v * xi.v;
    let lg = -g.phi * xi.x / g.length;
    QpRow::new(lg, 0.0, lf + g.k2 * model::b2(xi, ic, g)).with_kind(RowKind::Merge)
}

pub fn speed_max_row(xi: &CavState, g: &GainConfig, lim: &VehicleLimits) -> QpRow {
    QpRow::new(-1.0, 0.0, g.k3 * model::b3(xi, lim)).with_kind(RowKind::SpeedMax)
}

pub fn speed_min_row(xi: &CavState, g: &GainConfig, lim: &VehicleLimits) -> QpRow {
    QpRow::new(1.0, 0.0, g.k4 * model::b4(xi, lim)).with_kind(RowKind::SpeedMin)
}

/// CLF row `e - 2 (v - v_ref) u - eps (v - v_ref)² >= 0`.
pub fn clf_row(v: f64, v_ref: f64, g: &GainConfig) -> QpRow {
    let clf = model::clf_terms(v, v_ref, g.epsilon);
    QpRow::new(-clf.coeff_u, 1.0, -clf.constant).with_kind(RowKind::Clf)
}

/// Assembles the time-driven QP: control bounds, the CBF rows for every
/// present neighbor, both speed rows and the CLF row.
pub fn build_rows(
    xi: &CavState,
    nb: &NeighborView,
    g: &GainConfig,
    lim: &VehicleLimits,
    target: &TrackingTarget,
) -> QpProblem {
    let mut p = QpProblem::with_bounds(target.u_ref, g.lambda, lim.u_min, lim.u_max);
    if let Some(ip) = &nb.ip {
        p.push(rear_end_row(xi, ip, g));
    }
    if let Some(ic) = &nb.ic {
        p.push(merge_row(xi, ic, g));
    }
    p.push(speed_max_row(xi, g, lim));
    p.push(speed_min_row(xi, g, lim));
    if let Some(v_ref) = target.v_ref {
        p.push(clf_row(xi.v, v_ref, g));
    }
    p
}

/// Solves a prepared QP, substituting the fallback control on infeasibility.
pub fn solve_or_fallback(p: &QpProblem, previous_u: f64, fallback: Fallback, lim: &VehicleLimits) -> StepOutcome {
    let sol = qp::solve(p);
    if sol.is_feasible() {
        StepOutcome {
            u: lim.clamp_u(sol.u),
            e: sol.e,
            feasible: true,
        }
    } else {
        StepOutcome {
            u: fallback.control(previous_u, lim),
            e: 0.0,
            feasible: false,
        }
    }
}

/// One time-driven control update.
pub fn time_driven_step(
    xi: &CavState,
    nb: &NeighborView,
    g: &GainConfig,
    lim: &VehicleLimits,
    target: &TrackingTarget,
    fallback: Fallback,
) -> StepOutcome {
    let p = build_rows(xi, nb, g, lim, target);
    solve_or_fallback(&p, xi.u, fallback, lim)
}
