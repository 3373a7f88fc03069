//! Event-triggered control: each solve anchors a state box around the
//! vehicle and its neighbors, the CBF rows are replaced by their minima over
//! those boxes, and the next solve happens when any anchored state leaves
//! its box.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CavState, GainConfig, NeighborView, Snapshot, VehicleLimits};
use crate::ocbf::{self, Fallback, StepOutcome, TrackingTarget};
use crate::qp::{self, QpProblem, QpRow, RowKind};

/// Half-widths of the state box in position and speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxSize {
    pub s_x: f64,
    pub s_v: f64,
}

impl Default for BoxSize {
    fn default() -> Self {
        Self { s_x: 1.5, s_v: 0.5 }
    }
}

/// A state box anchored at a solve instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundSet {
    pub s_x: f64,
    pub s_v: f64,
    pub anchor_x: f64,
    pub anchor_v: f64,
    pub anchor_time: f64,
}

impl BoundSet {
    pub fn anchored(size: BoxSize, x: f64, v: f64, t: f64) -> Self {
        Self {
            s_x: size.s_x,
            s_v: size.s_v,
            anchor_x: x,
            anchor_v: v,
            anchor_time: t,
        }
    }

    /// Boundary reached or crossed.
    pub fn exited(&self, x: f64, v: f64) -> bool {
        (x - self.anchor_x).abs() >= self.s_x || (v - self.anchor_v).abs() >= self.s_v
    }

    pub fn contains(&self, x: f64, v: f64) -> bool {
        !self.exited(x, v)
    }
}

/// Smallest bounds that a sensor sampled every `t_s` can still resolve:
/// `(v_max t_s, max(u_max, |u_min|) t_s)`.
pub fn min_bounds(lim: &VehicleLimits, t_s: f64) -> (f64, f64) {
    (lim.v_max * t_s, lim.u_m() * t_s)
}

/// One box-minimized CBF row `bmin_f + bmin_g u + bmin_gamma >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizedRow {
    pub kind: RowKind,
    pub bmin_f: f64,
    pub bmin_g: f64,
    pub bmin_gamma: f64,
}

impl MinimizedRow {
    pub fn to_qp_row(&self) -> QpRow {
        QpRow::new(self.bmin_g, 0.0, self.bmin_f + self.bmin_gamma).with_kind(self.kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    fn around(c: f64, s: f64) -> Self {
        Self { lo: c - s, hi: c + s }
    }

    fn clamp(self, lo: f64, hi: f64) -> Option<Self> {
        let out = Self {
            lo: self.lo.max(lo),
            hi: self.hi.min(hi),
        };
        (out.lo <= out.hi).then_some(out)
    }
}

const GRID: usize = 33;

/// Minimum of `f` over a rectangle: a `GRID × GRID` sweep followed by one
/// refinement sweep over the cells adjacent to the best node.
pub fn grid_min_2d(f: impl Fn(f64, f64) -> f64, x: (f64, f64), y: (f64, f64)) -> f64 {
    let sweep = |x: (f64, f64), y: (f64, f64)| {
        let (dx, dy) = ((x.1 - x.0) / (GRID - 1) as f64, (y.1 - y.0) / (GRID - 1) as f64);
        let mut best = (f64::INFINITY, 0, 0);
        for i in 0..GRID {
            // land exactly on the upper edge
            let xi = if i == GRID - 1 { x.1 } else { x.0 + dx * i as f64 };
            for j in 0..GRID {
                let yj = if j == GRID - 1 { y.1 } else { y.0 + dy * j as f64 };
                let val = f(xi, yj);
                if val < best.0 {
                    best = (val, i, j);
                }
            }
        }
        (best, dx, dy)
    };
    let ((coarse, bi, bj), dx, dy) = sweep(x, y);
    let cell = |lo: f64, hi: f64, d: f64, k: usize| {
        let c = lo + d * k as f64;
        ((c - d).max(lo), (c + d).min(hi))
    };
    let ((fine, _, _), _, _) = sweep(cell(x.0, x.1, dx, bi), cell(y.0, y.1, dy, bj));
    coarse.min(fine)
}

/// Boxes used by the minimization: the own box plus a box per neighbor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxContext<'a> {
    pub own: &'a BoundSet,
    pub ip: Option<&'a BoundSet>,
    pub ic: Option<&'a BoundSet>,
}

struct OwnRanges {
    x: Interval,
    v: Interval,
}

fn own_ranges(own: &BoundSet, g: &GainConfig, lim: &VehicleLimits) -> Result<OwnRanges> {
    let x = Interval::around(own.anchor_x, own.s_x)
        .clamp(0.0, g.length)
        .ok_or(Error::EmptyIntersection {
            constraint: "position outside the control zone",
        })?;
    let v = Interval::around(own.anchor_v, own.s_v)
        .clamp(lim.v_min, lim.v_max)
        .ok_or(Error::EmptyIntersection {
            constraint: "speed limits",
        })?;
    Ok(OwnRanges { x, v })
}

fn neighbor_ranges(b: &BoundSet, lim: &VehicleLimits) -> (Interval, Interval) {
    let x = Interval::around(b.anchor_x, b.s_x);
    let v = Interval::around(b.anchor_v, b.s_v)
        .clamp(lim.v_min, lim.v_max)
        .unwrap_or(Interval {
            lo: b.anchor_v,
            hi: b.anchor_v,
        });
    (x, v)
}

/// Rear-end row minimized over the boxes (corner selection).
pub fn rear_end_min(own: &BoundSet, ip: &BoundSet, g: &GainConfig, lim: &VehicleLimits) -> Result<MinimizedRow> {
    let r = own_ranges(own, g, lim)?;
    let (xp, vp) = neighbor_ranges(ip, lim);
    let b_max = xp.hi - r.x.lo - g.phi * r.v.lo - g.delta;
    if b_max < 0.0 {
        return Err(Error::EmptyIntersection { constraint: "rear-end" });
    }
    let b_min = xp.lo - r.x.hi - g.phi * r.v.hi - g.delta;
    Ok(MinimizedRow {
        kind: RowKind::RearEnd,
        bmin_f: vp.lo - r.v.hi,
        bmin_g: -g.phi,
        bmin_gamma: g.k1 * b_min.max(0.0),
    })
}

/// Merging row minimized over the boxes. The drift and class-K terms are
/// nonlinear in the own state and are minimized on a refined grid; the
/// control coefficient takes its minimum when `u_sign_hint >= 0` and its
/// maximum otherwise.
pub fn merge_min(
    own: &BoundSet,
    ic: &BoundSet,
    g: &GainConfig,
    lim: &VehicleLimits,
    u_sign_hint: f64,
) -> Result<MinimizedRow> {
    let r = own_ranges(own, g, lim)?;
    let (xc, vc) = neighbor_ranges(ic, lim);
    let c = g.phi / g.length;
    let b_max = -grid_min_2d(|x, v| -(xc.hi - x - c * x * v - g.delta), (r.x.lo, r.x.hi), (r.v.lo, r.v.hi));
    if b_max < 0.0 {
        return Err(Error::EmptyIntersection { constraint: "merging" });
    }
    let lf_min = grid_min_2d(|_, v| vc.lo - v - c * v * v, (r.x.lo, r.x.hi), (r.v.lo, r.v.hi));
    let b_min = grid_min_2d(|x, v| xc.lo - x - c * x * v - g.delta, (r.x.lo, r.x.hi), (r.v.lo, r.v.hi));
    let bmin_g = if u_sign_hint >= 0.0 { -c * r.x.hi } else { -c * r.x.lo };
    Ok(MinimizedRow {
        kind: RowKind::Merge,
        bmin_f: lf_min,
        bmin_g,
        bmin_gamma: g.k2 * b_min.max(0.0),
    })
}

pub fn speed_max_min(own: &BoundSet, g: &GainConfig, lim: &VehicleLimits) -> Result<MinimizedRow> {
    let r = own_ranges(own, g, lim)?;
    Ok(MinimizedRow {
        kind: RowKind::SpeedMax,
        bmin_f: 0.0,
        bmin_g: -1.0,
        bmin_gamma: g.k3 * (lim.v_max - r.v.hi).max(0.0),
    })
}

pub fn speed_min_min(own: &BoundSet, g: &GainConfig, lim: &VehicleLimits) -> Result<MinimizedRow> {
    let r = own_ranges(own, g, lim)?;
    Ok(MinimizedRow {
        kind: RowKind::SpeedMin,
        bmin_f: 0.0,
        bmin_g: 1.0,
        bmin_gamma: g.k4 * (r.v.lo - lim.v_min).max(0.0),
    })
}

/// All box-minimized CBF rows for the present neighbors.
pub fn minimized_rows(
    boxes: &BoxContext<'_>,
    g: &GainConfig,
    lim: &VehicleLimits,
    u_sign_hint: f64,
) -> Result<Vec<MinimizedRow>> {
    let mut rows = Vec::with_capacity(4);
    if let Some(ip) = boxes.ip {
        rows.push(rear_end_min(boxes.own, ip, g, lim)?);
    }
    if let Some(ic) = boxes.ic {
        rows.push(merge_min(boxes.own, ic, g, lim, u_sign_hint)?);
    }
    rows.push(speed_max_min(boxes.own, g, lim)?);
    rows.push(speed_min_min(boxes.own, g, lim)?);
    Ok(rows)
}

/// The triggered QP: control bounds, box-minimized CBF rows and the CLF row.
pub fn box_min_rows(
    xi: &CavState,
    boxes: &BoxContext<'_>,
    g: &GainConfig,
    lim: &VehicleLimits,
    target: &TrackingTarget,
    u_sign_hint: f64,
) -> Result<QpProblem> {
    let mut p = QpProblem::with_bounds(target.u_ref, g.lambda, lim.u_min, lim.u_max);
    for row in minimized_rows(boxes, g, lim, u_sign_hint)? {
        p.push(row.to_qp_row());
    }
    if let Some(v_ref) = target.v_ref {
        p.push(ocbf::clf_row(xi.v, v_ref, g));
    }
    Ok(p)
}

/// Why a vehicle re-solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    /// The vehicle's own state left its box.
    Own,
    /// Neighbor `r` (by vehicle id) left the box anchored at this
    /// vehicle's last solve.
    Neighbor(usize),
    /// First solve after entering the zone.
    Entry,
}

/// Per-vehicle anchors held between solves.
#[derive(Debug, Clone, PartialEq)]
pub struct Anchors {
    pub own: BoundSet,
    /// `(neighbor id, box)` for each relevant vehicle at the last solve.
    pub relevant: Vec<(usize, BoundSet)>,
}

/// Events fired for one vehicle at a sensor sample, given current states
/// looked up by id.
pub fn detect_event(
    own_state: (f64, f64),
    anchors: &Anchors,
    state_of: impl Fn(usize) -> Option<(f64, f64)>,
) -> Vec<Event> {
    let mut events = Vec::new();
    if anchors.own.exited(own_state.0, own_state.1) {
        events.push(Event::Own);
    }
    for (r, b) in &anchors.relevant {
        if let Some((x, v)) = state_of(*r) {
            if b.exited(x, v) {
                events.push(Event::Neighbor(*r));
            }
        }
    }
    events
}

/// Result of a triggered solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventSolve {
    pub outcome: StepOutcome,
    /// The boxes could not be intersected with the safe set.
    pub empty_intersection: bool,
}

/// Two-pass triggered solve: the nominal QP supplies the sign of `u` for
/// the merging row, then the box-minimized QP is solved. If the result
/// disagrees with that sign or is infeasible, the merging row is imposed
/// for both extremes of its control coefficient, which is the exact
/// box-minimum for either sign of `u`.
pub fn event_qp(
    xi: &CavState,
    nb: &NeighborView,
    size: BoxSize,
    g: &GainConfig,
    lim: &VehicleLimits,
    target: &TrackingTarget,
    fallback: Fallback,
) -> EventSolve {
    let nominal = qp::solve(&ocbf::build_rows(xi, nb, g, lim, target));
    let hint = if nominal.is_feasible() { nominal.u } else { target.u_ref };
    let own = BoundSet::anchored(size, xi.x, xi.v, xi.t_last);
    let boxed = |s: &Snapshot| BoundSet::anchored(size, s.x, s.v, xi.t_last);
    let ip = nb.ip.as_ref().map(boxed);
    let ic = nb.ic.as_ref().map(boxed);
    let boxes = BoxContext {
        own: &own,
        ip: ip.as_ref(),
        ic: ic.as_ref(),
    };
    let empty = EventSolve {
        outcome: StepOutcome {
            u: fallback.control(xi.u, lim),
            e: 0.0,
            feasible: false,
        },
        empty_intersection: true,
    };
    let Ok(mut p) = box_min_rows(xi, &boxes, g, lim, target, hint) else {
        return empty;
    };
    let mut out = ocbf::solve_or_fallback(&p, xi.u, fallback, lim);
    if let Some(ic) = boxes.ic {
        if !out.feasible || (out.u >= 0.0) != (hint >= 0.0) {
            let Ok(other) = merge_min(&own, ic, g, lim, -hint) else {
                return empty;
            };
            p.push(other.to_qp_row());
            out = ocbf::solve_or_fallback(&p, xi.u, fallback, lim);
        }
    }
    EventSolve {
        outcome: out,
        empty_intersection: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Lane;

    fn size(s_x: f64, s_v: f64) -> BoxSize {
        BoxSize { s_x, s_v }
    }

    #[test]
    fn min_bounds_default_parameters() {
        let lim = VehicleLimits::default();
        let (sx, sv) = min_bounds(&lim, 0.05);
        assert!((sx - 1.5).abs() < 1e-12);
        assert!((sv - 0.2943).abs() < 1e-12);
        let (sx, sv) = min_bounds(&lim, 0.0);
        assert_eq!((sx, sv), (0.0, 0.0));
    }

    #[test]
    fn rear_end_corner_values() {
        let g = GainConfig::default();
        let lim = VehicleLimits::default();
        let own = BoundSet::anchored(size(1.5, 0.5), 50.0, 20.0, 0.0);
        let ip = BoundSet::anchored(size(1.5, 0.5), 100.0, 18.0, 0.0);
        let row = rear_end_min(&own, &ip, &g, &lim).unwrap();
        assert!((row.bmin_f + 3.0).abs() < 1e-12);
        assert!((row.bmin_gamma - 10.1).abs() < 1e-9);
        assert_eq!(row.bmin_g, -1.8);
    }

    #[test]
    fn degenerate_boxes_reproduce_time_driven_rows() {
        let g = GainConfig::default();
        let lim = VehicleLimits::default();
        let mut xi = CavState::new(3, Lane::Merge, 150.0, 21.0);
        xi.t_last = 4.0;
        let nb = NeighborView {
            ip: Some(Snapshot::at(210.0, 20.0)),
            ic: Some(Snapshot::at(190.0, 19.5)),
        };
        let target = TrackingTarget {
            u_ref: 0.7,
            v_ref: Some(22.0),
        };
        let nominal = ocbf::build_rows(&xi, &nb, &g, &lim, &target);
        let zero = size(0.0, 0.0);
        let own = BoundSet::anchored(zero, xi.x, xi.v, 4.0);
        let ip = BoundSet::anchored(zero, 210.0, 20.0, 4.0);
        let ic = BoundSet::anchored(zero, 190.0, 19.5, 4.0);
        let boxes = BoxContext {
            own: &own,
            ip: Some(&ip),
            ic: Some(&ic),
        };
        let boxed = box_min_rows(&xi, &boxes, &g, &lim, &target, 1.0).unwrap();
        assert_eq!(nominal.rows.len(), boxed.rows.len());
        for (a, b) in nominal.rows.iter().zip(&boxed.rows) {
            assert_eq!(a.kind, b.kind);
            assert!((a.cu - b.cu).abs() < 1e-12);
            assert!((a.ce - b.ce).abs() < 1e-12);
            assert!((a.c0 - b.c0).abs() < 1e-9, "{:?} vs {:?}", a, b);
        }
        let ev = event_qp(&xi, &nb, zero, &g, &lim, &target, Fallback::MaxBrake);
        let td = ocbf::time_driven_step(&xi, &nb, &g, &lim, &target, Fallback::MaxBrake);
        assert!((ev.outcome.u - td.u).abs() < 1e-9);
    }

    #[test]
    fn larger_boxes_are_more_conservative() {
        let g = GainConfig::default();
        let lim = VehicleLimits::default();
        let mk = |s: f64| {
            let own = BoundSet::anchored(size(s, 0.5), 120.0, 20.0, 0.0);
            let ip = BoundSet::anchored(size(s, 0.5), 180.0, 19.0, 0.0);
            let ic = BoundSet::anchored(size(s, 0.5), 170.0, 21.0, 0.0);
            let boxes = BoxContext {
                own: &own,
                ip: Some(&ip),
                ic: Some(&ic),
            };
            minimized_rows(&boxes, &g, &lim, 1.0).unwrap()
        };
        let small = mk(1.5);
        let large = mk(2.5);
        for (a, b) in small.iter().zip(&large) {
            assert!(b.bmin_f + b.bmin_gamma <= a.bmin_f + a.bmin_gamma + 1e-12);
        }
    }

    #[test]
    fn event_detection() {
        let anchors = Anchors {
            own: BoundSet::anchored(size(1.5, 0.5), 50.0, 20.0, 0.0),
            relevant: vec![(7, BoundSet::anchored(size(1.5, 0.5), 90.0, 20.0, 0.0))],
        };
        assert_eq!(detect_event((51.6, 20.0), &anchors, |_| Some((90.0, 20.0))), vec![Event::Own]);
        assert!(detect_event((50.0, 20.0), &anchors, |_| Some((90.0, 20.0))).is_empty());
        assert_eq!(
            detect_event((50.0, 20.0), &anchors, |_| Some((90.0, 20.6))),
            vec![Event::Neighbor(7)]
        );
    }

    #[test]
    fn empty_intersection_detected() {
        let g = GainConfig::default();
        let lim = VehicleLimits::default();
        let own = BoundSet::anchored(size(1.5, 0.5), 50.0, 20.0, 0.0);
        let ip = BoundSet::anchored(size(1.5, 0.5), 52.0, 20.0, 0.0);
        assert!(matches!(
            rear_end_min(&own, &ip, &g, &lim),
            Err(Error::EmptyIntersection { .. })
        ));
    }
}
