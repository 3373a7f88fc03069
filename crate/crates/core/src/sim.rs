//! Closed-loop simulation of the merging zone.
//!
//! Time advances in sensor samples of `sample_period`. Vehicles arrive on
//! both roads, track their reference through the configured update scheme,
//! read neighbor data through the [`Coordinator`], and leave once they pass
//! the merging point.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coordinator::{Coordinator, MessageCounts};
use crate::error::{Error, Result};
use crate::event::{self, Anchors, BoundSet, BoxSize};
use crate::model::{self, CavState, GainConfig, Lane, NeighborView, NoiseModel, Snapshot, VehicleLimits};
use crate::ocbf::{self, Fallback, TrackingTarget};
use crate::reference::{self, ReferenceSolution};
use crate::selftrig::{self, TriggerConfig};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    TimeDriven,
    EventTriggered,
    SelfTriggered,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::TimeDriven, Scheme::EventTriggered, Scheme::SelfTriggered];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::TimeDriven => "time_driven",
            Scheme::EventTriggered => "event_triggered",
            Scheme::SelfTriggered => "self_triggered",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.as_str() == s || k.as_str().replace('_', "-") == s)
            .ok_or_else(|| format!("unknown scheme {s:?} (expected time_driven, event_triggered or self_triggered)"))
    }
}

/// Trigger parameters of both event-driven schemes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TriggerSettings {
    /// Self-triggered minimum inter-event time and scheduling grid, s.
    pub min_dwell: f64,
    /// Self-triggered maximum inter-event time, s.
    pub max_dwell: f64,
    /// Event-triggered position half-width, m.
    pub s_x: f64,
    /// Event-triggered speed half-width, m/s.
    pub s_v: f64,
    /// Self-triggered margins and cubic exactly as originally printed.
    pub literal_margins: bool,
}

impl Default for TriggerSettings {
    fn default() -> Self {
        let tc = TriggerConfig::default();
        let b = BoxSize::default();
        Self {
            min_dwell: tc.min_dwell,
            max_dwell: tc.max_dwell,
            s_x: b.s_x,
            s_v: b.s_v,
            literal_margins: tc.literal_margins,
        }
    }
}

impl TriggerSettings {
    pub fn self_triggered(&self) -> TriggerConfig {
        TriggerConfig {
            min_dwell: self.min_dwell,
            max_dwell: self.max_dwell,
            literal_margins: self.literal_margins,
        }
    }

    pub fn box_size(&self) -> BoxSize {
        BoxSize {
            s_x: self.s_x,
            s_v: self.s_v,
        }
    }
}

/// Polynomial fuel-rate model: cruise term cubic in speed plus an
/// acceleration term active only when accelerating.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FuelModel {
    pub w0: f64,
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
}

impl Default for FuelModel {
    fn default() -> Self {
        // Kamal et al. (2013), mL/s
        Self {
            w0: 0.1569,
            w1: 2.450e-2,
            w2: -7.415e-4,
            w3: 5.975e-5,
            r0: 0.07224,
            r1: 9.681e-2,
            r2: 1.075e-3,
        }
    }
}

/// Instantaneous fuel rate at speed `v` and control `u`.
pub fn fuel_rate(v: f64, u: f64, c: &FuelModel) -> f64 {
    let cruise = c.w0 + v * (c.w1 + v * (c.w2 + v * c.w3));
    let accel = (c.r0 + v * (c.r1 + v * c.r2)) * u.max(0.0);
    cruise + accel
}

/// A fixed arrival.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduledArrival {
    pub time: f64,
    pub lane: Lane,
    pub v0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArrivalConfig {
    /// Poisson rate on the main road, vehicles/s.
    pub rate_main: f64,
    /// Poisson rate on the merging road, vehicles/s.
    pub rate_merge: f64,
    /// Entry speeds are uniform on `[v0_min, v0_max]`.
    pub v0_min: f64,
    pub v0_max: f64,
    /// Explicit arrivals; when nonempty the Poisson processes are unused.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub vehicle: Vec<ScheduledArrival>,
}

impl Default for ArrivalConfig {
    fn default() -> Self {
        Self {
            rate_main: 0.1,
            rate_merge: 0.1,
            v0_min: 15.0,
            v0_max: 20.0,
            vehicle: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub scheme: Scheme,
    /// Simulated duration, s.
    pub horizon: f64,
    pub seed: u64,
    /// Sensor sampling and integration period, s.
    pub sample_period: f64,
    /// Time-driven control period, s.
    pub control_period: f64,
    pub fallback: Fallback,
    pub limits: VehicleLimits,
    pub gains: GainConfig,
    pub trigger: TriggerSettings,
    pub noise: NoiseModel,
    pub fuel: FuelModel,
    pub arrivals: ArrivalConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::TimeDriven,
            horizon: 200.0,
            seed: 0,
            sample_period: 0.05,
            control_period: 0.05,
            fallback: Fallback::MaxBrake,
            limits: VehicleLimits::default(),
            gains: GainConfig::default(),
            trigger: TriggerSettings::default(),
            noise: NoiseModel::default(),
            fuel: FuelModel::default(),
            arrivals: ArrivalConfig::default(),
        }
    }
}

fn ticks_per(period: f64, base: f64) -> Option<u64> {
    let r = period / base;
    let k = r.round();
    ((r - k).abs() < 1e-9 && k >= 1.0).then_some(k as u64)
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Validation(m));
        self.limits.validate().map_err(Error::Validation)?;
        self.gains.validate().map_err(Error::Validation)?;
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return fail(format!("horizon must be finite and >= 0 (got {})", self.horizon));
        }
        if !(self.sample_period > 0.0) {
            return fail(format!("sample_period must be > 0 (got {})", self.sample_period));
        }
        if ticks_per(self.control_period, self.sample_period).is_none() {
            return fail(format!(
                "control_period ({}) must be a positive multiple of sample_period ({})",
                self.control_period, self.sample_period
            ));
        }
        let tc = self.trigger.self_triggered();
        tc.validate().map_err(Error::Validation)?;
        if ticks_per(tc.min_dwell, self.sample_period).is_none() {
            return fail(format!(
                "trigger.min_dwell ({}) must be a positive multiple of sample_period ({})",
                tc.min_dwell, self.sample_period
            ));
        }
        if self.scheme == Scheme::EventTriggered {
            let (sx_min, sv_min) = event::min_bounds(&self.limits, self.sample_period);
            if self.trigger.s_x < sx_min - 1e-12 {
                return fail(format!(
                    "trigger.s_x = {} is below the detectability lower bound v_max * T_s = {} m",
                    self.trigger.s_x, sx_min
                ));
            }
            if self.trigger.s_v < sv_min - 1e-12 {
                return fail(format!(
                    "trigger.s_v = {} is below the detectability lower bound u_M * T_s = {} m/s",
                    self.trigger.s_v, sv_min
                ));
            }
        }
        let n = &self.noise;
        if !(n.position >= 0.0 && n.speed >= 0.0 && n.substeps >= 1) {
            return fail("noise half-widths must be >= 0 and substeps >= 1".into());
        }
        let a = &self.arrivals;
        if !(a.rate_main >= 0.0 && a.rate_merge >= 0.0) {
            return fail("arrival rates must be >= 0".into());
        }
        if !(a.v0_min > 0.0 && a.v0_max >= a.v0_min && a.v0_max <= self.limits.v_max) {
            return fail(format!(
                "entry speeds require 0 < v0_min <= v0_max <= v_max (got [{}, {}])",
                a.v0_min, a.v0_max
            ));
        }
        for (k, s) in a.vehicle.iter().enumerate() {
            if !(s.time >= 0.0 && s.v0 > 0.0 && s.v0 <= self.limits.v_max) {
                return fail(format!("arrivals.vehicle[{k}] needs time >= 0 and 0 < v0 <= v_max"));
            }
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        self.gains.beta(&self.limits)
    }

    /// Sets `alpha` so that the travel-time weight equals `beta`.
    pub fn set_beta(&mut self, beta: f64) {
        self.gains.alpha = GainConfig::alpha_for_beta(beta, &self.limits);
    }
}

/// Per-vehicle outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct CavRecord {
    pub id: usize,
    pub lane: Lane,
    pub v0: f64,
    /// Scheduled arrival time, s.
    pub arrival: f64,
    /// Entry into the zone (later than `arrival` when held at the origin).
    pub t0: f64,
    /// First sample at or past the merging point.
    pub tf: Option<f64>,
    /// `∫ u²/2 dt`.
    pub energy: f64,
    pub fuel: f64,
    pub qp_count: u64,
    pub infeasible_count: u64,
    /// Solve instants in sensor samples since time zero.
    pub solve_ticks: Vec<u64>,
}

impl CavRecord {
    pub fn travel_time(&self) -> Option<f64> {
        self.tf.map(|tf| tf - self.t0)
    }
}

/// Constraint values of one vehicle at one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub t: f64,
    pub cav_id: usize,
    pub b1: Option<f64>,
    pub b2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub scheme: Scheme,
    pub sample_period: f64,
    pub cavs: Vec<CavRecord>,
    pub traces: Vec<TracePoint>,
    pub messages: MessageCounts,
    /// Vehicles still in the zone at the horizon.
    pub in_zone: usize,
}

/// Aggregates over vehicles that completed the crossing.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Summary {
    pub admitted: usize,
    pub exited: usize,
    pub avg_travel_time: f64,
    pub avg_energy: f64,
    pub avg_fuel: f64,
    pub qp_count: u64,
    pub infeasible_count: u64,
}

impl RunMetrics {
    pub fn qp_count(&self) -> u64 {
        self.cavs.iter().map(|c| c.qp_count).sum()
    }

    pub fn infeasible_count(&self) -> u64 {
        self.cavs.iter().map(|c| c.infeasible_count).sum()
    }

    pub fn exited(&self) -> usize {
        self.cavs.iter().filter(|c| c.tf.is_some()).count()
    }

    /// Samples with `b1 < 0` or `b2 < 0`.
    pub fn violations(&self) -> impl Iterator<Item = &TracePoint> {
        self.traces
            .iter()
            .filter(|p| p.b1.is_some_and(|b| b < 0.0) || p.b2.is_some_and(|b| b < 0.0))
    }

    pub fn min_b1(&self) -> Option<f64> {
        self.traces.iter().filter_map(|p| p.b1).min_by(f64::total_cmp)
    }

    pub fn summary(&self) -> Summary {
        let done: Vec<&CavRecord> = self.cavs.iter().filter(|c| c.tf.is_some()).collect();
        let mean = |f: &dyn Fn(&CavRecord) -> f64| {
            if done.is_empty() {
                0.0
            } else {
                done.iter().map(|c| f(c)).sum::<f64>() / done.len() as f64
            }
        };
        Summary {
            admitted: self.cavs.len(),
            exited: done.len(),
            avg_travel_time: mean(&|c| c.travel_time().unwrap_or(0.0)),
            avg_energy: mean(&|c| c.energy),
            avg_fuel: mean(&|c| c.fuel),
            qp_count: self.qp_count(),
            infeasible_count: self.infeasible_count(),
        }
    }
}

/// Normalized objective `alpha (tf - t0) + (1 - alpha) ∫u²/2 / (max(u²)/2)`
/// averaged over vehicles that completed the crossing.
pub fn objective_value(metrics: &RunMetrics, alpha: f64, lim: &VehicleLimits) -> f64 {
    let norm = 0.5 * lim.u_max.powi(2).max(lim.u_min.powi(2));
    let vals: Vec<f64> = metrics
        .cavs
        .iter()
        .filter_map(|c| c.travel_time().map(|tt| alpha * tt + (1.0 - alpha) * c.energy / norm))
        .collect();
    if vals.is_empty() {
        0.0
    } else {
        vals.iter().sum::<f64>() / vals.len() as f64
    }
}

/// Arrival schedule: explicit list, or one Poisson stream per road drawn
/// from `rng` (main road first).
pub fn arrival_schedule(cfg: &ScenarioConfig, rng: &mut impl Rng) -> Vec<ScheduledArrival> {
    let a = &cfg.arrivals;
    let mut out: Vec<ScheduledArrival> = if !a.vehicle.is_empty() {
        a.vehicle.iter().copied().filter(|s| s.time <= cfg.horizon).collect()
    } else {
        let mut out = Vec::new();
        for (lane, rate) in [(Lane::Main, a.rate_main), (Lane::Merge, a.rate_merge)] {
            if rate <= 0.0 {
                continue;
            }
            let mut t = 0.0;
            loop {
                let u: f64 = rng.gen();
                t += -(1.0 - u).ln() / rate;
                if t > cfg.horizon {
                    break;
                }
                let v0 = if a.v0_max > a.v0_min {
                    rng.gen_range(a.v0_min..=a.v0_max)
                } else {
                    a.v0_min
                };
                out.push(ScheduledArrival { time: t, lane, v0 });
            }
        }
        out
    };
    out.sort_by(|x, y| x.time.total_cmp(&y.time).then(x.lane.cmp(&y.lane)));
    out
}

struct Vehicle {
    state: CavState,
    reference: ReferenceSolution,
    rec: usize,
    entry_tick: u64,
    pending_entry: bool,
    anchors: Option<Anchors>,
    next_grid: u64,
    worst_case_next: bool,
}

struct Engine<'a> {
    cfg: &'a ScenarioConfig,
    beta: f64,
    coord: Coordinator,
    vehicles: Vec<Vehicle>,
    departed: Option<CavState>,
    queues: [VecDeque<ScheduledArrival>; 2],
    metrics: RunMetrics,
    noise_rng: ChaCha8Rng,
    dt_ticks: u64,
    td_ticks: u64,
}

/// Runs one scenario to its horizon.
pub fn run(cfg: &ScenarioConfig) -> Result<RunMetrics> {
    cfg.validate()?;
    let mut arrival_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    noise_rng.set_stream(1);
    let schedule = arrival_schedule(cfg, &mut arrival_rng);
    let mut queues = [VecDeque::new(), VecDeque::new()];
    for s in schedule {
        queues[lane_slot(s.lane)].push_back(s);
    }
    let mut eng = Engine {
        cfg,
        beta: cfg.beta(),
        coord: Coordinator::new(),
        vehicles: Vec::new(),
        departed: None,
        queues,
        metrics: RunMetrics {
            scheme: cfg.scheme,
            sample_period: cfg.sample_period,
            cavs: Vec::new(),
            traces: Vec::new(),
            messages: MessageCounts::default(),
            in_zone: 0,
        },
        noise_rng,
        dt_ticks: ticks_per(cfg.control_period, cfg.sample_period).unwrap_or(1),
        td_ticks: ticks_per(cfg.trigger.min_dwell, cfg.sample_period).unwrap_or(1),
    };
    let last_tick = (cfg.horizon / cfg.sample_period + 1e-9).floor() as u64;
    if cfg.horizon > 0.0 {
        for k in 0..=last_tick {
            eng.tick(k);
        }
    }
    eng.metrics.messages = eng.coord.counts();
    eng.metrics.in_zone = eng.vehicles.len();
    Ok(eng.metrics)
}

fn lane_slot(lane: Lane) -> usize {
    match lane {
        Lane::Main => 0,
        Lane::Merge => 1,
    }
}

impl Engine<'_> {
    fn time(&self, k: u64) -> f64 {
        k as f64 * self.cfg.sample_period
    }

    fn tick(&mut self, k: u64) {
        let t = self.time(k);
        self.exits(t);
        self.admissions(k, t);
        self.trace(t);
        match self.cfg.scheme {
            Scheme::TimeDriven => self.time_driven(k, t),
            Scheme::EventTriggered => self.event_triggered(t),
            Scheme::SelfTriggered => self.self_triggered(k, t),
        }
        self.advance();
    }

    fn exits(&mut self, t: f64) {
        let length = self.cfg.gains.length;
        while self.vehicles.first().is_some_and(|v| v.state.x >= length) {
            let v = self.vehicles.remove(0);
            self.metrics.cavs[v.rec].tf = Some(t);
            self.coord.depart(v.state.x, v.state.v, t);
            let mut s = v.state;
            s.u = 0.0;
            self.departed = Some(s);
        }
    }

    /// Position of the last vehicle admitted on `lane`, if it is still
    /// tracked.
    fn last_on_lane(&self, lane: Lane) -> Option<f64> {
        self.vehicles
            .iter()
            .rev()
            .find(|v| v.state.lane == lane)
            .map(|v| v.state.x)
            .or(self.departed.filter(|d| d.lane == lane).map(|d| d.x))
    }

    fn admissions(&mut self, k: u64, t: f64) {
        if self.cfg.scheme == Scheme::SelfTriggered && !k.is_multiple_of(self.td_ticks) {
            return;
        }
        for lane in [Lane::Main, Lane::Merge] {
            let slot = lane_slot(lane);
            let Some(next) = self.queues[slot].front().copied() else {
                continue;
            };
            if next.time > t + 1e-9 {
                continue;
            }
            let g = &self.cfg.gains;
            let safe = self
                .last_on_lane(lane)
                .is_none_or(|x_ip| model::rear_end_gap(0.0, next.v0, x_ip, g) >= 0.0);
            if !safe {
                continue;
            }
            self.queues[slot].pop_front();
            let id = self.coord.admit(lane, 0.0, next.v0, t);
            let mut state = CavState::new(id, lane, 0.0, next.v0);
            state.t_last = t;
            let reference = reference::reference_or_coast(next.v0, g.length, self.beta);
            self.metrics.cavs.push(CavRecord {
                id,
                lane,
                v0: next.v0,
                arrival: next.time,
                t0: t,
                tf: None,
                energy: 0.0,
                fuel: 0.0,
                qp_count: 0,
                infeasible_count: 0,
                solve_ticks: Vec::new(),
            });
            self.vehicles.push(Vehicle {
                state,
                reference,
                rec: self.metrics.cavs.len() - 1,
                entry_tick: k,
                pending_entry: true,
                anchors: None,
                next_grid: k / self.td_ticks,
                worst_case_next: false,
            });
        }
    }

    fn true_state(&self, id: usize) -> Option<CavState> {
        self.vehicles
            .iter()
            .find(|v| v.state.id == id)
            .map(|v| v.state)
            .or(self.departed.filter(|d| d.id == id))
    }

    fn trace(&mut self, t: f64) {
        let g = self.cfg.gains;
        for k in 0..self.vehicles.len() {
            let s = self.vehicles[k].state;
            let nb = self.coord.neighbors(s.id);
            let b1 = nb.ip.and_then(|r| self.true_state(r)).map(|p| model::b1(&s, &p.snapshot(), &g));
            let b2 = nb.ic.and_then(|r| self.true_state(r)).map(|c| model::b2(&s, &c.snapshot(), &g));
            self.metrics.traces.push(TracePoint {
                t,
                cav_id: s.id,
                b1,
                b2,
            });
        }
    }

    fn target(&self, v: &Vehicle, t: f64) -> TrackingTarget {
        let lim = &self.cfg.limits;
        let since = t - self.metrics.cavs[v.rec].t0;
        TrackingTarget {
            u_ref: v.reference.ref_control(since, lim),
            v_ref: (since <= v.reference.tf).then(|| v.reference.ref_speed(since, lim)),
        }
    }

    /// Neighbor view built from measured states, through the coordinator.
    fn synced_view(&mut self, idx: usize, t: f64, notify: bool) -> NeighborView {
        let s = self.vehicles[idx].state;
        let current: Vec<(usize, Snapshot)> = self
            .vehicles
            .iter()
            .map(|v| (v.state.id, v.state.snapshot()))
            .collect();
        let (view, _) = self.coord.sync(
            s.id,
            (s.x, s.v, s.u),
            t,
            |id| current.iter().find(|(j, _)| *j == id).map(|(_, snap)| *snap),
            notify,
        );
        self.coord.count_reads(view.count());
        view
    }

    fn record_solve(&mut self, idx: usize, k: u64, u: f64, feasible: bool, t: f64) {
        let v = &mut self.vehicles[idx];
        v.state.u = u;
        v.state.t_last = t;
        let rec = &mut self.metrics.cavs[v.rec];
        rec.qp_count += 1;
        rec.solve_ticks.push(k);
        if !feasible {
            rec.infeasible_count += 1;
        }
    }

    fn time_driven(&mut self, k: u64, t: f64) {
        let cfg = self.cfg;
        for idx in 0..self.vehicles.len() {
            let v = &self.vehicles[idx];
            if !(k - v.entry_tick).is_multiple_of(self.dt_ticks) {
                continue;
            }
            let target = self.target(v, t);
            let nb = self.synced_view(idx, t, false);
            let xi = self.vehicles[idx].state;
            let out = ocbf::time_driven_step(&xi, &nb, &cfg.gains, &cfg.limits, &target, cfg.fallback);
            self.coord.set_control(xi.id, out.u);
            self.record_solve(idx, k, out.u, out.feasible, t);
        }
    }

    fn event_triggered(&mut self, t: f64) {
        let cfg = self.cfg;
        let k = (t / cfg.sample_period).round() as u64;
        let size = cfg.trigger.box_size();
        for idx in 0..self.vehicles.len() {
            let v = &self.vehicles[idx];
            let fire = v.pending_entry
                || match &v.anchors {
                    None => true,
                    Some(a) => !event::detect_event((v.state.x, v.state.v), a, |id| {
                        self.true_state(id).map(|s| (s.x, s.v))
                    })
                    .is_empty(),
                };
            if !fire {
                continue;
            }
            let target = self.target(v, t);
            let nb = self.synced_view(idx, t, true);
            let mut xi = self.vehicles[idx].state;
            xi.t_last = t;
            let solve = event::event_qp(&xi, &nb, size, &cfg.gains, &cfg.limits, &target, cfg.fallback);
            let ids = self.coord.neighbors(xi.id);
            let relevant = [(ids.ip, nb.ip), (ids.ic, nb.ic)]
                .into_iter()
                .filter_map(|(id, snap)| Some((id?, BoundSet::anchored(size, snap?.x, snap?.v, t))))
                .collect();
            let veh = &mut self.vehicles[idx];
            veh.pending_entry = false;
            veh.anchors = Some(Anchors {
                own: BoundSet::anchored(size, xi.x, xi.v, t),
                relevant,
            });
            self.coord.set_control(xi.id, solve.outcome.u);
            self.record_solve(idx, k, solve.outcome.u, solve.outcome.feasible, t);
        }
    }

    fn self_triggered(&mut self, k: u64, t: f64) {
        if !k.is_multiple_of(self.td_ticks) {
            return;
        }
        let cfg = self.cfg;
        let tc = cfg.trigger.self_triggered();
        let grid = k / self.td_ticks;
        let to_grid = |s: Option<f64>| s.map(|s| (s / tc.min_dwell).round() as u64);
        for idx in 0..self.vehicles.len() {
            let v = &self.vehicles[idx];
            if v.next_grid != grid {
                continue;
            }
            let target = self.target(v, t);
            let mut xi = v.state;
            xi.t_last = t;
            let ids = self.coord.neighbors(xi.id);
            let mut nb = NeighborView::none();
            let mut next = [None, None];
            let mut same_tick = false;
            for (slot, id) in [(0, ids.ip), (1, ids.ic)] {
                let Some(id) = id else { continue };
                let Some((snap, t_next)) = self.coord.download(id, t) else {
                    continue;
                };
                same_tick |= (snap.t_last - t).abs() < 1e-9 && self.coord.index_of(id) != Some(0);
                next[slot] = to_grid(t_next);
                if slot == 0 {
                    nb.ip = Some(snap);
                } else {
                    nb.ic = Some(snap);
                }
            }
            self.coord.count_reads(nb.count());
            let worst = v.worst_case_next || same_tick;
            let solve = selftrig::self_triggered_qp(
                &xi,
                &nb,
                &cfg.gains,
                &cfg.limits,
                &tc,
                &target,
                worst,
                cfg.fallback,
            );
            let u = solve.outcome.u;
            let (next_grid, flag) = if worst {
                (grid + 1, false)
            } else {
                let cands = selftrig::predict_trigger_times(&xi, &nb, u, &cfg.gains, &cfg.limits, &tc, t);
                selftrig::next_grid_index(cands, grid, &tc, next[0], next[1])
            };
            let veh = &mut self.vehicles[idx];
            veh.next_grid = next_grid;
            veh.worst_case_next = flag;
            veh.pending_entry = false;
            let t_next = next_grid as f64 * tc.min_dwell;
            self.coord.upload(xi.id, xi.x, xi.v, u, t, Some(t_next));
            self.record_solve(idx, k, u, solve.outcome.feasible, t);
        }
    }

    /// Accumulates costs over the coming sample and integrates every
    /// vehicle to the next sample.
    fn advance(&mut self) {
        let ts = self.cfg.sample_period;
        let noise = self.cfg.noise;
        for v in &mut self.vehicles {
            let s = v.state;
            let rec = &mut self.metrics.cavs[v.rec];
            rec.energy += 0.5 * s.u * s.u * ts;
            rec.fuel += fuel_rate(s.v, s.u, &self.cfg.fuel) * ts;
            v.state = if noise.enabled {
                model::step_dynamics(&s, s.u, ts, Some((&noise, &mut self.noise_rng)))
            } else {
                model::step_exact(&s, s.u, ts)
            };
        }
        if let Some(d) = &mut self.departed {
            *d = model::step_exact(d, 0.0, ts);
        }
    }
}
