// Acceptance criteria. Runs as a plain binary so that every criterion
// prints its verdict line; exits nonzero when any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cavmerge::config;
use cavmerge::event::{self, BoundSet, BoxContext, BoxSize};
use cavmerge::model::{CavState, GainConfig, Lane, NeighborView, Snapshot, VehicleLimits};
use cavmerge::ocbf::{self, Fallback, TrackingTarget};
use cavmerge::qp::{self, QpProblem, QpRow};
use cavmerge::reference::{self, ReferenceSolution};
use cavmerge::selftrig::{self, TriggerConfig};
use cavmerge::sim::{self, ScenarioConfig, Scheme, Summary};

type Outcome = (bool, String);

fn merge12() -> ScenarioConfig {
    config::parse_config(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/merge12.toml")).expect("merge12 config")
}

// ---------------------------------------------------------------- 1

/// Best grid point of a QP: `u` on a 1e-3 grid over the control bounds,
/// `e` exact for each `u` (the objective is separable and each row bounds
/// `e` from one side).
fn grid_oracle(p: &QpProblem, u_lo: f64, u_hi: f64) -> Option<(f64, f64)> {
    let n = ((u_hi - u_lo) / 1e-3).ceil() as usize;
    let mut best: Option<(f64, f64)> = None;
    for i in 0..=n {
        let u = (u_lo + i as f64 * 1e-3).min(u_hi);
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        let mut ok = true;
        for r in &p.rows {
            let s = r.cu * u + r.c0;
            if r.ce == 0.0 {
                ok &= s >= 0.0;
            } else if r.ce > 0.0 {
                lo = lo.max(-s / r.ce);
            } else {
                hi = hi.min(-s / r.ce);
            }
        }
        if !ok || lo > hi {
            continue;
        }
        let e = 0.0f64.clamp(lo, hi);
        let obj = p.objective(u, e);
        if best.is_none_or(|(_, b)| obj < b) {
            best = Some((u, obj));
        }
    }
    best
}

fn qp_oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_du, mut worst_obj, mut failures, mut infeasible, mut grid_missed) = (0.0f64, f64::NEG_INFINITY, 0, 0, 0);
    for _ in 0..1000 {
        let u_min = rng.gen_range(-8.0..-1.0);
        let u_max = rng.gen_range(1.0..8.0);
        let mut p = QpProblem::with_bounds(rng.gen_range(-10.0..10.0), rng.gen_range(0.1..20.0), u_min, u_max);
        for _ in 0..rng.gen_range(0..=4) {
            let ce = if rng.gen_bool(0.3) { rng.gen_range(0.2..2.0) } else { 0.0 };
            p.push(QpRow::new(rng.gen_range(-3.0..3.0), ce, rng.gen_range(-6.0..6.0)));
        }
        let sol = qp::solve(&p);
        match (grid_oracle(&p, u_min, u_max), sol.is_feasible()) {
            (Some((u, obj)), true) => {
                worst_du = worst_du.max((sol.u - u).abs());
                worst_obj = worst_obj.max(sol.objective - obj);
                if (sol.u - u).abs() > 1e-2 || sol.objective > obj + 1e-6 || !p.is_feasible_point(sol.u, sol.e) {
                    failures += 1;
                }
            }
            (None, false) => infeasible += 1,
            // a feasible interval narrower than the grid spacing
            (None, true) if p.is_feasible_point(sol.u, sol.e) => grid_missed += 1,
            _ => failures += 1,
        }
    }
    (
        failures == 0,
        format!(
            "max |du| {worst_du:.2e}, max objective excess {worst_obj:.2e}, {infeasible} infeasible agreed, {grid_missed} below grid resolution, {failures} mismatches"
        ),
    )
}

// ---------------------------------------------------------------- 2

fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> + Clone {
    (0..n).map(move |i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
}

fn grid_min(f: impl Fn(f64, f64) -> f64, x: (f64, f64), y: (f64, f64), n: usize) -> f64 {
    let mut m = f64::INFINITY;
    for a in grid(x.0, x.1, n) {
        for b in grid(y.0, y.1, n) {
            m = m.min(f(a, b));
        }
    }
    m
}

struct BoxRanges {
    x: (f64, f64),
    v: (f64, f64),
}

/// The box intersected with the state limits as the oracle sees it.
fn own_ranges(b: &BoundSet, g: &GainConfig, lim: &VehicleLimits) -> BoxRanges {
    BoxRanges {
        x: ((b.anchor_x - b.s_x).max(0.0), (b.anchor_x + b.s_x).min(g.length)),
        v: ((b.anchor_v - b.s_v).max(lim.v_min), (b.anchor_v + b.s_v).min(lim.v_max)),
    }
}

fn neighbor_ranges(b: &BoundSet, lim: &VehicleLimits) -> BoxRanges {
    BoxRanges {
        x: (b.anchor_x - b.s_x, b.anchor_x + b.s_x),
        v: ((b.anchor_v - b.s_v).max(lim.v_min), (b.anchor_v + b.s_v).min(lim.v_max)),
    }
}

fn random_box(rng: &mut ChaCha8Rng, x: f64, v: f64) -> BoundSet {
    let size = BoxSize {
        s_x: rng.gen_range(1.5..3.0),
        s_v: rng.gen_range(0.3..1.0),
    };
    BoundSet::anchored(size, x, v, 0.0)
}

fn box_minimization_oracle() -> Outcome {
    let g = GainConfig::default();
    let lim = VehicleLimits::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let c = g.phi / g.length;
    let (mut corner_err, mut merge_err, mut checked) = (0.0f64, 0.0f64, 0);
    let mut mismatches = 0;
    for _ in 0..200 {
        let x = rng.gen_range(0.0..390.0);
        let v = rng.gen_range(2.0..29.0);
        let own = random_box(&mut rng, x, v);
        let anchor = (x + rng.gen_range(10.0..80.0), rng.gen_range(2.0..29.0));
        let ip = random_box(&mut rng, anchor.0, anchor.1);
        let anchor = (x + rng.gen_range(5.0..80.0), rng.gen_range(2.0..29.0));
        let ic = random_box(&mut rng, anchor.0, anchor.1);
        let r = own_ranges(&own, &g, &lim);
        let (p, m) = (neighbor_ranges(&ip, &lim), neighbor_ranges(&ic, &lim));

        // rear-end: separable into own and neighbor parts
        let drift = grid_min(|vp, _| vp, p.v, p.x, 101) + grid_min(|_, vi| -vi, r.x, r.v, 101);
        let gap_own = grid_min(|xi, vi| -xi - g.phi * vi, r.x, r.v, 101);
        let gap_max = -grid_min(|xi, vi| xi + g.phi * vi, r.x, r.v, 101) + p.x.1 - g.delta;
        let gap = p.x.0 + gap_own - g.delta;
        match event::rear_end_min(&own, &ip, &g, &lim) {
            Ok(row) => {
                corner_err = corner_err.max((row.bmin_f - drift).abs());
                corner_err = corner_err.max((row.bmin_gamma - g.k1 * gap.max(0.0)).abs());
                corner_err = corner_err.max((row.bmin_g + g.phi).abs());
            }
            Err(_) => mismatches += usize::from(gap_max >= 0.0),
        }

        // speed rows
        let vmax_gamma = grid_min(|_, vi| lim.v_max - vi, r.x, r.v, 101).max(0.0);
        let vmin_gamma = grid_min(|_, vi| vi - lim.v_min, r.x, r.v, 101).max(0.0);
        let smax = event::speed_max_min(&own, &g, &lim).expect("speed box");
        let smin = event::speed_min_min(&own, &g, &lim).expect("speed box");
        corner_err = corner_err.max((smax.bmin_gamma - g.k3 * vmax_gamma).abs());
        corner_err = corner_err.max((smin.bmin_gamma - g.k4 * vmin_gamma).abs());
        corner_err = corner_err.max(smax.bmin_f.abs().max(smin.bmin_f.abs()));

        // merging: nonlinear own part on a 1001-point grid per axis
        let m_drift = m.v.0 + grid_min(|_, vi| -vi - c * vi * vi, r.x, r.v, 1001);
        let m_gap = m.x.0 + grid_min(|xi, vi| -xi - c * xi * vi, r.x, r.v, 1001) - g.delta;
        let m_gap_max = m.x.1 - grid_min(|xi, vi| xi + c * xi * vi, r.x, r.v, 1001) - g.delta;
        match event::merge_min(&own, &ic, &g, &lim, 1.0) {
            Ok(row) => {
                merge_err = merge_err.max((row.bmin_f - m_drift).abs());
                merge_err = merge_err.max((row.bmin_gamma - g.k2 * m_gap.max(0.0)).abs());
                checked += 1;
            }
            Err(_) => mismatches += usize::from(m_gap_max >= 0.0),
        }
    }
    (
        corner_err <= 1e-9 && merge_err <= 1e-3 && mismatches == 0,
        format!(
            "corner rows max error {corner_err:.2e}, merging row max error {merge_err:.2e} over {checked} boxes, {mismatches} empty-intersection mismatches"
        ),
    )
}

// ---------------------------------------------------------------- 3

/// The original barrier rows along held controls, evaluated by direct
/// propagation of all three vehicles.
struct HeldRows<'a> {
    xi: &'a CavState,
    nb: &'a NeighborView,
    u: f64,
    g: &'a GainConfig,
    lim: &'a VehicleLimits,
}

fn advance(x: f64, v: f64, u: f64, tau: f64) -> (f64, f64) {
    (x + v * tau + 0.5 * u * tau * tau, v + u * tau)
}

impl HeldRows<'_> {
    fn value(&self, q: usize, tau: f64) -> Option<f64> {
        let g = self.g;
        let u = self.u;
        let (x, v) = advance(self.xi.x, self.xi.v, u, tau);
        let c = g.phi / g.length;
        match q {
            0 => Some(-u + g.k3 * (self.lim.v_max - v)),
            1 => Some(u + g.k4 * (v - self.lim.v_min)),
            2 => self.nb.ip.map(|p| {
                let (xp, vp) = advance(p.x, p.v, p.u, tau);
                vp - v - g.phi * u + g.k1 * (xp - x - g.phi * v - g.delta)
            }),
            _ => self.nb.ic.map(|p| {
                let (xc, vc) = advance(p.x, p.v, p.u, tau);
                vc - v - c * (v * v + x * u) + g.k2 * (xc - x - c * x * v - g.delta)
            }),
        }
    }
}

fn trigger_root_residuals() -> Outcome {
    let g = GainConfig::default();
    let lim = VehicleLimits::default();
    let tc = TriggerConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut roots, mut worst, mut early, mut solved) = (0, 0.0f64, 0, 0);
    let mut bad = 0;
    for _ in 0..500 {
        let x = rng.gen_range(0.0..390.0);
        let mut xi = CavState::new(5, Lane::Main, x, rng.gen_range(3.0..29.0));
        xi.u = rng.gen_range(lim.u_min..lim.u_max);
        let snap = |rng: &mut ChaCha8Rng, gap: std::ops::Range<f64>| Snapshot {
            x: x + rng.gen_range(gap),
            v: rng.gen_range(3.0..29.0),
            u: rng.gen_range(lim.u_min..lim.u_max),
            t_last: 0.0,
        };
        let nb = NeighborView {
            ip: Some(snap(&mut rng, 20.0..90.0)),
            ic: Some(snap(&mut rng, 10.0..90.0)),
        };
        let target = TrackingTarget {
            u_ref: rng.gen_range(-2.0..2.0),
            v_ref: Some(rng.gen_range(10.0..30.0)),
        };
        let solve = selftrig::self_triggered_qp(&xi, &nb, &g, &lim, &tc, &target, false, Fallback::MaxBrake);
        if !solve.outcome.feasible {
            continue;
        }
        solved += 1;
        let u = solve.outcome.u;
        let times = selftrig::predict_trigger_times(&xi, &nb, u, &g, &lim, &tc, 0.0);
        let rows = HeldRows {
            xi: &xi,
            nb: &nb,
            u,
            g: &g,
            lim: &lim,
        };
        for (q, &t) in times.iter().enumerate() {
            if !t.is_finite() {
                continue;
            }
            roots += 1;
            let r = rows.value(q, t).map_or(f64::INFINITY, f64::abs);
            worst = worst.max(r);
            bad += usize::from(r > 1e-6);
            let step = tc.min_dwell / 10.0;
            let mut k = 1;
            while (k as f64) * step < t {
                if rows.value(q, k as f64 * step).is_some_and(|c| c < -1e-9) {
                    early += 1;
                    break;
                }
                k += 1;
            }
        }
    }
    (
        bad == 0 && early == 0,
        format!("{roots} finite roots from {solved} feasible solves, max |C(t_q)| {worst:.2e}, {early} earlier crossings"),
    )
}

// ---------------------------------------------------------------- 4

fn minimum_dwell() -> Outcome {
    let mut runs = Vec::new();
    let mut cfg = merge12();
    cfg.scheme = Scheme::SelfTriggered;
    runs.push(cfg.clone());
    cfg.sample_period = 0.01;
    runs.push(cfg);
    for seed in [1, 2] {
        for sample_period in [0.05, 0.01] {
            runs.push(ScenarioConfig {
                scheme: Scheme::SelfTriggered,
                seed,
                sample_period,
                horizon: 150.0,
                ..Default::default()
            });
        }
    }
    let (mut gaps, mut violations) = (0usize, 0usize);
    for cfg in &runs {
        let m = sim::run(cfg).expect("self-triggered run");
        // solve instants are integer sample counts; T_d is a whole number of samples
        let per_dwell = (cfg.trigger.min_dwell / cfg.sample_period).round() as u64;
        for c in &m.cavs {
            violations += c.solve_ticks.iter().filter(|&&k| k % per_dwell != 0).count();
            for w in c.solve_ticks.windows(2) {
                gaps += 1;
                violations += usize::from(w[1] - w[0] < per_dwell);
            }
        }
    }
    (
        violations == 0 && gaps > 0,
        format!("{} runs, {gaps} inter-solve gaps, {violations} off-grid or short", runs.len()),
    )
}

// ---------------------------------------------------------------- 5

fn forward_invariance() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for scheme in [Scheme::EventTriggered, Scheme::SelfTriggered] {
        let mut cfg = merge12();
        cfg.scheme = scheme;
        let m = sim::run(&cfg).expect("deterministic run");
        let negative = m.traces.iter().filter(|p| p.b1.is_some_and(|b| b < 0.0)).count();
        let samples = m.traces.iter().filter(|p| p.b1.is_some()).count();
        ok &= negative == 0 && samples > 0 && m.exited() == 12;
        details.push(format!(
            "{scheme}: min b1 {:.3} over {samples} samples",
            m.min_b1().unwrap_or(f64::NAN)
        ));
    }
    (ok, details.join(", "))
}

// ---------------------------------------------------------------- 6

fn noise_robustness() -> Outcome {
    let mut base = merge12();
    base.noise.enabled = true;
    let mut details = Vec::new();
    let mut ok = true;
    for scheme in Scheme::ALL {
        let (mut violating, mut clean, mut clean_violating) = (0, 0, 0);
        for seed in 0..20 {
            let mut cfg = base.clone();
            cfg.scheme = scheme;
            cfg.seed = seed;
            let m = sim::run(&cfg).expect("noisy run");
            let v = m.violations().count() > 0;
            violating += usize::from(v);
            if m.infeasible_count() == 0 {
                clean += 1;
                clean_violating += usize::from(v);
            }
        }
        match scheme {
            Scheme::TimeDriven => {
                ok &= violating * 4 >= 20;
                details.push(format!("{scheme}: {violating}/20 seeds violate"));
            }
            _ => {
                ok &= clean_violating == 0;
                details.push(format!(
                    "{scheme}: {clean_violating} violating of {clean} all-feasible seeds ({violating}/20 overall)"
                ));
            }
        }
    }
    (ok, details.join(", "))
}

// ---------------------------------------------------------------- 7, 8

/// Poisson arrivals at the default rate, the four time/energy weights and
/// three seeds, each realization run under all three schemes.
fn matched_runs() -> Vec<[Summary; 3]> {
    let mut out = Vec::new();
    for alpha in [0.1, 0.25, 0.4, 0.5] {
        for seed in 1..=3 {
            let run = |scheme| {
                let mut cfg = ScenarioConfig {
                    scheme,
                    seed,
                    horizon: 200.0,
                    ..Default::default()
                };
                cfg.gains.alpha = alpha;
                sim::run(&cfg).expect("matched run").summary()
            };
            out.push([run(Scheme::TimeDriven), run(Scheme::EventTriggered), run(Scheme::SelfTriggered)]);
        }
    }
    out
}

fn computational_load(runs: &[[Summary; 3]]) -> Outcome {
    let total = |i: usize, f: fn(&Summary) -> u64| runs.iter().map(|r| f(&r[i])).sum::<u64>();
    let qp = [0, 1, 2].map(|i| total(i, |s| s.qp_count));
    let inf = [0, 1, 2].map(|i| total(i, |s| s.infeasible_count));
    let pct = |n: u64| 100.0 * n as f64 / qp[0] as f64;
    let ok = qp[1] * 100 <= qp[0] * 60
        && qp[2] * 100 <= qp[0] * 25
        && inf[1] * 100 <= inf[0] * 20
        && inf[2] * 100 <= inf[0] * 20;
    (
        ok,
        format!(
            "QPs {} / {} ({:.1}%) / {} ({:.1}%); infeasible {} / {} / {} (time / event / self, {} runs)",
            qp[0],
            qp[1],
            pct(qp[1]),
            qp[2],
            pct(qp[2]),
            inf[0],
            inf[1],
            inf[2],
            runs.len()
        ),
    )
}

fn energy_discrepancy(runs: &[[Summary; 3]]) -> Outcome {
    let mean = |i: usize, f: fn(&Summary) -> f64| runs.iter().map(|r| f(&r[i])).sum::<f64>() / runs.len() as f64;
    let energy = [0, 1, 2].map(|i| mean(i, |s| s.avg_energy));
    let fuel = [0, 1, 2].map(|i| mean(i, |s| s.avg_fuel));
    let ok = energy[1] >= energy[0] && energy[2] >= energy[0] && fuel[1] <= fuel[0] && fuel[2] <= fuel[0];
    (
        ok,
        format!(
            "1/2u^2 {:.3} / {:.3} / {:.3}, fuel {:.3} / {:.3} / {:.3} (time / event / self)",
            energy[0], energy[1], energy[2], fuel[0], fuel[1], fuel[2]
        ),
    )
}

// ---------------------------------------------------------------- 9

/// Cost of the best piecewise-constant control on `n` intervals for a
/// fixed horizon: a least-norm problem with one linear constraint.
fn discretized_cost(v0: f64, length: f64, beta: f64, tf: f64, n: usize) -> f64 {
    let h = tf / n as f64;
    let sum_c2: f64 = (0..n)
        .map(|k| {
            let ck = h * (tf - k as f64 * h - 0.5 * h);
            ck * ck
        })
        .sum();
    let d = length - v0 * tf;
    beta * tf + 0.5 * d * d * h / sum_c2
}

fn discretized_optimum(v0: f64, length: f64, beta: f64) -> f64 {
    let f = |tf: f64| discretized_cost(v0, length, beta, tf, 400);
    // bracket on a coarse scan, then golden section
    let (lo, hi) = (length / (v0 + 80.0), 1.5 * length / v0);
    let scan: Vec<f64> = grid(lo, hi, 400).collect();
    let i = (0..scan.len()).min_by(|&a, &b| f(scan[a]).total_cmp(&f(scan[b]))).unwrap_or(0);
    let (mut a, mut b) = (scan[i.saturating_sub(1)], scan[(i + 1).min(scan.len() - 1)]);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let (c, d) = (b - r * (b - a), a + r * (b - a));
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    f(0.5 * (a + b))
}

fn reference_bvp() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut converged, mut worst_res, mut worst_gap, mut bad) = (0, 0.0f64, f64::NEG_INFINITY, 0);
    for _ in 0..50 {
        let v0 = rng.gen_range(15.0..20.0);
        let length = rng.gen_range(100.0..800.0);
        let beta = rng.gen_range(0.0..20.0);
        let Ok(sol) = reference::solve_reference(v0, length, beta) else {
            continue;
        };
        converged += 1;
        let res = sol.residuals(length, beta).iter().fold(0.0f64, |m, r| m.max(r.abs()));
        let gap = sol.cost(beta) - discretized_optimum(v0, length, beta);
        worst_res = worst_res.max(res);
        worst_gap = worst_gap.max(gap);
        bad += usize::from(res >= 1e-8 || gap > 1e-3);
    }
    let coast = reference::solve_reference(17.0, 400.0, 0.0).ok() == Some(ReferenceSolution::coasting(17.0, 400.0));
    (
        bad == 0 && coast && converged > 0,
        format!(
            "{converged}/50 converged, max residual {worst_res:.2e}, max cost excess over oracle {worst_gap:.2e}, exact coasting at zero weight: {coast}"
        ),
    )
}

// ---------------------------------------------------------------- 10

fn sample_in(rng: &mut ChaCha8Rng, r: &BoxRanges) -> (f64, f64) {
    let pick = |rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)| if hi > lo { rng.gen_range(lo..=hi) } else { lo };
    (pick(rng, r.x), pick(rng, r.v))
}

fn minimized_rows_soundness() -> Outcome {
    let g = GainConfig::default();
    let lim = VehicleLimits::default();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut instances, mut pairs, mut counterexamples) = (0, 0u64, 0);
    let mut attempts = 0;
    while instances < 200 && attempts < 10_000 {
        attempts += 1;
        let x = rng.gen_range(0.0..380.0);
        let v = rng.gen_range(3.0..29.0);
        let own = random_box(&mut rng, x, v);
        let anchor = (x + rng.gen_range(20.0..90.0), rng.gen_range(3.0..29.0));
        let ip = random_box(&mut rng, anchor.0, anchor.1);
        let anchor = (x + rng.gen_range(10.0..90.0), rng.gen_range(3.0..29.0));
        let ic = random_box(&mut rng, anchor.0, anchor.1);
        let boxes = BoxContext {
            own: &own,
            ip: Some(&ip),
            ic: Some(&ic),
        };
        let us: Vec<(f64, Vec<QpRow>)> = grid(lim.u_min, lim.u_max, 41)
            .filter_map(|u| {
                let rows = event::minimized_rows(&boxes, &g, &lim, u).ok()?;
                let rows: Vec<QpRow> = rows.iter().map(|r| r.to_qp_row()).collect();
                rows.iter().all(|r| r.eval(u, 0.0) >= 0.0).then_some((u, rows))
            })
            .collect();
        if us.is_empty() {
            continue;
        }
        instances += 1;
        let (r, p, c) = (
            own_ranges(&own, &g, &lim),
            neighbor_ranges(&ip, &lim),
            neighbor_ranges(&ic, &lim),
        );
        let mut states = 0;
        let mut tries = 0;
        while states < 100 && tries < 10_000 {
            tries += 1;
            let (xi_x, xi_v) = sample_in(&mut rng, &r);
            let (xp, vp) = sample_in(&mut rng, &p);
            let (xc, vc) = sample_in(&mut rng, &c);
            let xi = CavState::new(7, Lane::Main, xi_x, xi_v);
            let (sp, sc) = (Snapshot::at(xp, vp), Snapshot::at(xc, vc));
            // only states inside the safe set
            if cavmerge::model::b1(&xi, &sp, &g) < 0.0 || cavmerge::model::b2(&xi, &sc, &g) < 0.0 {
                continue;
            }
            states += 1;
            let originals = [
                ocbf::rear_end_row(&xi, &sp, &g),
                ocbf::merge_row(&xi, &sc, &g),
                ocbf::speed_max_row(&xi, &g, &lim),
                ocbf::speed_min_row(&xi, &g, &lim),
            ];
            for (u, _) in &us {
                pairs += 1;
                if originals.iter().any(|row| row.eval(*u, 0.0) < -1e-9) {
                    counterexamples += 1;
                }
            }
        }
    }
    (
        counterexamples == 0 && instances == 200,
        format!("{instances} instances, {pairs} (control, state) pairs, {counterexamples} counterexamples"),
    )
}

// ----------------------------------------------------------------

fn main() -> ExitCode {
    struct Criterion {
        id: u8,
        name: &'static str,
        limit: Option<Duration>,
        check: Box<dyn Fn() -> Outcome>,
    }
    let matched = std::rc::Rc::new(std::cell::OnceCell::<Vec<[Summary; 3]>>::new());
    let (m7, m8) = (matched.clone(), matched);
    let criteria = vec![
        Criterion {
            id: 1,
            name: "QP oracle equivalence",
            limit: Some(Duration::from_secs(5)),
            check: Box::new(qp_oracle_equivalence),
        },
        Criterion {
            id: 2,
            name: "box-minimization oracle",
            limit: Some(Duration::from_secs(30)),
            check: Box::new(box_minimization_oracle),
        },
        Criterion {
            id: 3,
            name: "trigger-root residuals",
            limit: None,
            check: Box::new(trigger_root_residuals),
        },
        Criterion {
            id: 4,
            name: "minimum dwell",
            limit: None,
            check: Box::new(minimum_dwell),
        },
        Criterion {
            id: 5,
            name: "forward invariance, twelve vehicles",
            limit: Some(Duration::from_secs(10)),
            check: Box::new(forward_invariance),
        },
        Criterion {
            id: 6,
            name: "noise robustness direction",
            limit: None,
            check: Box::new(noise_robustness),
        },
        Criterion {
            id: 7,
            name: "computational-load direction",
            limit: None,
            check: Box::new(move || computational_load(m7.get_or_init(matched_runs))),
        },
        Criterion {
            id: 8,
            name: "energy-metric discrepancy direction",
            limit: None,
            check: Box::new(move || energy_discrepancy(m8.get_or_init(matched_runs))),
        },
        Criterion {
            id: 9,
            name: "reference trajectory",
            limit: None,
            check: Box::new(reference_bvp),
        },
        Criterion {
            id: 10,
            name: "minimized-row soundness",
            limit: None,
            check: Box::new(minimized_rows_soundness),
        },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let (mut pass, detail) = (c.check)();
        let elapsed = start.elapsed();
        let mut note = String::new();
        if let Some(limit) = c.limit {
            if elapsed > limit {
                pass = false;
                note = format!(", over the {:.0} s limit", limit.as_secs_f64());
            }
        }
        failed += usize::from(!pass);
        println!(
            "{} [{:>2}] {}: {detail} ({:.2} s{note})",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            elapsed.as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

