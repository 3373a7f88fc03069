// Event-triggered control of a follower behind a braking leader: solves
// happen only when a sampled state leaves the box anchored at the last
// solve.

use cavmerge::event::{self, Anchors, BoundSet, BoxContext, BoxSize};
use cavmerge::model::{self, CavState, GainConfig, Lane, NeighborView, VehicleLimits};
use cavmerge::ocbf::{self, Fallback, TrackingTarget};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let g = GainConfig::default();
    let lim = VehicleLimits::default();
    let ts = 0.05;
    let size = BoxSize { s_x: 1.5, s_v: 0.5 };
    let (sx_min, sv_min) = event::min_bounds(&lim, ts);
    println!("smallest detectable box at {ts} s sampling: s_x={sx_min:.3}, s_v={sv_min:.4}");

    let target = TrackingTarget {
        u_ref: 0.5,
        v_ref: Some(22.0),
    };
    let mut leader = CavState::new(1, Lane::Main, 70.0, 20.0);
    let mut follower = CavState::new(2, Lane::Main, 10.0, 20.0);

    // the box-minimized rows are weakly tighter than the nominal ones
    let nb = NeighborView {
        ip: Some(leader.snapshot()),
        ic: None,
    };
    let own = BoundSet::anchored(size, follower.x, follower.v, 0.0);
    let ip = BoundSet::anchored(size, leader.x, leader.v, 0.0);
    let boxes = BoxContext {
        own: &own,
        ip: Some(&ip),
        ic: None,
    };
    let nominal = ocbf::build_rows(&follower, &nb, &g, &lim, &target);
    let boxed = event::box_min_rows(&follower, &boxes, &g, &lim, &target, 0.0)?;
    for (a, b) in nominal.rows.iter().zip(&boxed.rows) {
        println!("  {:<12?} nominal c0 {:>9.4}   boxed c0 {:>9.4}", a.kind, a.c0, b.c0);
    }

    let mut anchors: Option<Anchors> = None;
    let (mut solves, mut samples, mut min_b1) = (0u32, 0u32, f64::INFINITY);
    for k in 0..600u32 {
        let t = f64::from(k) * ts;
        let fired = anchors.as_ref().is_none_or(|a| {
            !event::detect_event((follower.x, follower.v), a, |_| Some((leader.x, leader.v))).is_empty()
        });
        if fired {
            follower.t_last = t;
            let nb = NeighborView {
                ip: Some(leader.snapshot()),
                ic: None,
            };
            let solve = event::event_qp(&follower, &nb, size, &g, &lim, &target, Fallback::MaxBrake);
            follower.u = solve.outcome.u;
            anchors = Some(Anchors {
                own: BoundSet::anchored(size, follower.x, follower.v, t),
                relevant: vec![(leader.id, BoundSet::anchored(size, leader.x, leader.v, t))],
            });
            solves += 1;
        }
        // leader brakes between 5 s and 8 s
        let u_lead = if (5.0..8.0).contains(&t) { -2.0 } else { 0.0 };
        leader = model::step_exact(&leader, u_lead, ts);
        follower = model::step_exact(&follower, follower.u, ts);
        min_b1 = min_b1.min(model::b1(&follower, &leader.snapshot(), &g));
        samples += 1;
    }
    println!(
        "{solves} solves over {samples} samples ({:.1}%), smallest rear-end margin {min_b1:.3} m",
        100.0 * f64::from(solves) / f64::from(samples)
    );
    assert!(min_b1 >= 0.0);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("event-triggered example");
}
