// Closed loop for a follower and its leader under the time-driven QP,
// re-solved every 0.05 s.

use cavmerge::model::{self, CavState, GainConfig, Lane, NeighborView, VehicleLimits};
use cavmerge::ocbf::{self, Fallback, TrackingTarget};
use cavmerge::reference;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let g = GainConfig::default();
    let lim = VehicleLimits::default();
    let dt = 0.05;
    let beta = g.beta(&lim);
    let plan = reference::solve_reference(20.0, g.length, beta)?;

    let mut leader = CavState::new(1, Lane::Main, 45.0, 15.0);
    let mut follower = CavState::new(2, Lane::Main, 0.0, 20.0);
    let mut min_gap = f64::INFINITY;
    let mut t = 0.0;
    while follower.x < g.length && t < 60.0 {
        let target = TrackingTarget {
            u_ref: plan.ref_control(t, &lim),
            v_ref: Some(plan.ref_speed(t, &lim)),
        };
        let nb = NeighborView {
            ip: Some(leader.snapshot()),
            ic: None,
        };
        let out = ocbf::time_driven_step(&follower, &nb, &g, &lim, &target, Fallback::MaxBrake);
        assert!(out.feasible);
        follower = model::step_exact(&follower, out.u, dt);
        leader = model::step_exact(&leader, 0.0, dt);
        min_gap = min_gap.min(model::b1(&follower, &leader.snapshot(), &g));
        t += dt;
        if ((t / dt).round() as u64).is_multiple_of(100) {
            println!("t={t:>5.1}  x={:>7.2}  v={:>6.3}  u={:>7.4}", follower.x, follower.v, out.u);
        }
    }
    println!("crossed at t={t:.2} s, smallest rear-end margin {min_gap:.4} m");
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("time-driven example");
}
