// Self-triggered control: each solve tightens the barrier rows by margins
// covering one dwell interval, predicts when a held control would first
// violate a row and schedules the next solve on the dwell grid.

use cavmerge::model::{self, CavState, GainConfig, Lane, NeighborView, VehicleLimits};
use cavmerge::ocbf::{Fallback, TrackingTarget};
use cavmerge::selftrig::{self, TriggerConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let g = GainConfig::default();
    let lim = VehicleLimits::default();
    let tc = TriggerConfig::default();
    let target = TrackingTarget {
        u_ref: 1.0,
        v_ref: Some(24.0),
    };
    let mut leader = CavState::new(1, Lane::Main, 80.0, 19.0);
    let mut follower = CavState::new(2, Lane::Main, 10.0, 20.0);

    let nb = NeighborView {
        ip: Some(leader.snapshot()),
        ic: None,
    };
    let m = selftrig::margins(&follower, &nb, &g, &lim, &tc, false);
    println!(
        "margins: speed {:.4}/{:.4}, rear-end {:.4}, merging {:.4}",
        m.sigma1, m.sigma2, m.sigma3, m.sigma4
    );

    let td = tc.min_dwell;
    let mut grid_next = 0u64;
    let mut instants = Vec::new();
    let mut min_b1 = f64::INFINITY;
    for k in 0..400u64 {
        let t = k as f64 * td;
        if k == grid_next {
            follower.t_last = t;
            let nb = NeighborView {
                ip: Some(leader.snapshot()),
                ic: None,
            };
            let solve = selftrig::self_triggered_qp(&follower, &nb, &g, &lim, &tc, &target, false, Fallback::MaxBrake);
            follower.u = solve.outcome.u;
            let cands = selftrig::predict_trigger_times(&follower, &nb, follower.u, &g, &lim, &tc, t);
            // the leader never re-solves, so it imposes no shared instant
            let (next, _) = selftrig::next_grid_index(cands, k, &tc, None, None);
            grid_next = next;
            instants.push(t);
        }
        leader = model::step_exact(&leader, 0.0, td);
        follower = model::step_exact(&follower, follower.u, td);
        min_b1 = min_b1.min(model::b1(&follower, &leader.snapshot(), &g));
    }
    let gaps: Vec<f64> = instants.windows(2).map(|w| w[1] - w[0]).collect();
    let shortest = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    println!("{} solves in 20 s, shortest gap {shortest:.2} s", instants.len());
    let first: Vec<String> = instants.iter().take(8).map(|t| format!("{t:.2}")).collect();
    println!("first instants: {}", first.join(", "));
    println!("smallest rear-end margin {min_b1:.3} m");
    assert!(shortest >= td - 1e-12 && gaps.iter().all(|&d| d <= tc.max_dwell + 1e-12));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("self-triggered example");
}
