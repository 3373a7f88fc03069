// Solve one tracking QP: control bounds, a rear-end barrier row and a
// relaxed speed-tracking row.

use cavmerge::model::{CavState, GainConfig, Lane, NeighborView, Snapshot, VehicleLimits};
use cavmerge::ocbf::{self, TrackingTarget};
use cavmerge::qp::{self, QpProblem, QpRow, RowKind};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let g = GainConfig::default();
    let lim = VehicleLimits::default();

    // follower 40 m behind a slower leader
    let xi = CavState::new(2, Lane::Main, 60.0, 22.0);
    let nb = NeighborView {
        ip: Some(Snapshot::at(100.0, 18.0)),
        ic: None,
    };
    let target = TrackingTarget {
        u_ref: 1.5,
        v_ref: Some(24.0),
    };
    let p = ocbf::build_rows(&xi, &nb, &g, &lim, &target);
    let sol = qp::solve(&p);
    println!("rows:");
    for (i, r) in p.rows.iter().enumerate() {
        let tight = if sol.active_set.contains(&i) { "active" } else { "" };
        println!("  {:<12?} {:+.4} u {:+.1} e {:+.4} >= 0  {tight}", r.kind, r.cu, r.ce, r.c0);
    }
    println!("u = {:.4} m/s^2, e = {:.4}, objective = {:.5}", sol.u, sol.e, sol.objective);
    assert!(sol.is_feasible());
    assert!(p.is_feasible_point(sol.u, sol.e));

    // a contradictory pair: u >= 1 and u <= 0
    let mut bad = QpProblem::with_bounds(0.0, g.lambda, lim.u_min, lim.u_max);
    bad.push(QpRow::new(1.0, 0.0, -1.0).with_kind(RowKind::RearEnd));
    bad.push(QpRow::new(-1.0, 0.0, 0.0).with_kind(RowKind::Merge));
    let sol = qp::solve(&bad);
    println!("contradictory rows: {:?}", sol.status);
    assert!(!sol.is_feasible() && !qp::feasibility_check(&bad));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("qp example");
}
