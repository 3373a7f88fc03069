// Unconstrained energy/time optimal plan through the control zone for a
// few travel-time weights, and the clamped reference fed to the QP.

use cavmerge::model::VehicleLimits;
use cavmerge::reference::{self, ReferenceSolution};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let lim = VehicleLimits::default();
    let (v0, length) = (17.0, 400.0);
    println!("{:>6} {:>10} {:>10} {:>9} {:>9} {:>10}", "beta", "a", "b", "tf", "v(tf)", "cost");
    for beta in [0.0, 0.5, 1.0, 2.0, 5.0] {
        let sol = reference::solve_reference(v0, length, beta)?;
        let res = sol.residuals(length, beta);
        println!(
            "{beta:>6.1} {:>10.6} {:>10.6} {:>9.4} {:>9.4} {:>10.4}",
            sol.a,
            sol.b,
            sol.tf,
            sol.speed_raw(sol.tf),
            sol.cost(beta)
        );
        assert!(res.iter().all(|r| r.abs() < 1e-8), "{res:?}");
    }
    assert_eq!(reference::solve_reference(v0, length, 0.0)?, ReferenceSolution::coasting(v0, length));

    // the heavier time weight wants more than v_max; the QP sees it clamped
    let fast = reference::solve_reference(v0, length, 5.0)?;
    for t in [0.0, 5.0, 10.0, fast.tf, fast.tf + 2.0] {
        println!(
            "t={t:>6.2}  u_ref={:>7.4}  v_ref={:>7.4}",
            fast.ref_control(t, &lim),
            fast.ref_speed(t, &lim)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("reference example");
}
