// A sweep over the maximum dwell of self-triggered control, each cell
// compared with time-driven control on the same arrivals.

use cavmerge::config;
use cavmerge::report;
use cavmerge::sim::Scheme;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/default.toml");
    let mut base = config::parse_config(path)?;
    base.scheme = Scheme::SelfTriggered;
    base.horizon = 120.0;
    base.seed = 11;
    let axis = report::parse_axis("trigger.max_dwell=0.5,1,1.5,2")?;
    let rows = report::run_sweep(&base, &axis);
    print!("{}", report::sweep_table(&rows));

    let qps: Vec<u64> = rows
        .iter()
        .filter_map(|r| r.result.as_ref().ok())
        .map(|(s, _)| s.qp_count)
        .collect();
    assert_eq!(qps.len(), axis.len());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("sweep example");
}
