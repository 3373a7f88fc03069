// The twelve-vehicle merging scenario under all three schemes, with and
// without process noise, and the output files for one run.

use cavmerge::config;
use cavmerge::report;
use cavmerge::sim::{self, Scheme};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/merge12.toml");
    let base = config::parse_config(path)?;
    println!("beta = {:.3}", base.beta());
    println!(
        "{:<16} {:>6} {:>9} {:>8} {:>8} {:>6} {:>5} {:>8} {:>11}",
        "scheme", "noise", "travel", "1/2u^2", "fuel", "QPs", "inf", "min b1", "violations"
    );
    for noise in [false, true] {
        for scheme in Scheme::ALL {
            let mut cfg = base.clone();
            cfg.scheme = scheme;
            cfg.noise.enabled = noise;
            cfg.seed = 4;
            let m = sim::run(&cfg)?;
            let s = m.summary();
            println!(
                "{:<16} {:>6} {:>9.3} {:>8.3} {:>8.3} {:>6} {:>5} {:>8.3} {:>11}",
                scheme.as_str(),
                noise,
                s.avg_travel_time,
                s.avg_energy,
                s.avg_fuel,
                s.qp_count,
                s.infeasible_count,
                m.min_b1().unwrap_or(f64::NAN),
                m.violations().count()
            );
            assert_eq!(s.exited, 12);
        }
    }

    let mut cfg = base;
    cfg.scheme = Scheme::EventTriggered;
    let m = sim::run(&cfg)?;
    let dir = tempfile::tempdir()?;
    for f in report::emit_outputs(&m, dir.path(), true)? {
        println!("wrote {}", f.file_name().unwrap_or_default().to_string_lossy());
    }
    print!("{}", report::summary_text(&m));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("merging simulation example");
}
