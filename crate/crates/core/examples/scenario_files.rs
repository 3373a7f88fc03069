// Reading, overriding and writing scenario files.

use cavmerge::config;
use cavmerge::sim::ScenarioConfig;
use cavmerge::Error;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let text = "scheme = \"event_triggered\"\nseed = 3\n\n[trigger]\ns_x = 2.0\n";
    let cfg = config::parse_config_str(text)?;
    println!("scheme {} seed {} box ({}, {})", cfg.scheme, cfg.seed, cfg.trigger.s_x, cfg.trigger.s_v);

    let cfg = config::apply_override(&cfg, "gains.alpha=0.4")?;
    println!("alpha 0.4 gives beta {:.4}", cfg.beta());

    let emitted = config::emit_config(&cfg);
    assert_eq!(config::parse_config_str(&emitted)?, cfg);
    println!("round trip of {} bytes ok", emitted.len());

    // boxes smaller than one sample of travel cannot be detected
    match config::parse_config_str("scheme = \"event_triggered\"\n[trigger]\ns_x = 1.0\n") {
        Err(Error::Validation(msg)) => println!("rejected: {msg}"),
        other => return Err(format!("expected a validation error, got {other:?}").into()),
    }
    match config::parse_config_str("[gains]\nalpha = 0.2\nbeta = 5\n") {
        Err(Error::Parse { line, message }) => println!("line {line}: {message}"),
        other => return Err(format!("expected a parse error, got {other:?}").into()),
    }
    assert_eq!(config::parse_config_str("")?, ScenarioConfig::default());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("scenario file example");
}
