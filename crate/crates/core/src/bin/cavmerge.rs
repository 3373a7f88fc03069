use std::path::PathBuf;
use std::process::ExitCode;

use cavmerge::config::{self, parse_config};
use cavmerge::report;
use cavmerge::sim::{self, ScenarioConfig, Scheme};
use cavmerge::Error;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cavmerge", about = "CBF/QP merging-zone simulator", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write CSV, summary and SVG outputs.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run one scenario per value of an override axis.
    Sweep {
        config: PathBuf,
        /// `key=v1,v2,...`, e.g. `gains.alpha=0.1,0.25,0.4,0.5`.
        #[arg(long)]
        axis: String,
        #[command(flatten)]
        common: Common,
    },
    /// Parse and validate a scenario file.
    Validate { config: PathBuf },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// time_driven, event_triggered or self_triggered.
    #[arg(long)]
    scheme: Option<Scheme>,
    #[arg(long)]
    no_noise: bool,
}

fn load(path: &PathBuf, common: Option<&Common>) -> Result<ScenarioConfig, Error> {
    let mut cfg = parse_config(path)?;
    if let Some(c) = common {
        if let Some(seed) = c.seed {
            cfg.seed = seed;
        }
        if let Some(scheme) = c.scheme {
            cfg.scheme = scheme;
        }
        if c.no_noise {
            cfg.noise.enabled = false;
        }
        cfg.validate()?;
    }
    Ok(cfg)
}

fn exit_code(e: &Error) -> ExitCode {
    match e {
        Error::Parse { .. } | Error::Validation(_) => ExitCode::from(2),
        _ => ExitCode::from(3),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate { config } => load(config, None).map(|cfg| {
            println!("{}: ok ({} scheme, horizon {} s)", config.display(), cfg.scheme, cfg.horizon);
        }),
        Command::Run { config, common } => load(config, Some(common)).and_then(|cfg| {
            let m = sim::run(&cfg)?;
            let files = report::emit_outputs(&m, &common.out, true)?;
            print!("{}", report::summary_text(&m));
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }),
        Command::Sweep { config, axis, common } => load(config, Some(common)).and_then(|cfg| {
            let cells = report::parse_axis(axis)?;
            for cell in &cells {
                config::apply_override(&cfg, cell)?;
            }
            let rows = report::run_sweep(&cfg, &cells);
            let table = report::sweep_table(&rows);
            print!("{table}");
            std::fs::create_dir_all(&common.out).map_err(|e| Error::Io {
                path: common.out.clone(),
                source: e,
            })?;
            let path = common.out.join("sweep.txt");
            std::fs::write(&path, &table).map_err(|e| Error::Io { path, source: e })?;
            Ok(())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
