use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wtt::runner::{self, config, scenarios};

#[derive(Parser)]
#[command(name = "wtt", version, about = "Working-substance thermal transistor simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named scenario, a configuration file, or a recorded manifest.
    Run(RunArgs),
    /// List the named scenarios.
    Scenarios,
    /// Check a configuration file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, conflicts_with = "manifest")]
    scenario: Option<String>,
    #[arg(long, conflicts_with = "manifest")]
    config: Option<PathBuf>,
    /// Re-run the parameters recorded in a manifest.json.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set model.g=3.5`.
    #[arg(long = "set", value_name = "KEY=VALUE", conflicts_with = "manifest")]
    set: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

fn load(path: Option<&PathBuf>, set: &[String]) -> Result<(config::RunConfig, String), runner::RunError> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|source| runner::RunError::Io { path: p.clone(), source })?,
        None => String::new(),
    };
    Ok((config::parse_config(&text, set)?, text))
}

fn resolve_run(args: RunArgs) -> Result<config::Resolved, runner::RunError> {
    if let Some(m) = &args.manifest {
        let mut r = runner::resolve_manifest(m, args.out)?;
        if args.workers.is_some() {
            r.workers = args.workers;
        }
        return Ok(r);
    }
    if args.scenario.is_none() && args.config.is_none() {
        return Err(config::ConfigError { line: None, key: None, message: "give --scenario, --config or --manifest".into() }.into());
    }
    let (mut doc, text) = load(args.config.as_ref(), &args.set)?;
    if args.scenario.is_some() {
        doc.scenario = args.scenario;
    }
    if args.out.is_some() {
        doc.out = args.out;
    }
    if args.workers.is_some() {
        doc.workers = args.workers;
    }
    Ok(config::resolve(&doc, Some(&text))?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Scenarios => {
            for s in scenarios::SCENARIOS {
                println!("{:<10} {}", s.name, s.description);
            }
            0
        }
        Command::Validate { config: path, set } => {
            match load(Some(&path), &set).and_then(|(doc, text)| Ok(config::resolve(&doc, Some(&text))?)) {
                Ok(r) => {
                    println!("{}: ok ({:?})", path.display(), r.job);
                    0
                }
                Err(e) => {
                    eprintln!("{}: {e}", path.display());
                    e.exit_code()
                }
            }
        }
        Command::Run(args) => match resolve_run(args).and_then(|r| runner::execute(&r)) {
            Ok(outcome) => {
                for f in &outcome.manifest.files {
                    println!("{}  {} rows", outcome.out_dir.join(&f.name).display(), f.rows);
                }
                if outcome.manifest.failed_points > 0 {
                    eprintln!("{} grid points failed; see the errors column", outcome.manifest.failed_points);
                }
                outcome.exit_code()
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
    };
    ExitCode::from(code as u8)
}
