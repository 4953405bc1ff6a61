use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use smc_cli::config::{self, DickeSection, Experiment, Format, RunConfig, PRESETS};
use smc_cli::{experiments, output, CliError};

#[derive(Parser)]
#[command(name = "smc", version, about = "Spin-mechanical conversion simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its table.
    Run(RunArgs),
    /// List the bundled presets.
    Presets,
    /// Print a bundled preset.
    ShowPreset { name: String },
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment to run; alone, it runs that experiment's default config.
    #[arg(long, value_enum)]
    experiment: Option<Experiment>,
    /// TOML config file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Bundled preset (see `smc presets`).
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Config override `section.key=value`, repeatable.
    #[arg(long = "override", visible_alias = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Spin numbers for the dicke experiment.
    #[arg(long, value_delimiter = ',')]
    n: Vec<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
}

fn resolve(args: &RunArgs) -> Result<RunConfig, CliError> {
    let (text, origin) = if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        (text, path.display().to_string())
    } else if let Some(name) = &args.preset {
        (config::preset_text(name)?.to_string(), format!("preset {name}"))
    } else if let Some(e) = args.experiment {
        (config::default_text(e).to_string(), format!("default {e} config"))
    } else {
        return Err(CliError::Config("give --experiment, --config or --preset".into()));
    };
    let mut c = config::parse(&text, &origin, &args.overrides)?;
    if let Some(e) = args.experiment {
        if e != c.experiment {
            return Err(CliError::Config(format!("--experiment {e} conflicts with `experiment = \"{}\"` in {origin}", c.experiment)));
        }
    }
    if let Some(s) = args.seed {
        c.seed = s;
    }
    if let Some(f) = args.format {
        c.format = f;
    }
    if args.output.is_some() {
        c.output = args.output.clone();
    }
    if !args.n.is_empty() {
        if c.experiment != Experiment::Dicke {
            return Err(CliError::Config("--n applies to the dicke experiment only".into()));
        }
        let theta = c.dicke.as_ref().and_then(|d| d.theta_per_spin);
        c.dicke = Some(DickeSection { n: args.n.clone(), theta_per_spin: theta });
    }
    Ok(c)
}

fn run(args: &RunArgs) -> Result<(), CliError> {
    let config = resolve(args)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = args.workers {
        if w == 0 {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    let report = pool.install(|| experiments::run(&config))?;
    let text = output::render(&config, &report);
    match &config.output {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    match report.failure {
        Some(msg) => Err(CliError::Numerical(msg)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args),
        Command::Presets => {
            for (name, _) in PRESETS {
                println!("{name}");
            }
            Ok(())
        }
        Command::ShowPreset { name } => config::preset_text(name).map(|t| print!("{t}")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("smc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
