use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ecosim_cli::commands::{self, Outcome};
use ecosim_cli::config::{parse_grid_arg, parse_law_arg, ConfigFile, ExperimentConfig};
use ecosim_cli::{CliError, Result};

/// Species-survival ecosystem experiments.
#[derive(Debug, Parser)]
#[command(name = "ecosim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print moments, limit constants and the marginal scale g(f).
    Moments(Common),
    /// Sup deviation of the fitness distribution at n/100, n/10 and n.
    Glivenko(Common),
    /// Check L_n(f) = S_n(f) - M_n(f) on shared noise at every step.
    Identity(Common),
    /// Finite-n fluctuations against their normal and half-normal limits.
    Clt(Common),
    /// Sample the limit pair and compare covariances with closed forms.
    Limit(Common),
    /// Compare the finite-n joint sample with the limit sampler.
    Joint(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Increment law as inline JSON or a path to a JSON file.
    #[arg(long)]
    law: Option<String>,
    /// Number of steps per replica.
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated fitness levels.
    #[arg(long)]
    fgrid: Option<String>,
    /// Comma-separated times at which Y is observed.
    #[arg(long)]
    tgrid: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Cells of the Brownian path grid (power of two).
    #[arg(long)]
    m: Option<usize>,
    /// Override of the critical fitness.
    #[arg(long = "fc")]
    f_c: Option<f64>,
    /// Fitness level of the first joint coordinate.
    #[arg(long = "joint-f")]
    joint_f: Option<f64>,
    /// Number of limit-sampler draws.
    #[arg(long = "limit-samples")]
    limit_samples: Option<usize>,
    #[arg(long)]
    experiment: Option<String>,
}

impl Common {
    fn config_file(&self) -> Result<ConfigFile> {
        let base = match &self.config {
            Some(path) => ConfigFile::from_path(path)?,
            None => ConfigFile::default(),
        };
        let flags = ConfigFile {
            experiment: self.experiment.clone(),
            law: self.law.as_deref().map(parse_law_arg).transpose()?,
            n: self.n,
            replicas: self.replicas,
            seed: self.seed,
            f_grid: self.fgrid.as_deref().map(parse_grid_arg).transpose()?,
            t_grid: self.tgrid.as_deref().map(parse_grid_arg).transpose()?,
            f_c: self.f_c,
            joint_f: self.joint_f,
            m: self.m,
            limit_samples: self.limit_samples,
            threads: self.threads,
            out: self.out.clone(),
        };
        Ok(base.merge(flags))
    }

    fn resolve(&self) -> Result<ExperimentConfig> {
        ExperimentConfig::resolve(self.config_file()?)
    }
}

fn run(cli: Cli) -> Result<i32> {
    let experiment = |common: &Common, f: fn(&ExperimentConfig) -> Result<Outcome>| -> Result<i32> {
        let cfg = common.resolve()?;
        commands::write_config_echo(&cfg)?;
        let outcome = f(&cfg)?;
        print!("{}", outcome.summary());
        Ok(outcome.exit_code())
    };
    match &cli.command {
        Command::Moments(common) => {
            let law = common
                .config_file()?
                .law
                .ok_or_else(|| CliError::Config("no increment law given (use --law or a config file)".into()))?;
            print!("{}", commands::cmd_moments(&law)?);
            Ok(0)
        }
        Command::Glivenko(c) => experiment(c, commands::cmd_glivenko),
        Command::Identity(c) => experiment(c, commands::cmd_identity),
        Command::Clt(c) => experiment(c, commands::cmd_clt),
        Command::Limit(c) => experiment(c, commands::cmd_limit),
        Command::Joint(c) => experiment(c, commands::cmd_joint),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
