//! Command-line front end: parses flags into config overrides and runs one experiment.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use stochpm::config::ExperimentConfig;
use stochpm::experiment::{run, Command};

#[derive(Parser)]
#[command(name = "stochpm", version, about = "Stochastic Burgers simulation and parameterizing-manifold reduction")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Experiment config (TOML with sections).
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    /// Override a config key, e.g. `--set model.sigma=0.4`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,

    /// Output directory (overrides `output`).
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,

    /// Noise seed (overrides `noise.seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Write the noise increments to `noise.bin` in the output directory.
    #[arg(long, global = true)]
    dump_noise: bool,

    /// Read noise increments from a file written by `--dump-noise`.
    #[arg(long, value_name = "FILE", global = true)]
    load_noise: Option<PathBuf>,

    /// Print the resolved config and exit.
    #[arg(long, global = true)]
    print_config: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    H1,
    Averaged,
    Galerkin,
    OnTheFly,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate the SPDE and store mode amplitudes.
    SimulateSpde,
    /// Integrate a two-mode reduced system.
    SimulateReduced {
        #[arg(long, value_enum)]
        variant: Option<VariantArg>,
    },
    /// Tabulate pullback manifold values on a grid of resolved states.
    PullbackPm,
    /// Monte-Carlo memory-term statistics against the closed forms.
    MemoryStats,
    /// Time-averaged parameterization defects over the configured sweep.
    Defect,
    /// Mode PDFs, autocorrelations and reduced-vs-SPDE errors.
    PdfAcf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut overrides = cli.set.clone();
    let path_str = |p: &PathBuf| format!("{:?}", p.display().to_string());
    if let Some(o) = &cli.output {
        overrides.push(format!("output={}", path_str(o)));
    }
    if let Some(s) = cli.seed {
        overrides.push(format!("noise.seed={s}"));
    }
    if cli.dump_noise {
        overrides.push("noise.dump=true".into());
    }
    if let Some(p) = &cli.load_noise {
        overrides.push(format!("noise.load={}", path_str(p)));
    }
    let command = match cli.command {
        Cmd::SimulateSpde => Command::SimulateSpde,
        Cmd::SimulateReduced { variant } => {
            if let Some(v) = variant {
                let name = match v {
                    VariantArg::H1 => "h1",
                    VariantArg::Averaged => "averaged",
                    VariantArg::Galerkin => "galerkin",
                    VariantArg::OnTheFly => "on-the-fly",
                };
                overrides.push(format!("reduction.variant=\"{name}\""));
            }
            Command::SimulateReduced
        }
        Cmd::PullbackPm => Command::PullbackPm,
        Cmd::MemoryStats => Command::MemoryStats,
        Cmd::Defect => Command::Defect,
        Cmd::PdfAcf => Command::PdfAcf,
    };
    let cfg = match ExperimentConfig::load(cli.config.as_deref(), &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if cli.print_config {
        print!("{}", cfg.to_toml());
        return ExitCode::SUCCESS;
    }
    match run(command, &cfg) {
        Ok(a) => {
            println!("{}", a.summary);
            eprintln!("wrote {} files to {}", a.files.len(), a.dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
