use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qal::cli::{dispatch, Command};
use qal::config::RunConfig;

/// Ground states of the quintic NLSE in a random potential and their localization.
#[derive(Parser)]
#[command(name = "qal", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Flat key=value configuration file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand)]
enum Cmd {
    /// Relax to the ground state; writes ground.dat and ground.csv.
    Ground,
    /// Real-time propagation of a wavefunction dump; writes evolve.dat.
    Evolve {
        #[arg(long)]
        input: PathBuf,
    },
    /// Disorder potential on the grid; writes potential.dat.
    Potential,
    /// Tail fits of a wavefunction dump; writes fit.csv.
    Fit {
        #[arg(long)]
        input: PathBuf,
    },
    /// Parameter sweep; writes sweep.csv and sweep-agg.csv.
    Sweep,
}

#[derive(Args)]
struct Overrides {
    #[arg(long = "L", global = true, allow_hyphen_values = true)]
    l: Option<String>,
    #[arg(long = "dx", global = true, allow_hyphen_values = true)]
    dx: Option<String>,
    #[arg(long = "dt", global = true, allow_hyphen_values = true)]
    dt: Option<String>,
    #[arg(long = "g5", global = true, allow_hyphen_values = true)]
    g5: Option<String>,
    #[arg(long = "V0", global = true, allow_hyphen_values = true)]
    v0: Option<String>,
    #[arg(long = "S", global = true, allow_hyphen_values = true)]
    s: Option<String>,
    #[arg(long = "seed", global = true, allow_hyphen_values = true)]
    seed: Option<String>,
    #[arg(long = "sigma0", global = true, allow_hyphen_values = true)]
    sigma0: Option<String>,
    #[arg(long = "energy_tol", global = true, allow_hyphen_values = true)]
    energy_tol: Option<String>,
    #[arg(long = "max_steps", global = true, allow_hyphen_values = true)]
    max_steps: Option<String>,
    #[arg(long = "f_hi", global = true, allow_hyphen_values = true)]
    f_hi: Option<String>,
    #[arg(long = "f_lo", global = true, allow_hyphen_values = true)]
    f_lo: Option<String>,
    /// |x_p - <x>| above which a state counts as fragmented.
    #[arg(long = "frag_threshold", global = true, allow_hyphen_values = true)]
    frag_threshold: Option<String>,
    #[arg(long = "jump_factor", global = true, allow_hyphen_values = true)]
    jump_factor: Option<String>,
    #[arg(long = "S_split", global = true, allow_hyphen_values = true)]
    s_split: Option<String>,
    #[arg(long = "t_final", global = true, allow_hyphen_values = true)]
    t_final: Option<String>,
    /// Swept variable: g5, V0 or S.
    #[arg(long = "sweep", global = true, allow_hyphen_values = true)]
    sweep: Option<String>,
    /// Sweep values: `a,b,c` or `start:step:stop`.
    #[arg(long = "values", global = true, allow_hyphen_values = true)]
    values: Option<String>,
    /// Disorder seeds per sweep value (seed, seed+1, ...).
    #[arg(long = "ensemble", global = true, allow_hyphen_values = true)]
    ensemble: Option<String>,
    #[arg(long = "budget", global = true, allow_hyphen_values = true)]
    budget: Option<String>,
    #[arg(long = "out_dir", global = true, allow_hyphen_values = true)]
    out_dir: Option<String>,
}

impl Overrides {
    fn pairs(&self) -> Vec<(String, String)> {
        [
            ("L", &self.l),
            ("dx", &self.dx),
            ("dt", &self.dt),
            ("g5", &self.g5),
            ("V0", &self.v0),
            ("S", &self.s),
            ("seed", &self.seed),
            ("sigma0", &self.sigma0),
            ("energy_tol", &self.energy_tol),
            ("max_steps", &self.max_steps),
            ("f_hi", &self.f_hi),
            ("f_lo", &self.f_lo),
            ("frag_threshold", &self.frag_threshold),
            ("jump_factor", &self.jump_factor),
            ("S_split", &self.s_split),
            ("t_final", &self.t_final),
            ("sweep", &self.sweep),
            ("values", &self.values),
            ("ensemble", &self.ensemble),
            ("budget", &self.budget),
            ("out_dir", &self.out_dir),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
        .collect()
    }
}

fn run(cli: Cli) -> qal::Result<Vec<String>> {
    let text = cli
        .config
        .as_ref()
        .map(std::fs::read_to_string)
        .transpose()?;
    let cfg = RunConfig::parse(text.as_deref(), &cli.overrides.pairs())?;
    let command = match cli.command {
        Cmd::Ground => Command::Ground,
        Cmd::Evolve { input } => Command::Evolve { input },
        Cmd::Potential => Command::Potential,
        Cmd::Fit { input } => Command::Fit { input },
        Cmd::Sweep => Command::Sweep,
    };
    dispatch(&command, &cfg)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("qal: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
