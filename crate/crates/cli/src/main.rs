//! `slipplap`: command-line front end of the slip p-Laplacian solver.
//!
//! Exit status: 0 on success, 1 on usage, config or solver errors, 2 when the
//! contraction gate is violated and the iteration diverges.

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use slipplap::grid::BcVariant;

use commands::Failure;
use config::{Overrides, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "slipplap",
    version,
    about = "Slip-boundary p-Laplacian solver and verification suite"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// TOML run configuration; missing keys take their defaults
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Interior nodes per side
    #[arg(long, global = true, value_name = "N")]
    grid: Option<usize>,
    #[arg(long, global = true)]
    p: Option<f64>,
    #[arg(long, global = true)]
    mu: Option<f64>,
    #[arg(long, global = true)]
    q: Option<f64>,
    #[arg(long, global = true, value_enum)]
    bc: Option<BcArg>,
    /// Output directory for reports and field dumps
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print the effective configuration as TOML and exit
    #[arg(long, global = true)]
    dump_config: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BcArg {
    Navier,
    Bardos,
}

impl From<BcArg> for BcVariant {
    fn from(b: BcArg) -> Self {
        match b {
            BcArg::Navier => BcVariant::NavierStress,
            BcArg::Bardos => BcVariant::BardosVorticity,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fixed-point solve for mu > 0 (energy minimisation at mu = 0)
    Solve,
    /// Solve along mu_k = mu0 factor^k towards mu = 0
    Continuation,
    /// Linear slip problem -div(Du) = F
    Linsolve,
    /// Estimate C_q, C_hat and Korn's constant and evaluate the gate
    Constants,
    /// Discrete Green and boundary identity battery
    Identities,
    /// Manufactured-solution refinement study
    Mms,
    /// Exponent algebra: q_hat, r(2), r(q)
    Exponents {
        /// Space dimension
        #[arg(long, default_value_t = 2.0)]
        n: f64,
    },
}

fn effective_config(g: &GlobalArgs) -> Result<RunConfig, Failure> {
    let mut cfg = match &g.config {
        Some(path) => RunConfig::load(path).map_err(Failure::Usage)?,
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides {
        grid: g.grid,
        p: g.p,
        mu: g.mu,
        q: g.q,
        bc: g.bc.map(Into::into),
        out: g.out.clone(),
        seed: g.seed,
    });
    cfg.validate().map_err(Failure::Usage)?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<String, Failure> {
    let cfg = effective_config(&cli.global)?;
    if cli.global.dump_config {
        return cfg.to_toml().map_err(Failure::Usage);
    }
    let Some(cmd) = cli.command else {
        return Err(Failure::Usage("no subcommand given; see --help".into()));
    };
    match cmd {
        Command::Solve => commands::cmd_solve(&cfg),
        Command::Continuation => commands::cmd_continuation(&cfg),
        Command::Linsolve => commands::cmd_linsolve(&cfg),
        Command::Constants => commands::cmd_constants(&cfg),
        Command::Identities => commands::cmd_identities(&cfg),
        Command::Mms => commands::cmd_mms(&cfg),
        Command::Exponents { n } => commands::cmd_exponents(cfg.p, cfg.q, n),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(text) => {
            // a closed pipe downstream is not an error of the run
            let _ = writeln!(std::io::stdout(), "{text}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
