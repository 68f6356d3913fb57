use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gowerslab::{default_out, execute, load_config, RunOptions, EXIT_CONFIG, EXIT_FAIL, EXIT_PASS};

#[derive(Parser)]
#[command(name = "gowerslab", version, about = "Run singular-measure experiments from a TOML config")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML experiment config; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (default: results/<command>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Overrides the master seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Also run the exact enumeration oracles.
    #[arg(long, global = true)]
    exact: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Construct the measure, check mass, fit the ball condition.
    BuildMeasure,
    /// Classical and higher-order Fourier decay fits.
    FourierFit,
    /// U^k norms of mollifications and oracle checks.
    GowersNorms,
    /// Decay of U^k norms of mollification differences.
    Prop1,
    /// Restricted strong-type estimate over mollification scales.
    #[command(name = "maximal-7p8")]
    Maximal7p8,
    /// Transverse, tangency and dyadic scale inequalities.
    VerifyLemmas,
    /// Every experiment above.
    FullSuite,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::BuildMeasure => "build-measure",
            Command::FourierFit => "fourier-fit",
            Command::GowersNorms => "gowers-norms",
            Command::Prop1 => "prop1",
            Command::Maximal7p8 => "maximal-7p8",
            Command::VerifyLemmas => "verify-lemmas",
            Command::FullSuite => "full-suite",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match load_config(cli.config.as_deref()) {
        Ok(c) => c,
        Err(errs) => {
            eprintln!("invalid config:");
            for e in errs {
                eprintln!("  {e}");
            }
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("invalid config:\n  --threads: must be positive");
            return ExitCode::from(EXIT_CONFIG);
        }
        #[cfg(feature = "parallel")]
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("warning: could not size the thread pool: {e}");
        }
        #[cfg(not(feature = "parallel"))]
        eprintln!("warning: built without the parallel feature; --threads {t} ignored");
    }
    let command = cli.command.name();
    let out = cli.out.unwrap_or_else(|| default_out(command));
    let opts = RunOptions { exact: cli.exact };
    match execute(command, &cfg, &out, opts) {
        Ok(outcomes) => {
            print!("{}", gowerslab::summary_text(&outcomes));
            println!("artifacts in {}", out.display());
            if outcomes.iter().all(|o| o.pass) {
                ExitCode::from(EXIT_PASS)
            } else {
                ExitCode::from(EXIT_FAIL)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_FAIL)
        }
    }
}
