use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use celearn::basis::{min_pairwise_distance, read_basis, write_basis, Psi};
use celearn::harness::{learn_on_basis, run_experiment, select_basis, ExperimentConfig};
use celearn::regret::{regret_report, verify_ce, BasisSet, WeightVector};
use celearn::Error;

#[derive(Parser)]
#[command(
    name = "celearn",
    version,
    about = "Learn approximate correlated equilibria of convex games"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config file
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Select basis joint actions and write them as a basis file
    SelectBasis {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report every player's regret for given weights
    Regret {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        basis: PathBuf,
        /// Comma- or space-separated weights summing to 1
        #[arg(long)]
        weights: String,
    },
    /// Run a single learning run and write its trace
    Learn {
        #[command(flatten)]
        common: Common,
        /// Use this basis instead of selecting one
        #[arg(long)]
        basis: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check whether weights form a correlated equilibrium
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        basis: PathBuf,
        #[arg(long)]
        weights: String,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Run the Monte-Carlo study and write quartile curves
    Experiment {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(common: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::from_file(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn load_basis(path: &Path) -> Result<BasisSet, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    read_basis(&text).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
}

fn parse_weights(text: &str) -> Result<WeightVector, Error> {
    let values = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("bad weight '{s}'")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    WeightVector::new(values)
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::SelectBasis { common, out } => {
            let cfg = load_config(&common)?;
            let game = cfg.build_game()?;
            let basis = select_basis(game.as_ref(), &cfg, cfg.seed)?;
            eprintln!("min pairwise l1 distance: {}", min_pairwise_distance(&basis, Psi::L1)?);
            write_or_print(out.as_deref(), &write_basis(&basis))
        }
        Command::Regret { common, basis, weights } => {
            let cfg = load_config(&common)?;
            let game = cfg.build_game()?;
            let basis = load_basis(&basis)?;
            let w = parse_weights(&weights)?;
            let report = regret_report(&w, &basis, game.as_ref(), &cfg.regret)?;
            for (i, (r, gap)) in report.per_player.iter().zip(&report.fw_gaps).enumerate() {
                println!("player {}: regret {r} (frank-wolfe gap {gap})", i + 1);
            }
            println!("average: {}", report.average);
            Ok(())
        }
        Command::Learn { common, basis, out } => {
            let cfg = load_config(&common)?;
            let game = cfg.build_game()?;
            let basis = match basis {
                Some(path) => load_basis(&path)?,
                None => select_basis(game.as_ref(), &cfg, cfg.seed)?,
            };
            let (trace, _) = learn_on_basis(game.as_ref(), &basis, &cfg, cfg.seed)?;
            if let Some(best) = trace.rows.last() {
                let w = &trace.rows[best.incumbent_query].w;
                eprintln!("best average regret {} at weights {w:?}", best.incumbent);
            }
            write_or_print(out.as_deref(), &trace.to_csv())
        }
        Command::Verify {
            common,
            basis,
            weights,
            tol,
        } => {
            let cfg = load_config(&common)?;
            let game = cfg.build_game()?;
            let basis = load_basis(&basis)?;
            let w = parse_weights(&weights)?;
            let verdict = verify_ce(&basis, &w, game.as_ref(), tol, &cfg.regret)?;
            println!("equilibrium: {}", verdict.is_equilibrium);
            println!("worst player: {}", verdict.worst_player + 1);
            println!("worst regret: {}", verdict.worst_regret);
            Ok(())
        }
        Command::Experiment { common, out } => {
            let mut cfg = load_config(&common)?;
            if out.is_some() {
                cfg.output_path = out;
            }
            let result = run_experiment(&cfg)?;
            if cfg.output_path.is_none() {
                print!("{}", result.curve.to_csv());
            }
            if let Some(last) = result.curve.rows.last() {
                eprintln!(
                    "{} runs, median average regret at iteration {}: {}",
                    result.runs.len(),
                    last.iteration,
                    last.average.median
                );
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(2)
        }
    }
}
