//! Monte-Carlo experiments: basis selection, learning, and quartile curves
//! of the regrets at the incumbent weights.

mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::basis::{ccp_select, min_pairwise_distance, random_basis, CcpOptions, Psi};
use crate::bayesopt::{bo_learn, BoOptions, LearnTrace};
use crate::error::{Error, Result};
use crate::game::ConvexGame;
use crate::regret::{regret_report, BasisSet, RegretReport};

pub use config::{BasisMode, ExperimentConfig, GameConfig};

/// Lower quartile, median and upper quartile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

impl Quartiles {
    /// Linear interpolation between order statistics. Panics on empty input.
    pub fn of(values: &[f64]) -> Self {
        assert!(!values.is_empty(), "quartiles of an empty sample");
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Self {
            q1: quantile_sorted(&v, 0.25),
            median: quantile_sorted(&v, 0.5),
            q3: quantile_sorted(&v, 0.75),
        }
    }
}

fn quantile_sorted(v: &[f64], p: f64) -> f64 {
    let h = (v.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub iteration: usize,
    pub per_player: Vec<Quartiles>,
    pub average: Quartiles,
}

/// Per-iteration quartiles across runs of the regrets at each run's incumbent.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedCurve {
    pub num_players: usize,
    pub rows: Vec<CurveRow>,
}

impl AggregatedCurve {
    pub fn from_runs(runs: &[RunResult]) -> Result<Self> {
        let first = runs
            .first()
            .ok_or_else(|| Error::InvalidArgument("no completed runs to aggregate".into()))?;
        let iterations = first.incumbent_regrets.len();
        let m = first.incumbent_regrets.first().map_or(0, |r| r.len());
        if runs.iter().any(|r| r.incumbent_regrets.len() != iterations) {
            return Err(Error::InvalidArgument("runs have different lengths".into()));
        }
        let rows = (0..iterations)
            .map(|t| {
                let per_player = (0..m)
                    .map(|i| {
                        let vals: Vec<f64> = runs.iter().map(|r| r.incumbent_regrets[t][i]).collect();
                        Quartiles::of(&vals)
                    })
                    .collect();
                let avg: Vec<f64> = runs.iter().map(|r| r.trace.rows[t].incumbent).collect();
                CurveRow {
                    iteration: t + 1,
                    per_player,
                    average: Quartiles::of(&avg),
                }
            })
            .collect();
        Ok(Self { num_players: m, rows })
    }

    /// `iteration,p1_q1,p1_med,p1_q3,...`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration");
        for i in 1..=self.num_players {
            let _ = write!(out, ",p{i}_q1,p{i}_med,p{i}_q3");
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{}", row.iteration);
            for q in &row.per_player {
                let _ = write!(out, ",{:?},{:?},{:?}", q.q1, q.median, q.q3);
            }
            out.push('\n');
        }
        out
    }

    /// `iteration,avg_q1,avg_med,avg_q3` for the average regret.
    pub fn average_csv(&self) -> String {
        let mut out = String::from("iteration,avg_q1,avg_med,avg_q3\n");
        for row in &self.rows {
            let q = row.average;
            let _ = writeln!(out, "{},{:?},{:?},{:?}", row.iteration, q.q1, q.median, q.q3);
        }
        out
    }

    pub fn median_average(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.average.median).collect()
    }
}

/// Outcome of one Monte-Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub run: usize,
    pub seed: u64,
    pub basis: BasisSet,
    pub basis_min_distance: f64,
    pub trace: LearnTrace,
    /// Per iteration, every player's regret at the incumbent weights.
    pub incumbent_regrets: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub curve: AggregatedCurve,
    pub runs: Vec<RunResult>,
}

/// Selects a basis according to the config's mode.
pub fn select_basis(game: &dyn ConvexGame, cfg: &ExperimentConfig, seed: u64) -> Result<BasisSet> {
    match cfg.basis_mode {
        BasisMode::Random => random_basis(game, cfg.basis_size, seed),
        BasisMode::Ccp => {
            let opts = CcpOptions {
                max_iter: cfg.ccp_max_iter,
                seed,
                ..CcpOptions::default()
            };
            Ok(ccp_select(game, cfg.basis_size, Psi::L1, &opts)?.0)
        }
    }
}

/// Learns weights for a fixed basis. Every oracle report is kept, so the
/// incumbent's per-player regrets need no extra evaluations.
pub fn learn_on_basis(
    game: &dyn ConvexGame,
    basis: &BasisSet,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<(LearnTrace, Vec<RegretReport>)> {
    let mut reports = Vec::with_capacity(cfg.bo.budget);
    let oracle = |w: &crate::regret::WeightVector| {
        let report = regret_report(w, basis, game, &cfg.regret)?;
        let avg = report.average;
        reports.push(report);
        Ok(avg)
    };
    let opts = BoOptions { seed, ..cfg.bo };
    let (_, trace) = bo_learn(oracle, basis.len(), &opts)?;
    Ok((trace, reports))
}

pub fn run_single(game: &dyn ConvexGame, cfg: &ExperimentConfig, run: usize) -> Result<RunResult> {
    let seed = cfg.seed.wrapping_add(run as u64);
    let basis = select_basis(game, cfg, seed)?;
    let basis_min_distance = min_pairwise_distance(&basis, Psi::L1)?;
    let (trace, reports) = learn_on_basis(game, &basis, cfg, seed)?;
    let incumbent_regrets = trace
        .rows
        .iter()
        .map(|row| reports[row.incumbent_query].per_player.clone())
        .collect();
    Ok(RunResult {
        run,
        seed,
        basis,
        basis_min_distance,
        trace,
        incumbent_regrets,
    })
}

/// Path of the companion CSV holding the average-regret quartiles.
pub fn average_csv_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().and_then(|s| s.to_str()).unwrap_or("curve");
    output.with_file_name(format!("{stem}_average.csv"))
}

fn write_outputs(curve: &AggregatedCurve, output: &Path) -> Result<()> {
    if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(output, curve.to_csv()).map_err(|e| Error::io(output, e))?;
    let avg = average_csv_path(output);
    std::fs::write(&avg, curve.average_csv()).map_err(|e| Error::io(&avg, e))
}

/// Runs every Monte-Carlo replicate (seed + run index) and aggregates them.
/// When some runs fail, the completed ones are still written before the
/// first failure is returned.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let game = cfg.build_game()?;
    let results: Vec<Result<RunResult>> = (0..cfg.monte_carlo_runs)
        .into_par_iter()
        .map(|r| {
            run_single(game.as_ref(), cfg, r).map_err(|e| Error::Run {
                run: r,
                source: Box::new(e),
            })
        })
        .collect();
    let mut runs = Vec::with_capacity(results.len());
    let mut first_err = None;
    for r in results {
        match r {
            Ok(run) => runs.push(run),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    if let Some(e) = first_err {
        if let (Some(out), Ok(curve)) = (&cfg.output_path, AggregatedCurve::from_runs(&runs)) {
            write_outputs(&curve, out)?;
        }
        return Err(e);
    }
    let curve = AggregatedCurve::from_runs(&runs)?;
    if let Some(out) = &cfg.output_path {
        write_outputs(&curve, out)?;
    }
    Ok(ExperimentOutput { curve, runs })
}
