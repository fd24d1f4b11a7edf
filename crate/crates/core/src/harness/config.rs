//! `key = value` experiment configuration files.
//!
//! ```text
//! # two commuters on the bundled Sioux Falls network
//! game = traffic
//! network = ../fixtures/SiouxFalls_net.tntp   # relative to this file
//! player = 1 20 6000          # origin destination demand [budget_factor]
//! player = 13 2 6000 1.5
//! lambda = 0.15
//! nu = 4
//! basis_size = 10
//! basis_mode = ccp            # or random
//! budget = 100
//! monte_carlo_runs = 10
//! seed = 1
//! output = ../results/sioux_2p.csv
//! ```
//!
//! A quadratic game replaces the network keys with `offsets`, `coupling`
//! (rows separated by `;`), `lower` and `upper`. Node ids are 1-based.

use std::path::{Path, PathBuf};

use crate::basis::DEFAULT_N_TWO_PLAYERS;
use crate::bayesopt::{AcquisitionOptions, BoOptions, GpHyper};
use crate::error::{Error, Result};
use crate::game::{build_traffic_game, ConvexGame, PlayerSpec, QuadraticGame, DEFAULT_BUDGET_FACTOR};
use crate::regret::RegretOptions;
use crate::tntp::NetworkData;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisMode {
    Ccp,
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GameConfig {
    Traffic {
        network_path: PathBuf,
        players: Vec<PlayerSpec>,
        lambda: f64,
        nu: u32,
    },
    Quadratic {
        offsets: Vec<f64>,
        coupling: Vec<Vec<f64>>,
        lower: f64,
        upper: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub game: GameConfig,
    pub basis_size: usize,
    pub basis_mode: BasisMode,
    pub ccp_max_iter: usize,
    /// The seed inside is replaced per Monte-Carlo run.
    pub bo: BoOptions,
    pub regret: RegretOptions,
    pub monte_carlo_runs: usize,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base, &path.display().to_string())
    }

    /// Parses config text; relative paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path, label: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::Config {
            path: label.to_string(),
            line,
            message,
        };

        let mut game_kind = None;
        let mut network = None;
        let mut players = Vec::new();
        let mut lambda = 0.15;
        let mut nu = 4u32;
        let mut offsets = None;
        let mut coupling = None;
        let mut lower = 0.0;
        let mut upper = 1.0;
        let mut basis_size = DEFAULT_N_TWO_PLAYERS;
        let mut basis_mode = BasisMode::Ccp;
        let mut ccp_max_iter = 100;
        let mut bo = BoOptions::default();
        let mut hyper = GpHyper::default();
        let mut acq = AcquisitionOptions::default();
        let mut regret = RegretOptions::default();
        let mut monte_carlo_runs = 10;
        let mut seed = 0u64;
        let mut output_path = None;

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(line_no, format!("expected 'key = value', found '{line}'")))?;
            macro_rules! num {
                ($t:ty) => {
                    value.parse::<$t>().map_err(|_| {
                        err(
                            line_no,
                            format!("'{key}' expects a number, found '{value}'"),
                        )
                    })?
                };
            }
            let floats = |v: &str| -> Result<Vec<f64>> {
                v.split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<f64>().map_err(|_| err(line_no, format!("bad number '{s}'"))))
                    .collect()
            };
            match key {
                "game" => {
                    game_kind = Some(match value {
                        "traffic" | "quadratic" => value.to_string(),
                        _ => return Err(err(line_no, format!("unknown game '{value}'"))),
                    })
                }
                "network" => network = Some(base_dir.join(value)),
                "player" => {
                    let f: Vec<&str> = value.split_whitespace().collect();
                    if f.len() != 3 && f.len() != 4 {
                        return Err(err(
                            line_no,
                            "player needs 'origin destination demand [budget_factor]'".into(),
                        ));
                    }
                    let node = |s: &str| -> Result<usize> {
                        match s.parse::<usize>() {
                            Ok(n) if n >= 1 => Ok(n - 1),
                            _ => Err(err(line_no, format!("bad node id '{s}'"))),
                        }
                    };
                    let number = |s: &str| -> Result<f64> {
                        s.parse::<f64>().map_err(|_| err(line_no, format!("bad number '{s}'")))
                    };
                    players.push(PlayerSpec {
                        origin: node(f[0])?,
                        destination: node(f[1])?,
                        demand: number(f[2])?,
                        budget_factor: if f.len() == 4 {
                            number(f[3])?
                        } else {
                            DEFAULT_BUDGET_FACTOR
                        },
                    });
                }
                "lambda" => lambda = num!(f64),
                "nu" => nu = num!(u32),
                "offsets" => offsets = Some(floats(value)?),
                "coupling" => {
                    coupling = Some(value.split(';').map(&floats).collect::<Result<Vec<_>>>()?);
                }
                "lower" => lower = num!(f64),
                "upper" => upper = num!(f64),
                "basis_size" => basis_size = num!(usize),
                "basis_mode" => {
                    basis_mode = match value {
                        "ccp" => BasisMode::Ccp,
                        "random" => BasisMode::Random,
                        _ => {
                            return Err(err(
                                line_no,
                                format!("basis_mode must be ccp or random, found '{value}'"),
                            ))
                        }
                    }
                }
                "ccp_max_iter" => ccp_max_iter = num!(usize),
                "budget" => bo.budget = num!(usize),
                "n_init" => bo.n_init = num!(usize),
                "lengthscale" => hyper.lengthscale = num!(f64),
                "signal_variance" => hyper.signal_variance = num!(f64),
                "noise_sigma" => hyper.noise_sigma = num!(f64),
                "refit_lengthscale" => {
                    bo.refit_lengthscale = match value {
                        "true" => true,
                        "false" => false,
                        _ => return Err(err(line_no, format!("expected true or false, found '{value}'"))),
                    }
                }
                "num_candidates" => acq.num_candidates = num!(usize),
                "num_polish" => acq.num_polish = num!(usize),
                "polish_steps" => acq.polish_steps = num!(usize),
                "fw_tol" => regret.fw_rel_tol = num!(f64),
                "fw_max_iter" => regret.fw_max_iter = num!(usize),
                "monte_carlo_runs" => monte_carlo_runs = num!(usize),
                "seed" => seed = num!(u64),
                "output" => output_path = Some(base_dir.join(value)),
                _ => return Err(err(line_no, format!("unknown key '{key}'"))),
            }
        }

        let last = text.lines().count();
        let game = match game_kind.as_deref() {
            Some("traffic") => GameConfig::Traffic {
                network_path: network.ok_or_else(|| err(last, "traffic game needs 'network'".into()))?,
                players,
                lambda,
                nu,
            },
            Some(_) => {
                let offsets = offsets.ok_or_else(|| err(last, "quadratic game needs 'offsets'".into()))?;
                let m = offsets.len();
                GameConfig::Quadratic {
                    coupling: coupling.unwrap_or_else(|| vec![vec![0.0; m]; m]),
                    offsets,
                    lower,
                    upper,
                }
            }
            None => return Err(err(last, "missing 'game'".into())),
        };
        bo.hyper = hyper;
        bo.acquisition = acq;
        let cfg = Self {
            game,
            basis_size,
            basis_mode,
            ccp_max_iter,
            bo,
            regret,
            monte_carlo_runs,
            seed,
            output_path,
        };
        cfg.validate().map_err(|e| err(last, e.to_string()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.monte_carlo_runs == 0 {
            return Err(Error::InvalidArgument("monte_carlo_runs must be at least 1".into()));
        }
        if self.basis_size < 2 {
            return Err(Error::InvalidArgument("basis_size must be at least 2".into()));
        }
        if self.bo.n_init == 0 || self.bo.budget < self.bo.n_init {
            return Err(Error::InvalidArgument("need budget >= n_init >= 1".into()));
        }
        if let GameConfig::Traffic { players, .. } = &self.game {
            if players.is_empty() {
                return Err(Error::InvalidArgument(
                    "traffic game needs at least one 'player'".into(),
                ));
            }
        }
        self.bo.hyper.validate()
    }

    /// Loads the network if needed and builds the game.
    pub fn build_game(&self) -> Result<Box<dyn ConvexGame>> {
        match &self.game {
            GameConfig::Traffic {
                network_path,
                players,
                lambda,
                nu,
            } => {
                let net = NetworkData::from_file(network_path)?;
                Ok(Box::new(build_traffic_game(net, players.clone(), *lambda, *nu)?))
            }
            GameConfig::Quadratic {
                offsets,
                coupling,
                lower,
                upper,
            } => Ok(Box::new(QuadraticGame::new(
                offsets.clone(),
                coupling.clone(),
                *lower,
                *upper,
            )?)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn traffic_config() {
        let text = "game = traffic\nnetwork = net.tntp\nplayer = 1 3 2.5\nplayer = 2 4 1 2.0 # comment\n\
                    basis_size = 4\nbudget = 20\nseed = 9\nbasis_mode = random\n";
        let cfg = ExperimentConfig::parse(text, Path::new("/data"), "t.cfg").unwrap();
        match &cfg.game {
            GameConfig::Traffic {
                network_path,
                players,
                lambda,
                nu,
            } => {
                assert_eq!(network_path, Path::new("/data/net.tntp"));
                assert_eq!(players[0], PlayerSpec::new(0, 2, 2.5));
                assert_eq!(players[1].budget_factor, 2.0);
                assert_eq!((*lambda, *nu), (0.15, 4));
            }
            _ => panic!("wrong game"),
        }
        assert_eq!((cfg.basis_size, cfg.bo.budget, cfg.seed), (4, 20, 9));
        assert_eq!(cfg.basis_mode, BasisMode::Random);
    }

    #[test]
    fn quadratic_config() {
        let text = "game = quadratic\noffsets = 0 0\ncoupling = 0 1; 1 0\n";
        let cfg = ExperimentConfig::parse(text, Path::new("."), "q.cfg").unwrap();
        let g = cfg.build_game().unwrap();
        assert_eq!(g.num_players(), 2);
        assert_eq!(g.cost(0, &[0.25], &[&[0.75]]).unwrap(), 0.25);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = ExperimentConfig::parse("game = quadratic\nbogus = 1\n", Path::new("."), "x.cfg").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        let e = ExperimentConfig::parse("game = quadratic\noffsets = 0\nbudget = x\n", Path::new("."), "x.cfg")
            .unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
        assert!(ExperimentConfig::parse("game = quadratic\noffsets = 0\nbudget = 2\n", Path::new("."), "x").is_err());
        assert!(ExperimentConfig::parse("game = traffic\nnetwork = a\n", Path::new("."), "x").is_err());
    }
}
