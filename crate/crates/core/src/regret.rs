//! Correlated regret of finitely supported joint-action distributions.
//!
//! A distribution puts weight `w[k]` on basis joint action `k`. Player `i`'s
//! regret is its expected cost under the distribution minus the best expected
//! cost it could get by committing to a single action `y` in advance:
//!
//! ```text
//! r_i(w) = sum_k w[k] f_i(x_i^k, x_-i^k) - min_y sum_k w[k] f_i(y, x_-i^k)
//! ```
//!
//! The distribution is a correlated equilibrium exactly when every `r_i <= 0`.
//! Values are signed: correlation can make the first term beat every constant
//! deviation, so negative regrets are legitimate.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::{split_joint, ConvexGame};
use crate::polytope::{frank_wolfe_min, FwOptions};

/// A point of the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub const SUM_TOL: f64 = 1e-9;

    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("weight vector is empty".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "weights must be finite and nonnegative: {weights:?}"
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > Self::SUM_TOL {
            return Err(Error::InvalidArgument(format!("weights sum to {total}, not 1")));
        }
        Ok(Self(weights))
    }

    pub(crate) fn from_vec_unchecked(weights: Vec<f64>) -> Self {
        Self(weights)
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn dirac(n: usize, k: usize) -> Self {
        let mut w = vec![0.0; n];
        w[k] = 1.0;
        Self(w)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// `N` joint actions; `actions[k][i]` is player `i`'s part of joint action `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    actions: Vec<Vec<Vec<f64>>>,
}

impl BasisSet {
    pub fn new(actions: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let first = actions
            .first()
            .ok_or_else(|| Error::InvalidArgument("basis set is empty".into()))?;
        let dims: Vec<usize> = first.iter().map(Vec::len).collect();
        if dims.is_empty() {
            return Err(Error::InvalidArgument("joint action has no players".into()));
        }
        for joint in &actions {
            if joint.len() != dims.len() {
                return Err(Error::dim("players per joint action", dims.len(), joint.len()));
            }
            for (x, &d) in joint.iter().zip(&dims) {
                if x.len() != d {
                    return Err(Error::dim("player action length", d, x.len()));
                }
            }
        }
        Ok(Self { actions })
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn num_players(&self) -> usize {
        self.actions[0].len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.actions[0].iter().map(Vec::len).collect()
    }

    pub fn joint(&self, k: usize) -> &[Vec<f64>] {
        &self.actions[k]
    }

    pub fn actions(&self) -> &[Vec<Vec<f64>>] {
        &self.actions
    }

    /// Joint action `k` with the players' vectors concatenated.
    pub fn flattened(&self, k: usize) -> Vec<f64> {
        self.actions[k].concat()
    }

    /// Checks that every component lies in its player's action set.
    pub fn check_feasible(&self, game: &dyn ConvexGame, tol: f64) -> Result<()> {
        self.check_game(game)?;
        for (k, joint) in self.actions.iter().enumerate() {
            for (i, x) in joint.iter().enumerate() {
                if !game.action_set(i).contains(x, tol)? {
                    return Err(Error::InvalidArgument(format!(
                        "joint action {} is outside the action set of player {}",
                        k + 1,
                        i + 1
                    )));
                }
            }
        }
        Ok(())
    }

    fn check_game(&self, game: &dyn ConvexGame) -> Result<()> {
        if self.num_players() != game.num_players() {
            return Err(Error::dim("basis players", game.num_players(), self.num_players()));
        }
        for (d, gd) in self.dims().into_iter().zip(game.action_dims()) {
            if d != gd {
                return Err(Error::dim("basis action length", gd, d));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretOptions {
    /// Frank–Wolfe gap tolerance as a fraction of `max(1, |expected cost|)`.
    pub fw_rel_tol: f64,
    pub fw_max_iter: usize,
}

impl Default for RegretOptions {
    fn default() -> Self {
        Self {
            fw_rel_tol: 1e-6,
            fw_max_iter: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    pub value: f64,
    pub point: Vec<f64>,
    pub gap: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlayerRegret {
    pub expected_cost: f64,
    pub best_response: BestResponse,
    /// `expected_cost - best_response.value`. Frank–Wolfe only over-estimates
    /// the minimum, so the exact regret lies in `[regret, regret + gap]`.
    pub regret: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretReport {
    pub per_player: Vec<f64>,
    pub average: f64,
    pub best_responses: Vec<Vec<f64>>,
    pub fw_gaps: Vec<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CeVerdict {
    pub is_equilibrium: bool,
    pub worst_player: usize,
    pub worst_regret: f64,
}

fn check_inputs(w: &WeightVector, basis: &BasisSet, game: &dyn ConvexGame, player: usize) -> Result<()> {
    if w.len() != basis.len() {
        return Err(Error::dim("weights vs basis size", basis.len(), w.len()));
    }
    if player >= game.num_players() {
        return Err(Error::dim("player index", game.num_players(), player + 1));
    }
    basis.check_game(game)
}

pub fn expected_cost(player: usize, w: &WeightVector, basis: &BasisSet, game: &dyn ConvexGame) -> Result<f64> {
    check_inputs(w, basis, game, player)?;
    let mut total = 0.0;
    for (k, &wk) in w.as_slice().iter().enumerate() {
        if wk == 0.0 {
            continue;
        }
        let (own, others) = split_joint(basis.joint(k), player);
        total += wk * game.cost(player, own, &others)?;
    }
    Ok(total)
}

/// Minimizes `g(y) = sum_k w[k] f_i(y, x_-i^k)` over player `i`'s action set
/// to absolute Frank–Wolfe gap `tol_gap`.
pub fn best_response_value(
    player: usize,
    w: &WeightVector,
    basis: &BasisSet,
    game: &dyn ConvexGame,
    tol_gap: f64,
    max_iter: usize,
) -> Result<BestResponse> {
    check_inputs(w, basis, game, player)?;
    let scenarios: Vec<(f64, Vec<&[f64]>)> = w
        .as_slice()
        .iter()
        .enumerate()
        .filter(|(_, &wk)| wk > 0.0)
        .map(|(k, &wk)| (wk, split_joint(basis.joint(k), player).1))
        .collect();
    let dim = game.action_set(player).dim();
    let objective = |y: &[f64]| -> Result<(f64, Vec<f64>)> {
        let mut value = 0.0;
        let mut grad = vec![0.0; dim];
        for (wk, others) in &scenarios {
            value += wk * game.cost(player, y, others)?;
            let g = game.cost_gradient(player, y, others)?;
            for (acc, gj) in grad.iter_mut().zip(g) {
                *acc += wk * gj;
            }
        }
        Ok((value, grad))
    };
    let fw = frank_wolfe_min(
        objective,
        game.action_set(player),
        &FwOptions::absolute(tol_gap, max_iter),
    )?;
    Ok(BestResponse {
        value: fw.value,
        point: fw.point,
        gap: fw.gap,
        converged: fw.converged,
    })
}

pub fn correlated_regret(
    player: usize,
    w: &WeightVector,
    basis: &BasisSet,
    game: &dyn ConvexGame,
    opts: &RegretOptions,
) -> Result<PlayerRegret> {
    let expected = expected_cost(player, w, basis, game)?;
    let tol = opts.fw_rel_tol * expected.abs().max(1.0);
    let best_response = best_response_value(player, w, basis, game, tol, opts.fw_max_iter)?;
    Ok(PlayerRegret {
        expected_cost: expected,
        regret: expected - best_response.value,
        best_response,
    })
}

/// Every player's regret and their average; the quantity the learner queries.
pub fn regret_report(
    w: &WeightVector,
    basis: &BasisSet,
    game: &dyn ConvexGame,
    opts: &RegretOptions,
) -> Result<RegretReport> {
    let results: Vec<Result<PlayerRegret>> = (0..game.num_players())
        .into_par_iter()
        .map(|i| correlated_regret(i, w, basis, game, opts).map_err(|e| e.for_player(i)))
        .collect();
    let mut report = RegretReport {
        per_player: Vec::with_capacity(results.len()),
        average: 0.0,
        best_responses: Vec::with_capacity(results.len()),
        fw_gaps: Vec::with_capacity(results.len()),
        converged: true,
    };
    for r in results {
        let r = r?;
        report.per_player.push(r.regret);
        report.fw_gaps.push(r.best_response.gap);
        report.converged &= r.best_response.converged;
        report.best_responses.push(r.best_response.point);
    }
    report.average = report.per_player.iter().sum::<f64>() / report.per_player.len() as f64;
    Ok(report)
}

/// Correlated-equilibrium test: every player's regret must be at most `tol`.
pub fn verify_ce(
    basis: &BasisSet,
    w: &WeightVector,
    game: &dyn ConvexGame,
    tol: f64,
    opts: &RegretOptions,
) -> Result<CeVerdict> {
    let report = regret_report(w, basis, game, opts)?;
    let (worst_player, worst_regret) =
        report
            .per_player
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
    Ok(CeVerdict {
        is_equilibrium: worst_regret <= tol,
        worst_player,
        worst_regret,
    })
}
