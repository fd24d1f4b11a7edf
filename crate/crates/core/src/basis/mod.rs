//! Choosing the basis joint actions that support the learned distribution.
//!
//! [`ccp_select`] spreads `N` joint actions apart by maximizing their minimum
//! pairwise distance with the convex-concave procedure; [`random_basis`] is
//! the baseline that minimizes random linear objectives.

mod ccp;
mod io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::ConvexGame;
use crate::polytope::solve_lp;
use crate::regret::BasisSet;

pub use ccp::{ccp_select, CcpFormulation, CcpOptions, CcpTrace};
pub use io::{read_basis, write_basis};

/// Default basis sizes for two- and four-player studies.
pub const DEFAULT_N_TWO_PLAYERS: usize = 10;
pub const DEFAULT_N_FOUR_PLAYERS: usize = 15;

/// Distance between two joint actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Psi {
    #[default]
    L1,
    SquaredL2,
}

impl Psi {
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Psi::L1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            Psi::SquaredL2 => a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum(),
        }
    }
}

/// Smallest distance between two distinct members of the basis.
pub fn min_pairwise_distance(basis: &BasisSet, psi: Psi) -> Result<f64> {
    let n = basis.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "pairwise distance needs at least 2 joint actions, got {n}"
        )));
    }
    let flat: Vec<Vec<f64>> = (0..n).map(|k| basis.flattened(k)).collect();
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            best = best.min(psi.eval(&flat[i], &flat[j]));
        }
    }
    Ok(best)
}

/// Each joint action minimizes, player by player, a linear objective with
/// coefficients drawn uniformly from `[0, 1]`.
pub fn random_basis(game: &dyn ConvexGame, n: usize, seed: u64) -> Result<BasisSet> {
    if n == 0 {
        return Err(Error::InvalidArgument("basis size must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut actions = Vec::with_capacity(n);
    for _ in 0..n {
        let mut joint = Vec::with_capacity(game.num_players());
        for i in 0..game.num_players() {
            let set = game.action_set(i);
            let c: Vec<f64> = (0..set.dim()).map(|_| rng.gen::<f64>()).collect();
            let x = solve_lp(&c, set)?
                .into_point("random basis action")
                .map_err(|e| e.for_player(i))?;
            joint.push(x);
        }
        actions.push(joint);
    }
    BasisSet::new(actions)
}
