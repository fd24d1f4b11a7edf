//! Convex games: each player minimizes a cost that is convex in its own
//! action over a closed convex polyhedral action set.

mod quadratic;
mod traffic;

use crate::error::Result;
use crate::polytope::Polyhedron;

pub use quadratic::QuadraticGame;
pub use traffic::{build_traffic_game, demand_vector, PlayerSpec, TrafficGame, DEFAULT_BUDGET_FACTOR};

/// A game with `num_players` players. `others` always lists the opponents'
/// actions in player order with `player` itself skipped.
pub trait ConvexGame: Send + Sync {
    fn num_players(&self) -> usize;

    fn action_set(&self, player: usize) -> &Polyhedron;

    fn cost(&self, player: usize, own: &[f64], others: &[&[f64]]) -> Result<f64>;

    /// Gradient of `cost` with respect to `own`.
    fn cost_gradient(&self, player: usize, own: &[f64], others: &[&[f64]]) -> Result<Vec<f64>>;

    fn action_dims(&self) -> Vec<usize> {
        (0..self.num_players()).map(|i| self.action_set(i).dim()).collect()
    }
}

/// Splits a joint action into player `i`'s part and everyone else's.
pub fn split_joint(joint: &[Vec<f64>], player: usize) -> (&[f64], Vec<&[f64]>) {
    let others = joint
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != player)
        .map(|(_, x)| x.as_slice())
        .collect();
    (joint[player].as_slice(), others)
}
