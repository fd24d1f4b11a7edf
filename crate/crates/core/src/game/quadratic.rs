use super::ConvexGame;
use crate::error::{Error, Result};
use crate::polytope::Polyhedron;

/// Game on intervals where player `i` pays
/// `(x_i - offset_i - sum_{j != i} coupling[i][j] x_j)^2`.
#[derive(Debug, Clone)]
pub struct QuadraticGame {
    offsets: Vec<f64>,
    coupling: Vec<Vec<f64>>,
    action_sets: Vec<Polyhedron>,
}

impl QuadraticGame {
    pub fn new(offsets: Vec<f64>, coupling: Vec<Vec<f64>>, lower: f64, upper: f64) -> Result<Self> {
        let m = offsets.len();
        if m == 0 {
            return Err(Error::InvalidArgument("a game needs at least one player".into()));
        }
        if coupling.len() != m {
            return Err(Error::dim("coupling rows", m, coupling.len()));
        }
        if let Some(row) = coupling.iter().find(|r| r.len() != m) {
            return Err(Error::dim("coupling columns", m, row.len()));
        }
        let set = Polyhedron::interval(lower, upper)?;
        Ok(Self {
            offsets,
            coupling,
            action_sets: vec![set; m],
        })
    }

    /// Two players on `[0, 1]`, each wanting to match the other:
    /// `f_i = (x_i - x_{-i})^2`.
    pub fn coordination() -> Self {
        Self::new(vec![0.0, 0.0], vec![vec![0.0, 1.0], vec![1.0, 0.0]], 0.0, 1.0).expect("static game data is valid")
    }

    pub fn bounds(&self) -> (f64, f64) {
        let p = &self.action_sets[0];
        (p.lower()[0], p.upper()[0])
    }

    fn target(&self, player: usize, others: &[&[f64]]) -> f64 {
        let row = &self.coupling[player];
        let mut t = self.offsets[player];
        let mut k = 0;
        for (j, c) in row.iter().enumerate() {
            if j == player {
                continue;
            }
            t += c * others[k][0];
            k += 1;
        }
        t
    }

    fn check(&self, player: usize, own: &[f64], others: &[&[f64]]) -> Result<()> {
        let m = self.offsets.len();
        if player >= m {
            return Err(Error::dim("player index", m, player + 1));
        }
        if others.len() + 1 != m {
            return Err(Error::dim("opponent count", m - 1, others.len()));
        }
        if own.len() != 1 {
            return Err(Error::dim("scalar action", 1, own.len()));
        }
        if let Some(o) = others.iter().find(|o| o.len() != 1) {
            return Err(Error::dim("scalar action", 1, o.len()));
        }
        Ok(())
    }

    /// Exact best response: the unconstrained target clipped to the interval.
    pub fn best_response(&self, player: usize, others: &[&[f64]]) -> Result<f64> {
        self.check(player, &[0.0], others)?;
        let (lo, hi) = self.bounds();
        Ok(self.target(player, others).clamp(lo, hi))
    }
}

impl ConvexGame for QuadraticGame {
    fn num_players(&self) -> usize {
        self.offsets.len()
    }

    fn action_set(&self, player: usize) -> &Polyhedron {
        &self.action_sets[player]
    }

    fn cost(&self, player: usize, own: &[f64], others: &[&[f64]]) -> Result<f64> {
        self.check(player, own, others)?;
        Ok((own[0] - self.target(player, others)).powi(2))
    }

    fn cost_gradient(&self, player: usize, own: &[f64], others: &[&[f64]]) -> Result<Vec<f64>> {
        self.check(player, own, others)?;
        Ok(vec![2.0 * (own[0] - self.target(player, others))])
    }
}
