//! Convex-concave procedure for the max-min pairwise distance program.
//!
//! With `P` the ordered pairs of basis indices, the program
//! `max min_{(i,j) in P} |x^i - x^j|_1` is rewritten with a slack `s` as
//!
//! ```text
//! max  -s + sum_{(i,j) in P} |x^i - x^j|_1
//! s.t. x^k in X                                       for all k
//!      sum_{(p,q) in P \ {(i,j)}} |x^p - x^q|_1 <= s   for all (i,j) in P
//! ```
//!
//! The objective is convex, so each iteration replaces
//! it with its linearization at the current basis and solves the remaining
//! LP exactly, keeping the convex constraints via epigraph variables.

use super::{min_pairwise_distance, random_basis, Psi};
use crate::error::{Error, Result};
use crate::game::ConvexGame;
use crate::polytope::{Comparison, SparseLp};
use crate::regret::BasisSet;

const CUT_TOL: f64 = 1e-7;
const MAX_CUT_ROUNDS: usize = 200;

/// How the convex distance constraints of each subproblem are represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CcpFormulation {
    /// Split every coordinate difference into positive and negative parts.
    #[default]
    Epigraph,
    /// Add sign-vector cuts `T >= sigma . (x^i - x^j)` only where violated,
    /// re-solving after each round. Same optimum; only practical for small
    /// problems.
    CuttingPlane,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcpOptions {
    pub max_iter: usize,
    /// Stop when the objective improves by less than `tol_obj * (1 + |obj|)`.
    pub tol_obj: f64,
    /// Seed of the random basis the procedure starts from.
    pub seed: u64,
    pub formulation: CcpFormulation,
}

impl Default for CcpOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol_obj: 1e-6,
            seed: 0,
            formulation: CcpFormulation::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CcpTrace {
    /// Basis and its min pairwise distance, starting with the initial basis.
    pub iterates: Vec<(BasisSet, f64)>,
    pub converged: bool,
    pub iterations: usize,
}

impl CcpTrace {
    pub fn objectives(&self) -> Vec<f64> {
        self.iterates.iter().map(|(_, v)| *v).collect()
    }
}

pub fn ccp_select(game: &dyn ConvexGame, n: usize, psi: Psi, opts: &CcpOptions) -> Result<(BasisSet, CcpTrace)> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "basis size must be at least 2, got {n}"
        )));
    }
    if psi != Psi::L1 {
        return Err(Error::InvalidArgument(
            "the convex-concave procedure is implemented for the l1 distance only".into(),
        ));
    }
    for i in 0..game.num_players() {
        if !game.action_set(i).is_bounded() {
            return Err(Error::InvalidArgument(format!(
                "action set of player {} is unbounded",
                i + 1
            )));
        }
    }

    let start = random_basis(game, n, opts.seed)?;
    let start_obj = min_pairwise_distance(&start, psi)?;
    let mut trace = CcpTrace {
        iterates: vec![(start, start_obj)],
        converged: false,
        iterations: 0,
    };
    let program = CcpProgram::new(game, n, opts.formulation);

    while trace.iterations < opts.max_iter {
        let (current, current_obj) = trace.iterates.last().expect("trace starts non-empty");
        let next = program.step(current)?;
        let next_obj = min_pairwise_distance(&next, psi)?;
        trace.iterations += 1;
        let improvement = next_obj - current_obj;
        if improvement < 0.0 {
            // stationary up to LP round-off; keep the better iterate
            trace.converged = true;
            break;
        }
        let small = improvement < opts.tol_obj * (1.0 + current_obj.abs());
        trace.iterates.push((next, next_obj));
        if small {
            trace.converged = true;
            break;
        }
    }
    let best = trace.iterates.last().expect("trace starts non-empty").0.clone();
    Ok((best, trace))
}

struct CcpProgram<'a> {
    game: &'a dyn ConvexGame,
    n: usize,
    dims: Vec<usize>,
    offsets: Vec<usize>,
    total_dim: usize,
    scale: f64,
    formulation: CcpFormulation,
}

impl<'a> CcpProgram<'a> {
    fn new(game: &'a dyn ConvexGame, n: usize, formulation: CcpFormulation) -> Self {
        let dims = game.action_dims();
        let mut offsets = Vec::with_capacity(dims.len());
        let mut acc = 0;
        for d in &dims {
            offsets.push(acc);
            acc += d;
        }
        // one global scale keeps the l1 geometry while bringing flows to O(1)
        let mut scale = 0.0f64;
        for i in 0..dims.len() {
            let set = game.action_set(i);
            for v in set.upper().iter().chain(set.lower()).chain(set.eq_rhs()) {
                if v.is_finite() {
                    scale = scale.max(v.abs());
                }
            }
        }
        if scale == 0.0 {
            scale = 1.0;
        }
        Self {
            game,
            n,
            dims,
            offsets,
            total_dim: acc,
            scale,
            formulation,
        }
    }

    fn coordinate_fixed(&self, c: usize) -> bool {
        let i = self.offsets.iter().rposition(|&o| o <= c).expect("offset 0 exists");
        let set = self.game.action_set(i);
        let local = c - self.offsets[i];
        set.lower()[local] == set.upper()[local]
    }

    /// Solves the linearized program at `current` and returns its basis part.
    fn step(&self, current: &BasisSet) -> Result<BasisSet> {
        let n = self.n;
        let d = self.total_dim;
        let flat: Vec<Vec<f64>> = (0..n).map(|k| current.flattened(k)).collect();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();

        // linearized objective: 2 * sum_{i<j} g_ij . (x^i - x^j) with g the sign
        // pattern of x^i - x^j at the current basis, zeros taken as +1
        let mut lin = vec![vec![0.0; d]; n];
        for &(i, j) in &pairs {
            for c in 0..d {
                let g = if flat[i][c] - flat[j][c] < 0.0 { -1.0 } else { 1.0 };
                lin[i][c] += 2.0 * g;
                lin[j][c] -= 2.0 * g;
            }
        }

        let mut lp = SparseLp::new();
        let mut xv = vec![vec![0usize; d]; n];
        for k in 0..n {
            for (i, &off) in self.offsets.iter().enumerate() {
                let set = self.game.action_set(i);
                for local in 0..self.dims[i] {
                    let c = off + local;
                    xv[k][c] = lp.add_var(
                        -lin[k][c],
                        set.lower()[local] / self.scale,
                        set.upper()[local] / self.scale,
                    );
                }
                for (r, row) in set.eq_matrix().row_iter().enumerate() {
                    let terms = row
                        .iter()
                        .enumerate()
                        .filter(|(_, v)| **v != 0.0)
                        .map(|(local, v)| (xv[k][off + local], *v))
                        .collect();
                    lp.add_row(terms, Comparison::Eq, set.eq_rhs()[r] / self.scale);
                }
                if let Some((coeffs, gamma)) = set.budget() {
                    let terms = coeffs
                        .iter()
                        .enumerate()
                        .filter(|(_, v)| **v != 0.0)
                        .map(|(local, v)| (xv[k][off + local], *v))
                        .collect();
                    lp.add_row(terms, Comparison::Le, gamma / self.scale);
                }
            }
        }

        let free: Vec<usize> = (0..d).filter(|&c| !self.coordinate_fixed(c)).collect();
        let slack = lp.add_var(1.0, f64::NEG_INFINITY, f64::INFINITY);
        let pair_totals: Vec<usize> = pairs.iter().map(|_| lp.add_var(0.0, 0.0, f64::INFINITY)).collect();
        // sum over ordered pairs except (i,j) = 2 * sum_unordered - |x^i - x^j|
        for q in 0..pairs.len() {
            let mut terms: Vec<(usize, f64)> = pair_totals
                .iter()
                .enumerate()
                .map(|(p, &t)| (t, if p == q { 1.0 } else { 2.0 }))
                .collect();
            terms.push((slack, -1.0));
            lp.add_row(terms, Comparison::Le, 0.0);
        }

        let sol = match self.formulation {
            CcpFormulation::Epigraph => {
                for (&(i, j), &total) in pairs.iter().zip(&pair_totals) {
                    let mut sum_terms = vec![(total, -1.0)];
                    for &c in &free {
                        let up = lp.add_var(0.0, 0.0, f64::INFINITY);
                        let down = lp.add_var(0.0, 0.0, f64::INFINITY);
                        lp.add_row(
                            vec![(xv[i][c], 1.0), (xv[j][c], -1.0), (up, -1.0), (down, 1.0)],
                            Comparison::Eq,
                            0.0,
                        );
                        sum_terms.push((up, 1.0));
                        sum_terms.push((down, 1.0));
                    }
                    lp.add_row(sum_terms, Comparison::Eq, 0.0);
                }
                lp.solve()?
            }
            CcpFormulation::CuttingPlane => {
                // T_p >= sigma . (x^i - x^j) for sign vectors sigma; the l1 norm is
                // their maximum, so rows are added only where the norm is violated
                let cut = |i: usize, j: usize, total: usize, sigma: &dyn Fn(usize) -> f64| {
                    let mut terms = vec![(total, 1.0)];
                    for &c in &free {
                        let sc = sigma(c);
                        if sc != 0.0 {
                            terms.push((xv[i][c], -sc));
                            terms.push((xv[j][c], sc));
                        }
                    }
                    (terms, Comparison::Ge, 0.0)
                };
                for (&(i, j), &total) in pairs.iter().zip(&pair_totals) {
                    let (terms, cmp, rhs) =
                        cut(i, j, total, &|c| if flat[i][c] - flat[j][c] < 0.0 { -1.0 } else { 1.0 });
                    lp.add_row(terms, cmp, rhs);
                }
                let separate = |point: &[f64]| {
                    let mut rows = Vec::new();
                    for (&(i, j), &total) in pairs.iter().zip(&pair_totals) {
                        let diff = |c: usize| point[xv[i][c]] - point[xv[j][c]];
                        let norm: f64 = free.iter().map(|&c| diff(c).abs()).sum();
                        if norm - point[total] > CUT_TOL * (1.0 + norm) {
                            rows.push(cut(i, j, total, &|c| sign(diff(c))));
                        }
                    }
                    rows
                };
                lp.solve_with_cuts(separate, MAX_CUT_ROUNDS)?.0
            }
        };
        let sol = sol.into_point("convex-concave subproblem")?;
        let actions = (0..n)
            .map(|k| {
                (0..self.dims.len())
                    .map(|i| {
                        let set = self.game.action_set(i);
                        (0..self.dims[i])
                            .map(|local| {
                                let v = sol[xv[k][self.offsets[i] + local]] * self.scale;
                                v.clamp(set.lower()[local], set.upper()[local])
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        BasisSet::new(actions)
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}
