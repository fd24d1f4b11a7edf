//! Large sparse linear programs (the basis-selection subproblems) are handed
//! to the `clarabel` interior-point solver, which handles tens of thousands
//! of variables in seconds. Solutions are accurate to about `1e-8` but need
//! not be vertices when the optimum is not unique.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};

use super::{LpSolution, LpStatus};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    Eq,
    Le,
    Ge,
}

type Row = (Vec<(usize, f64)>, Comparison, f64);

/// Minimization problem assembled row by row.
#[derive(Debug, Clone, Default)]
pub struct SparseLp {
    costs: Vec<f64>,
    bounds: Vec<(f64, f64)>,
    rows: Vec<Row>,
}

impl SparseLp {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.costs.push(cost);
        self.bounds.push((lower, upper));
        self.costs.len() - 1
    }

    pub fn add_row(&mut self, terms: Vec<(usize, f64)>, cmp: Comparison, rhs: f64) {
        self.rows.push((terms, cmp, rhs));
    }

    pub fn num_vars(&self) -> usize {
        self.costs.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn solve(&self) -> Result<LpSolution> {
        let n = self.costs.len();
        // conic form A x + s = b with s in {0}^eq x R_+^ineq
        let (mut ri, mut cj, mut v, mut b) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        let mut push_row = |terms: &[(usize, f64)], sign: f64, rhs: f64| -> Result<()> {
            let r = b.len();
            for &(j, coef) in terms {
                if j >= n {
                    return Err(Error::dim("sparse lp row", n, j + 1));
                }
                ri.push(r);
                cj.push(j);
                v.push(sign * coef);
            }
            b.push(sign * rhs);
            Ok(())
        };
        let mut num_eq = 0;
        for (terms, cmp, rhs) in &self.rows {
            if *cmp == Comparison::Eq {
                push_row(terms, 1.0, *rhs)?;
                num_eq += 1;
            }
        }
        for (terms, cmp, rhs) in &self.rows {
            match cmp {
                Comparison::Le => push_row(terms, 1.0, *rhs)?,
                Comparison::Ge => push_row(terms, -1.0, *rhs)?,
                Comparison::Eq => {}
            }
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if hi.is_finite() {
                push_row(&[(j, 1.0)], 1.0, hi)?;
            }
            if lo.is_finite() {
                push_row(&[(j, 1.0)], -1.0, lo)?;
            }
        }
        let m = b.len();
        let a = CscMatrix::new_from_triplets(m, n, ri, cj, v);
        let p = CscMatrix::<f64>::zeros((n, n));
        let cones = [
            SupportedConeT::ZeroConeT(num_eq),
            SupportedConeT::NonnegativeConeT(m - num_eq),
        ];
        let settings = DefaultSettingsBuilder::default()
            .verbose(false)
            .max_iter(500)
            .build()
            .map_err(|e| Error::LpBackend(e.to_string()))?;
        let mut solver = DefaultSolver::new(&p, &self.costs, &a, &b, &cones, settings)
            .map_err(|e| Error::LpBackend(e.to_string()))?;
        solver.solve();
        match solver.solution.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => {
                let point = solver.solution.x.clone();
                let objective = point.iter().zip(&self.costs).map(|(x, c)| x * c).sum();
                Ok(LpSolution {
                    point,
                    objective,
                    status: LpStatus::Optimal,
                })
            }
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => Ok(LpSolution {
                point: Vec::new(),
                objective: f64::INFINITY,
                status: LpStatus::Infeasible,
            }),
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => Ok(LpSolution {
                point: Vec::new(),
                objective: f64::NEG_INFINITY,
                status: LpStatus::Unbounded,
            }),
            other => Err(Error::LpBackend(format!("interior-point solver stopped: {other:?}"))),
        }
    }

    /// Solves, then repeatedly asks `separate` for rows the current optimum
    /// violates and re-solves with them added, until no rows come back or
    /// `max_rounds` is reached. Returns the solution and the number of rounds
    /// that added rows.
    pub fn solve_with_cuts<S>(&self, mut separate: S, max_rounds: usize) -> Result<(LpSolution, usize)>
    where
        S: FnMut(&[f64]) -> Vec<Row>,
    {
        let mut lp = self.clone();
        for round in 0..=max_rounds {
            let sol = lp.solve()?;
            if !sol.is_optimal() {
                return Ok((sol, round));
            }
            let cuts = separate(&sol.point);
            if cuts.is_empty() {
                return Ok((sol, round));
            }
            lp.rows.extend(cuts);
        }
        Err(Error::LpBackend(format!(
            "cutting planes still violated after {max_rounds} rounds"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lp() {
        // min -x - y  s.t. x + 2y <= 4, 3x + y <= 6, x,y >= 0  -> (1.6, 1.2)
        let mut lp = SparseLp::new();
        let x = lp.add_var(-1.0, 0.0, f64::INFINITY);
        let y = lp.add_var(-1.0, 0.0, f64::INFINITY);
        lp.add_row(vec![(x, 1.0), (y, 2.0)], Comparison::Le, 4.0);
        lp.add_row(vec![(x, 3.0), (y, 1.0)], Comparison::Le, 6.0);
        let sol = lp.solve().unwrap();
        assert!((sol.point[0] - 1.6).abs() < 1e-9);
        assert!((sol.point[1] - 1.2).abs() < 1e-9);
        assert!((sol.objective + 2.8).abs() < 1e-9);
    }

    #[test]
    fn infeasible() {
        let mut lp = SparseLp::new();
        let x = lp.add_var(1.0, 0.0, 1.0);
        lp.add_row(vec![(x, 1.0)], Comparison::Ge, 2.0);
        assert_eq!(lp.solve().unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn tangent_cuts_recover_disc() {
        // the disc x^2 + y^2 <= 1 through tangent cuts; max x + 2y -> (1, 2)/sqrt(5)
        let mut lp = SparseLp::new();
        let x = lp.add_var(-1.0, -2.0, 2.0);
        let y = lp.add_var(-2.0, -2.0, 2.0);
        let (sol, rounds) = lp
            .solve_with_cuts(
                |p| {
                    let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                    if r <= 1.0 + 1e-10 {
                        return vec![];
                    }
                    vec![(vec![(x, p[0] / r), (y, p[1] / r)], Comparison::Le, 1.0)]
                },
                500,
            )
            .unwrap();
        assert!(rounds > 0);
        assert!((sol.objective + 5f64.sqrt()).abs() < 1e-6, "{}", sol.objective);
        let mut capped = lp.clone();
        capped.add_row(vec![(x, 1.0)], Comparison::Le, -3.0);
        let (sol, _) = capped.solve_with_cuts(|_| vec![], 1).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
    }
}
