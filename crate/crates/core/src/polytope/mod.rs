//! Polyhedral action sets and the optimization routines that run over them.
//!
//! A [`Polyhedron`] is `{x : Ex = s, lo <= x <= hi, a.x <= gamma}` with the
//! budget row optional. Linear objectives are minimized exactly by a
//! bounded-variable revised simplex ([`solve_lp`]); smooth convex objectives
//! by away-step Frank–Wolfe ([`frank_wolfe_min`]), which calls the simplex as
//! its linear minimization oracle.

mod frank_wolfe;
mod projection;
mod simplex;
mod sparse;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub use frank_wolfe::{frank_wolfe_min, FwOptions, FwResult};
pub use projection::project_simplex;
pub use sparse::{Comparison, SparseLp};

/// Default feasibility tolerance used by callers that check LP output.
pub const TOL_FEAS: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct Polyhedron {
    eq_matrix: DMatrix<f64>,
    eq_rhs: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    budget: Option<(Vec<f64>, f64)>,
}

impl Polyhedron {
    /// `eq_matrix` may have zero rows. Lower bounds must be finite.
    pub fn new(eq_matrix: DMatrix<f64>, eq_rhs: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = lower.len();
        if upper.len() != n {
            return Err(Error::dim("polyhedron upper bounds", n, upper.len()));
        }
        if eq_matrix.ncols() != n && eq_matrix.nrows() > 0 {
            return Err(Error::dim("polyhedron equality columns", n, eq_matrix.ncols()));
        }
        if eq_matrix.nrows() != eq_rhs.len() {
            return Err(Error::dim("polyhedron equality rhs", eq_matrix.nrows(), eq_rhs.len()));
        }
        for (j, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || hi.is_nan() || lo > hi {
                return Err(Error::InvalidArgument(format!(
                    "bounds of coordinate {j} are invalid: [{lo}, {hi}]"
                )));
            }
        }
        let eq_matrix = if eq_matrix.nrows() == 0 {
            DMatrix::zeros(0, n)
        } else {
            eq_matrix
        };
        Ok(Self {
            eq_matrix,
            eq_rhs,
            lower,
            upper,
            budget: None,
        })
    }

    /// Axis-aligned box with no equality rows.
    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = lower.len();
        Self::new(DMatrix::zeros(0, n), Vec::new(), lower, upper)
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::boxed(vec![lo], vec![hi])
    }

    pub fn with_budget(mut self, coeffs: Vec<f64>, limit: f64) -> Result<Self> {
        if coeffs.len() != self.dim() {
            return Err(Error::dim("polyhedron budget row", self.dim(), coeffs.len()));
        }
        self.budget = Some((coeffs, limit));
        Ok(self)
    }

    /// The same set with the budget row dropped.
    pub fn without_budget(&self) -> Self {
        Self {
            budget: None,
            ..self.clone()
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn eq_matrix(&self) -> &DMatrix<f64> {
        &self.eq_matrix
    }

    pub fn eq_rhs(&self) -> &[f64] {
        &self.eq_rhs
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn budget(&self) -> Option<(&[f64], f64)> {
        self.budget.as_ref().map(|(a, g)| (a.as_slice(), *g))
    }

    pub fn is_bounded(&self) -> bool {
        self.upper.iter().all(|u| u.is_finite())
    }

    /// Membership test. Each residual is compared with `tol` scaled by the
    /// magnitude of the row it belongs to (floored at 1), so the same `tol`
    /// works for unit boxes and for flows in the thousands.
    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        if x.len() != self.dim() {
            return Err(Error::dim("polyhedron membership point", self.dim(), x.len()));
        }
        for (j, &xj) in x.iter().enumerate() {
            if !xj.is_finite() {
                return Ok(false);
            }
            let lo = self.lower[j];
            let hi = self.upper[j];
            if xj < lo - tol * lo.abs().max(1.0) {
                return Ok(false);
            }
            if hi.is_finite() && xj > hi + tol * hi.abs().max(1.0) {
                return Ok(false);
            }
        }
        for (r, row) in self.eq_matrix.row_iter().enumerate() {
            let mut lhs = 0.0;
            let mut mag = self.eq_rhs[r].abs();
            for (e, xj) in row.iter().zip(x) {
                lhs += e * xj;
                mag = mag.max((e * xj).abs());
            }
            if (lhs - self.eq_rhs[r]).abs() > tol * mag.max(1.0) {
                return Ok(false);
            }
        }
        if let Some((a, gamma)) = &self.budget {
            let lhs: f64 = a.iter().zip(x).map(|(ai, xi)| ai * xi).sum();
            if lhs > gamma + tol * gamma.abs().max(1.0) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Free-function form of [`Polyhedron::contains`].
pub fn contains(p: &Polyhedron, x: &[f64], tol: f64) -> Result<bool> {
    p.contains(x, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    /// Empty unless `status` is optimal.
    pub point: Vec<f64>,
    pub objective: f64,
    pub status: LpStatus,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// Returns the optimal point or an error describing the failure.
    pub fn into_point(self, what: &str) -> Result<Vec<f64>> {
        match self.status {
            LpStatus::Optimal => Ok(self.point),
            LpStatus::Infeasible => Err(Error::Infeasible(what.to_string())),
            LpStatus::Unbounded => Err(Error::Unbounded(what.to_string())),
        }
    }
}

/// Minimizes `c.x` over `p` with the bounded-variable revised simplex
/// (Bland's rule). Optimal solutions are vertices of `p`.
pub fn solve_lp(c: &[f64], p: &Polyhedron) -> Result<LpSolution> {
    let n = p.dim();
    if c.len() != n {
        return Err(Error::dim("lp cost vector", n, c.len()));
    }
    let m_eq = p.eq_matrix.nrows();
    let has_budget = p.budget.is_some();
    let rows = m_eq + usize::from(has_budget);
    let cols = n + usize::from(has_budget);

    let mut a = DMatrix::zeros(rows, cols);
    a.view_mut((0, 0), (m_eq, n)).copy_from(&p.eq_matrix);
    let mut b = p.eq_rhs.clone();
    let mut cost = c.to_vec();
    let mut lower = p.lower.clone();
    let mut upper = p.upper.clone();
    if let Some((coeffs, gamma)) = &p.budget {
        for (j, &v) in coeffs.iter().enumerate() {
            a[(m_eq, j)] = v;
        }
        a[(m_eq, n)] = 1.0;
        b.push(*gamma);
        cost.push(0.0);
        lower.push(0.0);
        upper.push(f64::INFINITY);
    }

    let outcome = simplex::BoundedSimplex::new(&a, &b, &cost, &lower, &upper).solve()?;
    Ok(match outcome {
        simplex::Outcome::Optimal(mut x) => {
            x.truncate(n);
            let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
            LpSolution {
                point: x,
                objective,
                status: LpStatus::Optimal,
            }
        }
        simplex::Outcome::Infeasible => LpSolution {
            point: Vec::new(),
            objective: f64::INFINITY,
            status: LpStatus::Infeasible,
        },
        simplex::Outcome::Unbounded => LpSolution {
            point: Vec::new(),
            objective: f64::NEG_INFINITY,
            status: LpStatus::Unbounded,
        },
    })
}
