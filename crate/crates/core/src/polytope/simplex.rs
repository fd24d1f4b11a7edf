//! Dense bounded-variable revised simplex.
//!
//! Solves `min c.x  s.t.  A x = b,  lo <= x <= hi` (lower bounds finite,
//! upper bounds possibly infinite) with a two-phase method. Phase one starts
//! from an all-artificial basis. Pricing and the ratio test both follow
//! Bland's smallest-index rule, so pivots are deterministic and cannot cycle.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 64;

pub(crate) enum Outcome {
    Optimal(Vec<f64>),
    Infeasible,
    Unbounded,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
}

enum Step {
    Optimal,
    Unbounded,
    Moved,
}

pub(crate) struct BoundedSimplex<'a> {
    a: &'a DMatrix<f64>,
    b: &'a [f64],
    cost: &'a [f64],
    n: usize,
    m: usize,
    /// Column sign of each artificial variable.
    art_sign: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    binv: DMatrix<f64>,
    pivots: usize,
    max_pivots: usize,
    dual_tol: f64,
}

impl<'a> BoundedSimplex<'a> {
    pub(crate) fn new(a: &'a DMatrix<f64>, b: &'a [f64], cost: &'a [f64], lower: &[f64], upper: &[f64]) -> Self {
        let (m, n) = a.shape();
        let mut lo = lower.to_vec();
        let mut hi = upper.to_vec();
        lo.extend(std::iter::repeat_n(0.0, m));
        hi.extend(std::iter::repeat_n(f64::INFINITY, m));
        let cmax = cost.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        Self {
            a,
            b,
            cost,
            n,
            m,
            art_sign: vec![1.0; m],
            lower: lo,
            upper: hi,
            x: vec![0.0; n + m],
            state: vec![VarState::AtLower; n + m],
            basis: Vec::with_capacity(m),
            binv: DMatrix::identity(m, m),
            pivots: 0,
            max_pivots: 50 * (n + m) + 1000,
            dual_tol: 1e-9 * cmax.max(1.0),
        }
    }

    fn column(&self, j: usize) -> DVector<f64> {
        if j < self.n {
            self.a.column(j).into_owned()
        } else {
            let mut col = DVector::zeros(self.m);
            col[j - self.n] = self.art_sign[j - self.n];
            col
        }
    }

    fn column_dot(&self, j: usize, y: &DVector<f64>) -> f64 {
        if j < self.n {
            self.a.column(j).dot(y)
        } else {
            self.art_sign[j - self.n] * y[j - self.n]
        }
    }

    pub(crate) fn solve(mut self) -> Result<Outcome> {
        let (m, n) = (self.m, self.n);
        for j in 0..n {
            self.x[j] = self.lower[j];
            self.state[j] = VarState::AtLower;
        }
        let mut resid: Vec<f64> = self.b.to_vec();
        for j in 0..n {
            if self.x[j] != 0.0 {
                for (i, r) in resid.iter_mut().enumerate() {
                    *r -= self.a[(i, j)] * self.x[j];
                }
            }
        }
        for (i, r) in resid.iter().enumerate() {
            self.art_sign[i] = if *r < 0.0 { -1.0 } else { 1.0 };
            self.x[n + i] = r.abs();
            self.state[n + i] = VarState::Basic(i);
            self.basis.push(n + i);
        }
        self.binv = DMatrix::from_diagonal(&DVector::from_vec(self.art_sign.clone()));

        // phase one: minimize the sum of artificials
        let phase_one: Vec<f64> = (0..n + m).map(|j| if j < n { 0.0 } else { 1.0 }).collect();
        let saved_tol = self.dual_tol;
        self.dual_tol = 1e-11;
        loop {
            match self.iterate(&phase_one)? {
                Step::Optimal => break,
                Step::Moved => {}
                Step::Unbounded => unreachable!("phase one objective is bounded below"),
            }
        }
        self.dual_tol = saved_tol;
        let bmax = self.b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let infeas: f64 = (n..n + m).map(|j| self.x[j]).sum();
        if infeas > 1e-9 * bmax.max(1.0) {
            return Ok(Outcome::Infeasible);
        }

        // artificials may no longer move off zero
        for j in n..n + m {
            self.upper[j] = 0.0;
            if !matches!(self.state[j], VarState::Basic(_)) {
                self.x[j] = 0.0;
                self.state[j] = VarState::AtLower;
            }
        }
        self.drive_out_artificials();

        let mut phase_two = self.cost.to_vec();
        phase_two.extend(std::iter::repeat_n(0.0, m));
        loop {
            match self.iterate(&phase_two)? {
                Step::Optimal => break,
                Step::Moved => {}
                Step::Unbounded => return Ok(Outcome::Unbounded),
            }
        }
        self.refactor();
        let mut x = self.x[..n].to_vec();
        // nonbasic coordinates sit exactly on their bounds; clip tiny drift of basic ones
        for (j, v) in x.iter_mut().enumerate() {
            if *v < self.lower[j] {
                *v = self.lower[j];
            }
            if *v > self.upper[j] {
                *v = self.upper[j];
            }
        }
        Ok(Outcome::Optimal(x))
    }

    /// Pivots basic artificials out of the basis where a structural column
    /// can replace them; remaining ones mark redundant equality rows.
    fn drive_out_artificials(&mut self) {
        for r in 0..self.m {
            let bv = self.basis[r];
            if bv < self.n {
                continue;
            }
            let row = self.binv.row(r).transpose();
            let entering = (0..self.n)
                .find(|&j| !matches!(self.state[j], VarState::Basic(_)) && self.column_dot(j, &row).abs() > 1e-7);
            if let Some(j) = entering {
                let alpha = &self.binv * self.column(j);
                self.state[bv] = VarState::AtLower;
                self.x[bv] = 0.0;
                self.pivot(r, j, &alpha);
            }
        }
    }

    fn iterate(&mut self, cost: &[f64]) -> Result<Step> {
        if self.pivots >= self.max_pivots {
            return Err(Error::NumericalDegeneracy { pivots: self.pivots });
        }
        let cb = DVector::from_iterator(self.m, self.basis.iter().map(|&j| cost[j]));
        let y = self.binv.tr_mul(&cb);

        let mut entering = None;
        for j in 0..self.n + self.m {
            let st = self.state[j];
            if matches!(st, VarState::Basic(_)) || self.upper[j] <= self.lower[j] {
                continue;
            }
            let d = cost[j] - self.column_dot(j, &y);
            let improving = match st {
                VarState::AtLower => d < -self.dual_tol,
                VarState::AtUpper => d > self.dual_tol,
                VarState::Basic(_) => false,
            };
            if improving {
                entering = Some(j);
                break;
            }
        }
        let Some(j) = entering else {
            return Ok(Step::Optimal);
        };
        let dir = if self.state[j] == VarState::AtLower { 1.0 } else { -1.0 };
        let alpha = &self.binv * self.column(j);

        let mut best: Option<(f64, usize)> = None;
        for i in 0..self.m {
            let rate = dir * alpha[i];
            let bv = self.basis[i];
            let limit = if rate > PIVOT_TOL {
                ((self.x[bv] - self.lower[bv]) / rate).max(0.0)
            } else if rate < -PIVOT_TOL && self.upper[bv].is_finite() {
                ((self.upper[bv] - self.x[bv]) / -rate).max(0.0)
            } else {
                continue;
            };
            best = match best {
                None => Some((limit, i)),
                Some((bl, bi)) => {
                    let tie = (limit - bl).abs() <= 1e-12 * (1.0 + bl.abs());
                    if limit < bl && !tie || tie && bv < self.basis[bi] {
                        Some((limit, i))
                    } else {
                        Some((bl, bi))
                    }
                }
            };
        }
        let flip = self.upper[j] - self.lower[j];

        match best {
            None if !flip.is_finite() => Ok(Step::Unbounded),
            Some((theta, _)) if flip <= theta => {
                self.bound_flip(j, dir, flip, &alpha);
                Ok(Step::Moved)
            }
            None => {
                self.bound_flip(j, dir, flip, &alpha);
                Ok(Step::Moved)
            }
            Some((theta, r)) => {
                self.move_along(j, dir, theta, &alpha);
                let leaving = self.basis[r];
                let rate = dir * alpha[r];
                if rate > 0.0 {
                    self.x[leaving] = self.lower[leaving];
                    self.state[leaving] = VarState::AtLower;
                } else {
                    self.x[leaving] = self.upper[leaving];
                    self.state[leaving] = VarState::AtUpper;
                }
                self.pivot(r, j, &alpha);
                Ok(Step::Moved)
            }
        }
    }

    fn move_along(&mut self, j: usize, dir: f64, theta: f64, alpha: &DVector<f64>) {
        if theta == 0.0 {
            return;
        }
        self.x[j] += dir * theta;
        for i in 0..self.m {
            let bv = self.basis[i];
            self.x[bv] -= dir * theta * alpha[i];
        }
    }

    fn bound_flip(&mut self, j: usize, dir: f64, flip: f64, alpha: &DVector<f64>) {
        self.move_along(j, dir, flip, alpha);
        if dir > 0.0 {
            self.x[j] = self.upper[j];
            self.state[j] = VarState::AtUpper;
        } else {
            self.x[j] = self.lower[j];
            self.state[j] = VarState::AtLower;
        }
        self.pivots += 1;
    }

    fn pivot(&mut self, r: usize, j: usize, alpha: &DVector<f64>) {
        let piv = alpha[r];
        let m = self.m;
        for c in 0..m {
            self.binv[(r, c)] /= piv;
        }
        for i in 0..m {
            if i == r || alpha[i] == 0.0 {
                continue;
            }
            let f = alpha[i];
            for c in 0..m {
                let v = self.binv[(r, c)];
                self.binv[(i, c)] -= f * v;
            }
        }
        self.basis[r] = j;
        self.state[j] = VarState::Basic(r);
        self.pivots += 1;
        if self.pivots.is_multiple_of(REFACTOR_EVERY) {
            self.refactor();
        }
    }

    /// Recomputes the basis inverse and basic values from scratch.
    fn refactor(&mut self) {
        let mut bmat = DMatrix::zeros(self.m, self.m);
        for (i, &bv) in self.basis.iter().enumerate() {
            bmat.set_column(i, &self.column(bv));
        }
        if let Some(inv) = bmat.try_inverse() {
            self.binv = inv;
        }
        let mut rhs = DVector::from_column_slice(self.b);
        for j in 0..self.n + self.m {
            if matches!(self.state[j], VarState::Basic(_)) || self.x[j] == 0.0 {
                continue;
            }
            rhs -= self.column(j) * self.x[j];
        }
        let xb = &self.binv * rhs;
        for (i, &bv) in self.basis.iter().enumerate() {
            self.x[bv] = xb[i];
        }
    }
}
