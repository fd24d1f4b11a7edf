use super::{solve_lp, Polyhedron};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FwOptions {
    /// Stopping threshold for the Frank–Wolfe gap.
    pub tol_gap: f64,
    /// Interpret `tol_gap` as a fraction of the gap at the first iterate.
    pub relative: bool,
    pub max_iter: usize,
}

impl Default for FwOptions {
    fn default() -> Self {
        Self {
            tol_gap: 1e-6,
            relative: true,
            max_iter: 2000,
        }
    }
}

impl FwOptions {
    pub fn absolute(tol_gap: f64, max_iter: usize) -> Self {
        Self {
            tol_gap,
            relative: false,
            max_iter,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FwResult {
    pub point: Vec<f64>,
    pub value: f64,
    /// Frank–Wolfe gap at `point`; an upper bound on `value - min f`.
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes a convex differentiable `f` over a bounded polyhedron with
/// away-step Frank–Wolfe and exact line search.
///
/// `f` returns the value and gradient at a point. The iterate is kept as a
/// convex combination of simplex vertices, so it stays feasible up to
/// rounding. Hitting `max_iter` is not an error: the result carries the final
/// gap and `converged == false`.
pub fn frank_wolfe_min<F>(f: F, p: &Polyhedron, opts: &FwOptions) -> Result<FwResult>
where
    F: Fn(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    if !p.is_bounded() {
        return Err(Error::InvalidArgument("frank-wolfe needs a bounded polyhedron".into()));
    }
    let oracle = |g: &[f64]| -> Result<Vec<f64>> { solve_lp(g, p)?.into_point("frank-wolfe linear oracle") };

    let (_, g0) = f(p.lower())?;
    let first = oracle(&g0)?;
    let mut x = first.clone();
    let mut atoms: Vec<(Vec<f64>, f64)> = vec![(first, 1.0)];
    let mut threshold = if opts.relative { f64::NAN } else { opts.tol_gap };

    let mut iter = 0;
    loop {
        let (value, grad) = f(&x)?;
        let s = oracle(&grad)?;
        let gx = dot(&grad, &x);
        let gap = (gx - dot(&grad, &s)).max(0.0);
        if threshold.is_nan() {
            threshold = opts.tol_gap * gap;
        }
        if gap <= threshold || iter >= opts.max_iter {
            return Ok(FwResult {
                point: x,
                value,
                gap,
                iterations: iter,
                converged: gap <= threshold,
            });
        }
        iter += 1;

        let (away_idx, away_val) =
            atoms
                .iter()
                .enumerate()
                .map(|(k, (v, _))| (k, dot(&grad, v)))
                .fold(
                    (0, f64::NEG_INFINITY),
                    |best, cur| {
                        if cur.1 > best.1 {
                            cur
                        } else {
                            best
                        }
                    },
                );
        let away_gap = away_val - gx;

        let fw_step = gap >= away_gap || atoms.len() == 1;
        let (dir, gamma_max): (Vec<f64>, f64) = if fw_step {
            (s.iter().zip(&x).map(|(si, xi)| si - xi).collect(), 1.0)
        } else {
            let alpha = atoms[away_idx].1;
            let d = x.iter().zip(&atoms[away_idx].0).map(|(xi, vi)| xi - vi).collect();
            (d, alpha / (1.0 - alpha))
        };

        let gamma = line_search(&f, p, &x, &dir, dot(&grad, &dir), gamma_max)?;
        if gamma <= 0.0 {
            // no descent possible along the chosen direction at machine precision
            return Ok(FwResult {
                point: x,
                value,
                gap,
                iterations: iter,
                converged: gap <= threshold,
            });
        }

        if fw_step {
            if gamma >= 1.0 {
                atoms.clear();
                atoms.push((s, 1.0));
            } else {
                atoms.iter_mut().for_each(|(_, a)| *a *= 1.0 - gamma);
                match atoms.iter_mut().find(|(v, _)| *v == s) {
                    Some((_, a)) => *a += gamma,
                    None => atoms.push((s, gamma)),
                }
            }
        } else {
            atoms.iter_mut().for_each(|(_, a)| *a *= 1.0 + gamma);
            if gamma >= gamma_max {
                atoms.remove(away_idx);
            } else {
                atoms[away_idx].1 -= gamma;
            }
        }
        atoms.retain(|(_, a)| *a > 0.0);

        if iter % 50 == 0 || atoms.len() == 1 {
            let total: f64 = atoms.iter().map(|(_, a)| a).sum();
            x.iter_mut().for_each(|xi| *xi = 0.0);
            for (v, a) in &atoms {
                for (xi, vi) in x.iter_mut().zip(v) {
                    *xi += a / total * vi;
                }
            }
        } else {
            for (xi, di) in x.iter_mut().zip(&dir) {
                *xi += gamma * di;
            }
        }
        clip(p, &mut x);
    }
}

/// Removes rounding excursions outside the variable bounds.
fn clip(p: &Polyhedron, x: &mut [f64]) {
    for ((xi, lo), hi) in x.iter_mut().zip(p.lower()).zip(p.upper()) {
        *xi = xi.clamp(*lo, *hi);
    }
}

/// Exact line search on `[0, gamma_max]` for a convex function: finds the
/// root of the directional derivative by Illinois-style regula falsi.
fn line_search<F>(f: &F, p: &Polyhedron, x: &[f64], dir: &[f64], slope0: f64, gamma_max: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    if slope0 >= 0.0 {
        return Ok(0.0);
    }
    let slope = |t: f64| -> Result<f64> {
        let mut y: Vec<f64> = x.iter().zip(dir).map(|(xi, di)| xi + t * di).collect();
        clip(p, &mut y);
        let (_, g) = f(&y)?;
        Ok(dot(&g, dir))
    };
    let smax = slope(gamma_max)?;
    if smax <= 0.0 {
        return Ok(gamma_max);
    }
    let (mut lo, mut flo) = (0.0, slope0);
    let (mut hi, mut fhi) = (gamma_max, smax);
    let mut side = 0i8;
    let mut t = lo;
    for _ in 0..200 {
        t = (lo * fhi - hi * flo) / (fhi - flo);
        if !(t > lo && t < hi) {
            t = 0.5 * (lo + hi);
        }
        let ft = slope(t)?;
        if ft == 0.0 || hi - lo <= 1e-15 * gamma_max {
            break;
        }
        if ft < 0.0 {
            lo = t;
            flo = ft;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = t;
            fhi = ft;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
        if ft.abs() <= 1e-13 * slope0.abs() {
            break;
        }
    }
    Ok(t)
}
