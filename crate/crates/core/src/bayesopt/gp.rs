use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{GpHyper, GpPosterior, QueryHistory};
use crate::error::{Error, Result};

const SQRT5: f64 = 2.236_067_977_499_79;

/// Matérn covariance with smoothness 5/2 between two points.
pub fn matern52(w: &[f64], w_prime: &[f64], hyper: &GpHyper) -> Result<f64> {
    if w.len() != w_prime.len() {
        return Err(Error::dim("kernel arguments", w.len(), w_prime.len()));
    }
    Ok(matern_r(distance(w, w_prime), hyper))
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn matern_r(r: f64, hyper: &GpHyper) -> f64 {
    let a = SQRT5 * r / hyper.lengthscale;
    hyper.signal_variance * (1.0 + a + a * a / 3.0) * (-a).exp()
}

/// `(dk/dr) / r`, finite at `r = 0`.
fn matern_dr_over_r(r: f64, hyper: &GpHyper) -> f64 {
    let l = hyper.lengthscale;
    let a = SQRT5 * r / l;
    -5.0 * hyper.signal_variance / (3.0 * l * l) * (1.0 + a) * (-a).exp()
}

/// Posterior of a zero-mean GP conditioned on the raw history.
pub fn gp_posterior(history: &QueryHistory, hyper: &GpHyper, w: &[f64]) -> Result<GpPosterior> {
    let inputs: Vec<&[f64]> = history.inputs().iter().map(|x| x.as_slice()).collect();
    let model = GpModel::fit(&inputs, history.outputs(), hyper)?;
    model.posterior(w)
}

/// Factorized `K + sigma^2 I` for repeated posterior queries.
#[derive(Debug, Clone)]
pub struct GpModel {
    inputs: Vec<Vec<f64>>,
    hyper: GpHyper,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    extra_jitter: f64,
}

impl GpModel {
    pub fn fit(inputs: &[&[f64]], outputs: &[f64], hyper: &GpHyper) -> Result<Self> {
        Self::fit_with_jitter(inputs, outputs, hyper, 0.0)
    }

    /// Like [`GpModel::fit`] with `jitter` added to the diagonal on top of
    /// the noise variance.
    pub fn fit_with_jitter(inputs: &[&[f64]], outputs: &[f64], hyper: &GpHyper, jitter: f64) -> Result<Self> {
        hyper.validate()?;
        let n = inputs.len();
        if n == 0 {
            return Err(Error::InvalidArgument(
                "posterior needs at least one observation".into(),
            ));
        }
        if outputs.len() != n {
            return Err(Error::dim("history outputs", n, outputs.len()));
        }
        let dim = inputs[0].len();
        if let Some(x) = inputs.iter().find(|x| x.len() != dim) {
            return Err(Error::dim("history inputs", dim, x.len()));
        }
        let noise = hyper.noise_sigma * hyper.noise_sigma + jitter;
        let k = DMatrix::from_fn(n, n, |i, j| {
            let v = matern_r(distance(inputs[i], inputs[j]), hyper);
            if i == j {
                v + noise
            } else {
                v
            }
        });
        let chol = Cholesky::new(k).ok_or(Error::NotPositiveDefinite {
            n,
            noise: hyper.noise_sigma,
        })?;
        let alpha = chol.solve(&DVector::from_column_slice(outputs));
        Ok(Self {
            inputs: inputs.iter().map(|x| x.to_vec()).collect(),
            hyper: *hyper,
            chol,
            alpha,
            extra_jitter: jitter,
        })
    }

    pub fn jitter(&self) -> f64 {
        self.extra_jitter
    }

    fn cross_cov(&self, w: &[f64]) -> Result<DVector<f64>> {
        let dim = self.inputs[0].len();
        if w.len() != dim {
            return Err(Error::dim("query point", dim, w.len()));
        }
        Ok(DVector::from_iterator(
            self.inputs.len(),
            self.inputs.iter().map(|x| matern_r(distance(w, x), &self.hyper)),
        ))
    }

    pub fn posterior(&self, w: &[f64]) -> Result<GpPosterior> {
        let c = self.cross_cov(w)?;
        let mean = c.dot(&self.alpha);
        let v = self
            .chol
            .l()
            .solve_lower_triangular(&c)
            .expect("cholesky factor is invertible");
        let variance = (self.hyper.signal_variance - v.norm_squared()).max(0.0);
        Ok(GpPosterior { mean, variance })
    }

    /// Posterior together with the gradients of the mean and the variance.
    pub fn posterior_with_gradient(&self, w: &[f64]) -> Result<(GpPosterior, Vec<f64>, Vec<f64>)> {
        let c = self.cross_cov(w)?;
        let kinv_c = self.chol.solve(&c);
        let mean = c.dot(&self.alpha);
        let raw_var = self.hyper.signal_variance - c.dot(&kinv_c);
        let dim = w.len();
        let mut grad_mean = vec![0.0; dim];
        let mut grad_var = vec![0.0; dim];
        for (k, x) in self.inputs.iter().enumerate() {
            let s = matern_dr_over_r(distance(w, x), &self.hyper);
            for d in 0..dim {
                let dc = s * (w[d] - x[d]);
                grad_mean[d] += dc * self.alpha[k];
                grad_var[d] -= 2.0 * dc * kinv_c[k];
            }
        }
        Ok((
            GpPosterior {
                mean,
                variance: raw_var.max(0.0),
            },
            grad_mean,
            grad_var,
        ))
    }

    /// Log marginal likelihood of the fitted outputs.
    pub fn log_marginal_likelihood(&self, outputs: &[f64]) -> f64 {
        let y = DVector::from_column_slice(outputs);
        let n = outputs.len() as f64;
        let log_det: f64 = self.chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
        -0.5 * y.dot(&self.alpha) - log_det - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
    }
}
