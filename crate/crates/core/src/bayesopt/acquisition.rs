use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution};
use rayon::prelude::*;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::gp::GpModel;
use super::{GpHyper, GpPosterior, QueryHistory};
use crate::error::Result;
use crate::polytope::project_simplex;
use crate::regret::WeightVector;

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal is valid")
}

/// Expected improvement over `best_observed` for minimization. Zero wherever
/// the posterior is certain.
pub fn expected_improvement(post: &GpPosterior, best_observed: f64) -> f64 {
    let rho = post.variance.max(0.0).sqrt();
    if rho == 0.0 {
        return 0.0;
    }
    let gain = best_observed - post.mean;
    let z = gain / rho;
    let n = std_normal();
    (gain * n.cdf(z) + rho * n.pdf(z)).max(0.0)
}

/// Expected improvement and its gradient, given the posterior gradients.
pub fn expected_improvement_gradient(
    post: &GpPosterior,
    grad_mean: &[f64],
    grad_var: &[f64],
    best_observed: f64,
) -> (f64, Vec<f64>) {
    let rho = post.variance.max(0.0).sqrt();
    if rho == 0.0 {
        return (0.0, vec![0.0; grad_mean.len()]);
    }
    let z = (best_observed - post.mean) / rho;
    let n = std_normal();
    let (cdf, pdf) = (n.cdf(z), n.pdf(z));
    let ei = expected_improvement(post, best_observed);
    let grad = grad_mean
        .iter()
        .zip(grad_var)
        .map(|(dm, dv)| -cdf * dm + pdf * dv / (2.0 * rho))
        .collect();
    (ei, grad)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcquisitionOptions {
    pub num_candidates: usize,
    pub num_polish: usize,
    pub polish_steps: usize,
}

impl Default for AcquisitionOptions {
    fn default() -> Self {
        Self {
            num_candidates: 512,
            num_polish: 8,
            polish_steps: 50,
        }
    }
}

/// Observed outputs shifted to mean 0 and scaled to unit spread.
pub(crate) fn standardize(outputs: &[f64]) -> (Vec<f64>, f64, f64) {
    let n = outputs.len() as f64;
    let mean = outputs.iter().sum::<f64>() / n;
    let var = outputs.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n;
    let sd = if var.sqrt() > 0.0 { var.sqrt() } else { 1.0 };
    (outputs.iter().map(|y| (y - mean) / sd).collect(), mean, sd)
}

/// Fits on standardized outputs, adding diagonal jitter if the plain
/// factorization fails.
pub(crate) fn fit_standardized(history: &QueryHistory, hyper: &GpHyper) -> Result<(GpModel, Vec<f64>)> {
    let (y, _, _) = standardize(history.outputs());
    let inputs: Vec<&[f64]> = history.inputs().iter().map(|x| x.as_slice()).collect();
    let mut jitter = 0.0;
    loop {
        match GpModel::fit_with_jitter(&inputs, &y, hyper, jitter) {
            Ok(model) => return Ok((model, y)),
            Err(e) if jitter >= 1e-4 * hyper.signal_variance => return Err(e),
            Err(_) => {
                jitter = if jitter == 0.0 {
                    1e-10 * hyper.signal_variance
                } else {
                    jitter * 10.0
                };
            }
        }
    }
}

/// Maximizes expected improvement over the simplex: scores Dirichlet
/// samples, then polishes the best few by projected gradient ascent.
pub fn maximize_acquisition(
    history: &QueryHistory,
    hyper: &GpHyper,
    opts: &AcquisitionOptions,
    seed: u64,
) -> Result<WeightVector> {
    let (model, y) = fit_standardized(history, hyper)?;
    let best = y.iter().copied().fold(f64::INFINITY, f64::min);
    let n = history.dim();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let candidates: Vec<Vec<f64>> = if n == 1 {
        vec![vec![1.0]; opts.num_candidates.max(1)]
    } else {
        let dirichlet = Dirichlet::new_with_size(1.0, n).expect("flat Dirichlet is valid");
        (0..opts.num_candidates.max(1))
            .map(|_| dirichlet.sample(&mut rng))
            .collect()
    };
    let candidates: Vec<Vec<f64>> = candidates.iter().map(|c| project_simplex(c).into_vec()).collect();

    let scores: Vec<f64> = candidates
        .par_iter()
        .map(|c| model.posterior(c).map(|p| expected_improvement(&p, best)))
        .collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));

    let polished: Vec<(f64, Vec<f64>)> = order
        .iter()
        .take(opts.num_polish)
        .copied()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&idx| polish(&model, best, &candidates[idx], scores[idx], opts.polish_steps))
        .collect::<Result<_>>()?;

    let mut best_w = candidates[order[0]].clone();
    let mut best_ei = scores[order[0]];
    for (ei, w) in polished {
        if ei > best_ei {
            best_ei = ei;
            best_w = w;
        }
    }
    Ok(WeightVector::from_vec_unchecked(best_w))
}

fn polish(model: &GpModel, best: f64, start: &[f64], start_ei: f64, steps: usize) -> Result<(f64, Vec<f64>)> {
    let mut w = start.to_vec();
    let mut best_pair = (start_ei, w.clone());
    for t in 1..=steps {
        let (post, gm, gv) = model.posterior_with_gradient(&w)?;
        let (_, g) = expected_improvement_gradient(&post, &gm, &gv, best);
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            break;
        }
        let step = 0.1 / (t as f64).sqrt();
        let moved: Vec<f64> = w.iter().zip(&g).map(|(x, d)| x + step * d / norm).collect();
        w = project_simplex(&moved).into_vec();
        let ei = expected_improvement(&model.posterior(&w)?, best);
        if ei > best_pair.0 {
            best_pair = (ei, w.clone());
        }
    }
    Ok(best_pair)
}
