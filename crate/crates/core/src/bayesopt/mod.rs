//! Bayesian optimization of the average regret over the probability simplex.
//!
//! A zero-mean Gaussian process with a Matérn-5/2 kernel models the regret as
//! a function of the weights; each new query maximizes expected improvement.

mod acquisition;
mod gp;

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution};

use crate::error::{Error, Result};
use crate::regret::WeightVector;

pub use acquisition::{expected_improvement, expected_improvement_gradient, maximize_acquisition, AcquisitionOptions};
pub use gp::{gp_posterior, matern52, GpModel};

/// Lengthscales tried when refitting by marginal likelihood.
pub const LENGTHSCALE_GRID: [f64; 5] = [0.1, 0.2, 0.5, 1.0, 2.0];
const REFIT_EVERY: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpHyper {
    pub lengthscale: f64,
    pub signal_variance: f64,
    /// Observation noise standard deviation.
    pub noise_sigma: f64,
}

impl Default for GpHyper {
    fn default() -> Self {
        Self {
            lengthscale: 0.5,
            signal_variance: 1.0,
            noise_sigma: 1e-6,
        }
    }
}

impl GpHyper {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lengthscale > 0.0
            && self.signal_variance > 0.0
            && self.noise_sigma >= 0.0
            && self.lengthscale.is_finite()
            && self.signal_variance.is_finite()
            && self.noise_sigma.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid GP hyperparameters {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpPosterior {
    pub mean: f64,
    pub variance: f64,
}

/// Queried weight vectors and the values observed at them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueryHistory {
    inputs: Vec<WeightVector>,
    outputs: Vec<f64>,
}

impl QueryHistory {
    pub fn new(inputs: Vec<WeightVector>, outputs: Vec<f64>) -> Result<Self> {
        if inputs.len() != outputs.len() {
            return Err(Error::dim("history outputs", inputs.len(), outputs.len()));
        }
        if let Some(w) = inputs.first() {
            if let Some(bad) = inputs.iter().find(|x| x.len() != w.len()) {
                return Err(Error::dim("history inputs", w.len(), bad.len()));
            }
        }
        Ok(Self { inputs, outputs })
    }

    pub fn push(&mut self, w: WeightVector, value: f64) -> Result<()> {
        if let Some(first) = self.inputs.first() {
            if first.len() != w.len() {
                return Err(Error::dim("history inputs", first.len(), w.len()));
            }
        }
        self.inputs.push(w);
        self.outputs.push(value);
        Ok(())
    }

    pub fn inputs(&self) -> &[WeightVector] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Dimension of the weight vectors, 0 when empty.
    pub fn dim(&self) -> usize {
        self.inputs.first().map_or(0, |w| w.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnRow {
    /// 1-based query count.
    pub iteration: usize,
    pub w: Vec<f64>,
    pub value: f64,
    /// Lowest value observed up to and including this query.
    pub incumbent: f64,
    /// 0-based index of the query holding the incumbent.
    pub incumbent_query: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LearnTrace {
    pub rows: Vec<LearnRow>,
}

impl LearnTrace {
    pub fn incumbent_values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.incumbent).collect()
    }

    pub fn to_csv(&self) -> String {
        let n = self.rows.first().map_or(0, |r| r.w.len());
        let mut out = String::from("iteration");
        for k in 1..=n {
            let _ = write!(out, ",w{k}");
        }
        out.push_str(",value,incumbent\n");
        for row in &self.rows {
            let _ = write!(out, "{}", row.iteration);
            for v in &row.w {
                let _ = write!(out, ",{v:?}");
            }
            let _ = writeln!(out, ",{:?},{:?}", row.value, row.incumbent);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoOptions {
    /// Total number of oracle queries, initial design included.
    pub budget: usize,
    pub n_init: usize,
    pub hyper: GpHyper,
    pub refit_lengthscale: bool,
    pub acquisition: AcquisitionOptions,
    pub seed: u64,
}

impl Default for BoOptions {
    fn default() -> Self {
        Self {
            budget: 100,
            n_init: 5,
            hyper: GpHyper::default(),
            refit_lengthscale: true,
            acquisition: AcquisitionOptions::default(),
            seed: 0,
        }
    }
}

/// Lengthscale from [`LENGTHSCALE_GRID`] with the highest marginal likelihood
/// on the standardized history; ties keep the earlier entry.
pub fn refit_lengthscale(history: &QueryHistory, hyper: &GpHyper) -> Result<GpHyper> {
    let mut best = (*hyper, f64::NEG_INFINITY);
    for &l in &LENGTHSCALE_GRID {
        let trial = GpHyper {
            lengthscale: l,
            ..*hyper
        };
        let Ok((model, y)) = acquisition::fit_standardized(history, &trial) else {
            continue;
        };
        let lml = model.log_marginal_likelihood(&y);
        if lml > best.1 {
            best = (trial, lml);
        }
    }
    Ok(best.0)
}

/// Sequentially queries `oracle` over the `n`-simplex and returns the
/// weights with the lowest observed value together with the full trace.
pub fn bo_learn<F>(mut oracle: F, n: usize, opts: &BoOptions) -> Result<(WeightVector, LearnTrace)>
where
    F: FnMut(&WeightVector) -> Result<f64>,
{
    if n == 0 {
        return Err(Error::InvalidArgument("simplex dimension must be positive".into()));
    }
    if opts.n_init == 0 || opts.budget < opts.n_init {
        return Err(Error::InvalidArgument(format!(
            "need budget >= n_init >= 1, got budget {} and n_init {}",
            opts.budget, opts.n_init
        )));
    }
    opts.hyper.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut hyper = opts.hyper;
    let mut history = QueryHistory::default();
    let mut trace = LearnTrace::default();
    let mut incumbent = (f64::INFINITY, 0usize);

    for q in 0..opts.budget {
        let w = if q < opts.n_init {
            sample_simplex(&mut rng, n)
        } else {
            if opts.refit_lengthscale && q % REFIT_EVERY == 0 {
                hyper = refit_lengthscale(&history, &hyper)?;
            }
            let acq_seed = rng.gen::<u64>();
            maximize_acquisition(&history, &hyper, &opts.acquisition, acq_seed)?
        };
        let value = match oracle(&w) {
            Ok(v) if v.is_finite() => v,
            Ok(v) => {
                return Err(Error::QueryFailed {
                    iteration: q + 1,
                    partial: Box::new(trace),
                    source: Box::new(Error::InvalidArgument(format!("oracle returned {v}"))),
                })
            }
            Err(e) => {
                return Err(Error::QueryFailed {
                    iteration: q + 1,
                    partial: Box::new(trace),
                    source: Box::new(e),
                })
            }
        };
        if value < incumbent.0 {
            incumbent = (value, q);
        }
        trace.rows.push(LearnRow {
            iteration: q + 1,
            w: w.as_slice().to_vec(),
            value,
            incumbent: incumbent.0,
            incumbent_query: incumbent.1,
        });
        history.push(w, value)?;
    }
    let best = history.inputs()[incumbent.1].clone();
    Ok((best, trace))
}

fn sample_simplex(rng: &mut ChaCha8Rng, n: usize) -> WeightVector {
    if n == 1 {
        return WeightVector::uniform(1);
    }
    let dirichlet = Dirichlet::new_with_size(1.0, n).expect("flat Dirichlet is valid");
    crate::polytope::project_simplex(&dirichlet.sample(rng))
}
