//! Gaussian mixtures: variational Bayesian fitting and log-density evaluation.
//!
//! A fitted [`GmmModel`] stores point estimates (expected weights, posterior
//! mean of each component mean, expected covariance plus `reg_covar`) together
//! with the Cholesky factor and log-determinant of every covariance, so scoring
//! never refactorizes.

mod kmeans;
mod linalg;
mod vb;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use linalg::cholesky_with_jitter;
pub use vb::fit_vb;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Settings for [`fit_vb`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub max_components: usize,
    pub max_iter: usize,
    /// Stop once the lower bound changes by less than this (absolute).
    pub tol: f64,
    /// Concentration of the stick-breaking weight prior.
    pub weight_concentration_prior: f64,
    /// Diagonal floor added to covariances.
    pub reg_covar: f64,
    pub n_init: usize,
    pub seed: u64,
}

impl FitConfig {
    /// Defaults for the per-bin univariate models.
    pub fn one_dim() -> Self {
        FitConfig {
            max_components: 2,
            max_iter: 10_000,
            tol: 1e-3,
            weight_concentration_prior: 1e-3,
            reg_covar: 1e-6,
            n_init: 1,
            seed: 0,
        }
    }

    /// Defaults for the joint multi-bin models.
    pub fn multi_dim() -> Self {
        FitConfig {
            max_components: 5,
            ..Self::one_dim()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if self.max_components == 0 || self.max_iter == 0 || self.n_init == 0 {
            return Err(Error::arg(
                "max_components, max_iter and n_init must be positive",
            ));
        }
        if !positive(self.tol)
            || !positive(self.weight_concentration_prior)
            || !positive(self.reg_covar)
        {
            return Err(Error::arg(
                "tol, weight_concentration_prior and reg_covar must be finite and positive",
            ));
        }
        Ok(())
    }
}

/// One weighted Gaussian with its cached factorization.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianComponent {
    weight: f64,
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    chol: DMatrix<f64>,
    /// Rows of `chol⁻¹`, lower triangle packed row by row.
    whiten: Vec<f64>,
    log_det: f64,
}

impl GaussianComponent {
    /// Factorizes `covariance`; if it is not numerically positive definite,
    /// `reg_covar * I` is added (doubling each retry) until it is.
    pub fn new(
        weight: f64,
        mean: DVector<f64>,
        covariance: DMatrix<f64>,
        reg_covar: f64,
    ) -> Result<Self> {
        let d = mean.len();
        if covariance.nrows() != d || covariance.ncols() != d {
            return Err(Error::arg(format!("covariance must be {d}x{d}")));
        }
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::arg(format!(
                "component weight {weight} is not a valid probability"
            )));
        }
        let (covariance, chol) = cholesky_with_jitter(covariance, reg_covar)?;
        let log_det = 2.0 * chol.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let inv = chol
            .solve_lower_triangular(&DMatrix::identity(d, d))
            .ok_or_else(|| Error::arg("covariance factor is singular"))?;
        let whiten = (0..d)
            .flat_map(|i| (0..=i).map(move |j| (i, j)))
            .map(|ij| inv[ij])
            .collect();
        Ok(GaussianComponent {
            weight,
            mean,
            covariance,
            chol,
            whiten,
            log_det,
        })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// Lower-triangular `L` with `L Lᵀ = covariance`.
    pub fn chol(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// `log N(x; mean, covariance)` without the weight.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        let d = x.len();
        let mut stack = [0.0f64; 64];
        let mut heap;
        let diff: &mut [f64] = if d <= stack.len() {
            &mut stack[..d]
        } else {
            heap = vec![0.0; d];
            &mut heap
        };
        for ((o, v), m) in diff.iter_mut().zip(x).zip(self.mean.iter()) {
            *o = v - m;
        }
        let mut maha = 0.0;
        let mut row = self.whiten.as_slice();
        for i in 0..d {
            let (r, rest) = row.split_at(i + 1);
            let z: f64 = r.iter().zip(&diff[..=i]).map(|(a, b)| a * b).sum();
            maha += z * z;
            row = rest;
        }
        -0.5 * (d as f64 * LN_2PI + self.log_det + maha)
    }
}

/// A fitted mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel {
    components: Vec<GaussianComponent>,
    dim: usize,
    elbo_trace: Vec<f64>,
    converged: bool,
    n_iter: usize,
}

impl GmmModel {
    /// Assembles a model from components whose weights are renormalized to sum to one.
    pub fn from_components(
        mut components: Vec<GaussianComponent>,
        elbo_trace: Vec<f64>,
        converged: bool,
        n_iter: usize,
    ) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::arg("a mixture needs at least one component"));
        };
        let dim = first.mean.len();
        if dim == 0 || components.iter().any(|c| c.mean.len() != dim) {
            return Err(Error::arg("components must share one positive dimension"));
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::arg("component weights must have a positive sum"));
        }
        // already-normalized weights are kept bit-for-bit so stored models reload exactly
        if (total - 1.0).abs() > 1e-13 {
            components.iter_mut().for_each(|c| c.weight /= total);
        }
        Ok(GmmModel {
            components,
            dim,
            elbo_trace,
            converged,
            n_iter,
        })
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elbo_trace(&self) -> &[f64] {
        &self.elbo_trace
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn n_iter(&self) -> usize {
        self.n_iter
    }

    /// Covariance structure used when fitting.
    pub fn covariance_type(&self) -> &'static str {
        "full"
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::arg(format!(
                "expected a {}-vector, got length {}",
                self.dim,
                x.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("input contains a non-finite value"));
        }
        Ok(())
    }

    fn weighted_log_densities(&self, x: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| c.weight.ln() + c.log_density(x))
            .collect()
    }

    /// `log Σ_k w_k N(x; μ_k, Σ_k)`.
    pub fn log_pdf(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(log_sum_exp(&self.weighted_log_densities(x)))
    }

    pub fn log_pdf_batch<X: AsRef<[f64]>>(&self, xs: &[X]) -> Result<Vec<f64>> {
        xs.iter().map(|x| self.log_pdf(x.as_ref())).collect()
    }

    /// Draws one sample from the mixture.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut pick = self.components.len() - 1;
        for (k, c) in self.components.iter().enumerate() {
            acc += c.weight;
            if u < acc {
                pick = k;
                break;
            }
        }
        let c = &self.components[pick];
        let z = DVector::from_fn(self.dim, |_, _| {
            rand_distr::Distribution::<f64>::sample(&rand_distr::StandardNormal, rng)
        });
        (&c.mean + &c.chol * z).iter().copied().collect()
    }

    /// Posterior component probabilities for `x`.
    pub fn responsibilities(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let lw = self.weighted_log_densities(x);
        let norm = log_sum_exp(&lw);
        Ok(lw.into_iter().map(|v| (v - norm).exp()).collect())
    }
}

/// Max-shifted log-sum-exp. Returns `-inf` for an empty slice or all `-inf` terms.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}
