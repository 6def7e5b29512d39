//! Variational Bayesian EM for a full-covariance Gaussian mixture with a
//! truncated stick-breaking (Dirichlet-process) weight prior and a
//! Gaussian–Wishart prior on each component.
//!
//! Priors: mean prior = sample mean, mean precision = 1, degrees of freedom = d,
//! inverse scale = diag(sample variance) + reg_covar. Every update is the exact
//! coordinate-ascent optimum, so the lower bound never decreases.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::function::beta::ln_beta;
use statrs::function::gamma::{digamma, ln_gamma};

use super::kmeans::kmeans_assign;
use super::linalg::{cholesky_with_jitter, inv_quad, inv_trace, log_det_from_chol};
use super::{FitConfig, GaussianComponent, GmmModel, LN_2PI};
use crate::error::{Error, Result};

/// Components whose expected weight falls below this are dropped after fitting.
pub(crate) const PRUNE_WEIGHT: f64 = 1e-5;

struct Prior {
    alpha: f64,
    beta0: f64,
    mean0: DVector<f64>,
    nu0: f64,
    scale_inv0: DMatrix<f64>,
    log_det_scale_inv0: f64,
}

/// Variational posterior over (stick, mean, precision) for every component.
struct Posterior {
    nk: Vec<f64>,
    xbar: Vec<DVector<f64>>,
    scatter: Vec<DMatrix<f64>>,
    stick_a: Vec<f64>,
    stick_b: Vec<f64>,
    beta: Vec<f64>,
    mean: Vec<DVector<f64>>,
    nu: Vec<f64>,
    scale_inv: Vec<DMatrix<f64>>,
    /// Cholesky factor of `scale_inv`.
    scale_inv_chol: Vec<DMatrix<f64>>,
}

impl Posterior {
    fn k(&self) -> usize {
        self.nk.len()
    }

    /// `E[ln |Λ_k|]`.
    fn expected_log_det_precision(&self, k: usize, d: usize) -> f64 {
        let nu = self.nu[k];
        (1..=d)
            .map(|i| digamma(0.5 * (nu + 1.0 - i as f64)))
            .sum::<f64>()
            + d as f64 * 2f64.ln()
            - log_det_from_chol(&self.scale_inv_chol[k])
    }

    /// `E[ln π_k]` under the stick-breaking posterior.
    fn expected_log_weights(&self) -> Vec<f64> {
        let mut acc = 0.0;
        (0..self.k())
            .map(|k| {
                let (a, b) = (self.stick_a[k], self.stick_b[k]);
                let dsum = digamma(a + b);
                let v = digamma(a) - dsum + acc;
                acc += digamma(b) - dsum;
                v
            })
            .collect()
    }
}

/// Fits a mixture of at most `cfg.max_components` Gaussians to `samples`.
///
/// Samples are put into a canonical (lexicographic) order first, so the result
/// does not depend on the order they are given in.
pub fn fit_vb<X: AsRef<[f64]>>(samples: &[X], cfg: &FitConfig) -> Result<GmmModel> {
    cfg.validate()?;
    let n = samples.len();
    if n < cfg.max_components {
        return Err(Error::arg(format!(
            "need at least {} samples for {} components, got {n}",
            cfg.max_components, cfg.max_components
        )));
    }
    let d = samples[0].as_ref().len();
    if d == 0 {
        return Err(Error::arg("samples must have positive dimension"));
    }
    for (i, s) in samples.iter().enumerate() {
        let s = s.as_ref();
        if s.len() != d {
            return Err(Error::arg(format!(
                "sample {i} has dimension {} instead of {d}",
                s.len()
            )));
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg(format!(
                "sample {i} contains a non-finite value"
            )));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (samples[i].as_ref(), samples[j].as_ref());
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let data = DMatrix::from_fn(d, n, |r, c| samples[order[c]].as_ref()[r]);
    let prior = build_prior(&data, cfg);

    let mut best: Option<(f64, Run)> = None;
    for init in 0..cfg.n_init {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(init as u64);
        let run = run_once(&data, &prior, cfg, &mut rng)?;
        let score = run.elbo.last().copied().unwrap_or(f64::NEG_INFINITY);
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, run));
        }
    }
    let (_, run) = best.expect("n_init >= 1");
    finish(run, cfg)
}

fn build_prior(data: &DMatrix<f64>, cfg: &FitConfig) -> Prior {
    let (d, n) = data.shape();
    let mean0 = data.column_mean();
    let mut scale_inv0 = DMatrix::zeros(d, d);
    for r in 0..d {
        let var = if n > 1 {
            data.row(r)
                .iter()
                .map(|v| (v - mean0[r]).powi(2))
                .sum::<f64>()
                / (n - 1) as f64
        } else {
            0.0
        };
        scale_inv0[(r, r)] = var + cfg.reg_covar;
    }
    let log_det_scale_inv0 = scale_inv0.diagonal().iter().map(|v| v.ln()).sum();
    Prior {
        alpha: cfg.weight_concentration_prior,
        beta0: 1.0,
        mean0,
        nu0: d as f64,
        scale_inv0,
        log_det_scale_inv0,
    }
}

struct Run {
    post: Posterior,
    elbo: Vec<f64>,
    converged: bool,
    n_iter: usize,
}

fn run_once(
    data: &DMatrix<f64>,
    prior: &Prior,
    cfg: &FitConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Run> {
    let n = data.ncols();
    let k = cfg.max_components;
    let labels = kmeans_assign(data, k, rng);
    let mut resp = DMatrix::zeros(n, k);
    for (i, &l) in labels.iter().enumerate() {
        resp[(i, l)] = 1.0;
    }
    let mut post = m_step(data, &resp, prior, cfg)?;
    let mut elbo = Vec::new();
    let mut converged = false;
    let mut n_iter = 0;
    for _ in 0..cfg.max_iter {
        n_iter += 1;
        resp = e_step(data, &post);
        post = m_step(data, &resp, prior, cfg)?;
        let bound = lower_bound(&resp, &post, prior, data.nrows());
        let prev = elbo.last().copied();
        elbo.push(bound);
        if let Some(p) = prev {
            if (bound - p).abs() < cfg.tol {
                converged = true;
                break;
            }
        }
    }
    Ok(Run {
        post,
        elbo,
        converged,
        n_iter,
    })
}

fn m_step(
    data: &DMatrix<f64>,
    resp: &DMatrix<f64>,
    prior: &Prior,
    cfg: &FitConfig,
) -> Result<Posterior> {
    let (d, n) = data.shape();
    let k = resp.ncols();
    let mut post = Posterior {
        nk: Vec::with_capacity(k),
        xbar: Vec::with_capacity(k),
        scatter: Vec::with_capacity(k),
        stick_a: Vec::with_capacity(k),
        stick_b: vec![0.0; k],
        beta: Vec::with_capacity(k),
        mean: Vec::with_capacity(k),
        nu: Vec::with_capacity(k),
        scale_inv: Vec::with_capacity(k),
        scale_inv_chol: Vec::with_capacity(k),
    };
    for j in 0..k {
        let r = resp.column(j);
        let nk: f64 = r.iter().sum();
        let xbar = if nk > 0.0 {
            (data * r) / nk
        } else {
            prior.mean0.clone()
        };
        let mut centered = data.clone();
        for c in 0..n {
            let w = r[c].sqrt();
            for row in 0..d {
                centered[(row, c)] = (centered[(row, c)] - xbar[row]) * w;
            }
        }
        let scatter = &centered * centered.transpose();
        let beta = prior.beta0 + nk;
        let mean = (&prior.mean0 * prior.beta0 + &xbar * nk) / beta;
        let dev = &xbar - &prior.mean0;
        let scale_inv =
            &prior.scale_inv0 + &scatter + (&dev * dev.transpose()) * (prior.beta0 * nk / beta);
        let (scale_inv, chol) = cholesky_with_jitter(scale_inv, cfg.reg_covar)?;
        post.stick_a.push(1.0 + nk);
        post.nk.push(nk);
        post.xbar.push(xbar);
        post.scatter.push(scatter);
        post.beta.push(beta);
        post.mean.push(mean);
        post.nu.push(prior.nu0 + nk);
        post.scale_inv.push(scale_inv);
        post.scale_inv_chol.push(chol);
    }
    let mut tail = 0.0;
    for j in (0..k).rev() {
        post.stick_b[j] = prior.alpha + tail;
        tail += post.nk[j];
    }
    Ok(post)
}

fn e_step(data: &DMatrix<f64>, post: &Posterior) -> DMatrix<f64> {
    let (d, n) = data.shape();
    let k = post.k();
    let elog_w = post.expected_log_weights();
    let mut log_rho = DMatrix::zeros(n, k);
    for j in 0..k {
        let mut diff = data.clone();
        for c in 0..n {
            for row in 0..d {
                diff[(row, c)] -= post.mean[j][row];
            }
        }
        post.scale_inv_chol[j].solve_lower_triangular_mut(&mut diff);
        let base = elog_w[j] + 0.5 * post.expected_log_det_precision(j, d)
            - 0.5 * d as f64 * LN_2PI
            - 0.5 * d as f64 / post.beta[j];
        for c in 0..n {
            let maha = diff.column(c).norm_squared();
            log_rho[(c, j)] = base - 0.5 * post.nu[j] * maha;
        }
    }
    for c in 0..n {
        let mut row = log_rho.row_mut(c);
        let max = row.max();
        let norm = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        row.iter_mut().for_each(|v| *v = (*v - norm).exp());
    }
    log_rho
}

/// `ln B(W, ν)`, the Wishart normalizer, given `ln |W|`.
fn ln_wishart_norm(log_det_w: f64, nu: f64, d: usize) -> f64 {
    let df = d as f64;
    -0.5 * nu * log_det_w
        - 0.5 * nu * df * 2f64.ln()
        - 0.25 * df * (df - 1.0) * std::f64::consts::PI.ln()
        - (1..=d)
            .map(|i| ln_gamma(0.5 * (nu + 1.0 - i as f64)))
            .sum::<f64>()
}

fn lower_bound(resp: &DMatrix<f64>, post: &Posterior, prior: &Prior, d: usize) -> f64 {
    let k = post.k();
    let df = d as f64;
    let elog_w = post.expected_log_weights();
    let ln_b0 = ln_wishart_norm(-prior.log_det_scale_inv0, prior.nu0, d);

    let mut bound = 0.0;
    for j in 0..k {
        let l = &post.scale_inv_chol[j];
        let e_ln_lam = post.expected_log_det_precision(j, d);
        let (nk, beta, nu) = (post.nk[j], post.beta[j], post.nu[j]);
        let log_det_w = -log_det_from_chol(l);

        // E[ln p(X | Z, μ, Λ)]
        let xm = &post.xbar[j] - &post.mean[j];
        bound += 0.5
            * (nk * (e_ln_lam - df / beta - df * LN_2PI)
                - nu * inv_trace(l, &post.scatter[j])
                - nu * nk * inv_quad(l, &xm));

        // E[ln p(Z | v)]
        bound += nk * elog_w[j];

        // E[ln p(v)] - E[ln q(v)]
        let (a, b) = (post.stick_a[j], post.stick_b[j]);
        let dsum = digamma(a + b);
        let e_ln_1mv = digamma(b) - dsum;
        let e_ln_v = digamma(a) - dsum;
        bound += prior.alpha.ln() + (prior.alpha - 1.0) * e_ln_1mv;
        bound -= -ln_beta(a, b) + (a - 1.0) * e_ln_v + (b - 1.0) * e_ln_1mv;

        // E[ln p(μ, Λ)]
        let mm = &post.mean[j] - &prior.mean0;
        bound += 0.5
            * (df * (prior.beta0 / std::f64::consts::TAU).ln() + e_ln_lam
                - df * prior.beta0 / beta
                - prior.beta0 * nu * inv_quad(l, &mm));
        bound += ln_b0 + 0.5 * (prior.nu0 - df - 1.0) * e_ln_lam
            - 0.5 * nu * inv_trace(l, &prior.scale_inv0);

        // E[ln q(μ, Λ)]
        let entropy_lam =
            -ln_wishart_norm(log_det_w, nu, d) - 0.5 * (nu - df - 1.0) * e_ln_lam + 0.5 * nu * df;
        bound -= 0.5 * e_ln_lam + 0.5 * df * (beta / std::f64::consts::TAU).ln()
            - 0.5 * df
            - entropy_lam;
    }
    // E[ln q(Z)]
    bound -= resp
        .iter()
        .filter(|&&r| r > 0.0)
        .map(|&r| r * r.ln())
        .sum::<f64>();
    bound
}

fn finish(run: Run, cfg: &FitConfig) -> Result<GmmModel> {
    let post = &run.post;
    let k = post.k();
    let mut weights = Vec::with_capacity(k);
    let mut remaining = 1.0;
    for j in 0..k {
        let ev = post.stick_a[j] / (post.stick_a[j] + post.stick_b[j]);
        weights.push(ev * remaining);
        remaining *= 1.0 - ev;
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let heaviest = weights.iter().copied().fold(0.0, f64::max);

    let d = post.mean[0].len();
    let mut components = Vec::new();
    for j in 0..k {
        if weights[j] < PRUNE_WEIGHT && weights[j] < heaviest {
            continue;
        }
        let mut cov = &post.scale_inv[j] / post.nu[j];
        for i in 0..d {
            cov[(i, i)] += cfg.reg_covar;
        }
        components.push(GaussianComponent::new(
            weights[j],
            post.mean[j].clone(),
            cov,
            cfg.reg_covar,
        )?);
    }
    GmmModel::from_components(components, run.elbo, run.converged, run.n_iter)
}
