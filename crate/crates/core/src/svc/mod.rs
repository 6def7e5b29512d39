//! Multiclass RBF support-vector classification over similarity vectors.
//!
//! One binary soft-margin machine per unordered class pair, trained by SMO;
//! prediction is by pairwise voting.

mod persist;
mod smo;

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::SimilarityVector;
use crate::error::{Error, Result};
use crate::model::AreaId;

pub use persist::{load_svc, save_svc};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaMode {
    /// `1 / (d · var)` over all training feature entries.
    Scale,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvcConfig {
    pub c_penalty: f64,
    pub gamma_mode: GammaMode,
    pub gamma_value: f64,
    /// Cap on SMO pair updates per binary machine.
    pub max_iter: usize,
    pub tol: f64,
    /// Kept with the model; the solver itself draws no random numbers.
    pub seed: u64,
}

impl Default for SvcConfig {
    fn default() -> Self {
        SvcConfig {
            c_penalty: 1.0,
            gamma_mode: GammaMode::Scale,
            gamma_value: 1.0,
            max_iter: 10_000,
            tol: 1e-3,
            seed: 0,
        }
    }
}

impl SvcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_penalty.is_finite() && self.c_penalty > 0.0) {
            return Err(Error::arg("c_penalty must be finite and positive"));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::arg("tol must be finite and positive"));
        }
        if self.gamma_mode == GammaMode::Fixed
            && !(self.gamma_value.is_finite() && self.gamma_value > 0.0)
        {
            return Err(Error::arg("a fixed gamma must be finite and positive"));
        }
        Ok(())
    }
}

/// One pairwise machine; positive decisions favour `pos`, the lower class.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMachine {
    pos: AreaId,
    neg: AreaId,
    support: Vec<Vec<f64>>,
    /// `α_i y_i` for each support vector.
    coef: Vec<f64>,
    bias: f64,
    n_iter: usize,
    converged: bool,
}

impl BinaryMachine {
    pub fn classes(&self) -> (AreaId, AreaId) {
        (self.pos, self.neg)
    }

    pub fn support_vectors(&self) -> &[Vec<f64>] {
        &self.support
    }

    pub fn dual_coef(&self) -> &[f64] {
        &self.coef
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// SMO pair updates performed.
    pub fn n_iter(&self) -> usize {
        self.n_iter
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    /// `f(z) = Σ α_i y_i K(z, sv_i) + b`.
    pub fn decision(&self, z: &[f64], gamma: f64) -> f64 {
        self.support
            .iter()
            .zip(&self.coef)
            .map(|(sv, c)| c * smo::rbf(z, sv, gamma))
            .sum::<f64>()
            + self.bias
    }

    fn vote(&self, z: &[f64], gamma: f64) -> AreaId {
        let f = self.decision(z, gamma);
        if f.abs() < 1e-12 || f > 0.0 {
            self.pos
        } else {
            self.neg
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvcModel {
    classes: Vec<AreaId>,
    machines: Vec<BinaryMachine>,
    gamma: f64,
    dim: usize,
    config: SvcConfig,
}

impl SvcModel {
    pub fn classes(&self) -> &[AreaId] {
        &self.classes
    }

    /// Machines in class-pair order `(0,1), (0,2), …, (1,2), …`.
    pub fn machines(&self) -> &[BinaryMachine] {
        &self.machines
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn config(&self) -> &SvcConfig {
        &self.config
    }
}

/// Kernel width for the given training features.
pub fn resolve_gamma<X: AsRef<[f64]>>(features: &[X], cfg: &SvcConfig) -> Result<f64> {
    if features.is_empty() {
        return Err(Error::arg("cannot resolve gamma without training features"));
    }
    if cfg.gamma_mode == GammaMode::Fixed {
        cfg.validate()?;
        return Ok(cfg.gamma_value);
    }
    let d = features[0].as_ref().len();
    if d == 0 {
        return Err(Error::arg("features must be non-empty vectors"));
    }
    let n = (features.len() * d) as f64;
    let mean = features.iter().flat_map(|f| f.as_ref()).sum::<f64>() / n;
    let var = features
        .iter()
        .flat_map(|f| f.as_ref())
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / n;
    Ok(if var > 0.0 {
        1.0 / (d as f64 * var)
    } else {
        1.0 / d as f64
    })
}

/// Trains on the classes present in `labels`.
pub fn train_svc(
    features: &[SimilarityVector],
    labels: &[AreaId],
    cfg: &SvcConfig,
) -> Result<SvcModel> {
    let classes: BTreeSet<AreaId> = labels.iter().copied().collect();
    train_svc_for(
        &classes.into_iter().collect::<Vec<_>>(),
        features,
        labels,
        cfg,
    )
}

/// Trains over declared `classes`, each of which must have at least one sample.
pub fn train_svc_for(
    classes: &[AreaId],
    features: &[SimilarityVector],
    labels: &[AreaId],
    cfg: &SvcConfig,
) -> Result<SvcModel> {
    cfg.validate()?;
    if features.len() != labels.len() {
        return Err(Error::arg(format!(
            "{} features but {} labels",
            features.len(),
            labels.len()
        )));
    }
    let mut classes = classes.to_vec();
    classes.sort();
    classes.dedup();
    if classes.is_empty() {
        return Err(Error::Training("no classes to train on".into()));
    }
    let dim = features.first().map_or(0, |f| f.len());
    for (i, f) in features.iter().enumerate() {
        if f.len() != dim || dim == 0 {
            return Err(Error::arg(format!(
                "feature {i} has length {}, expected {dim}",
                f.len()
            )));
        }
        if f.z.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg(format!("feature {i} is not finite")));
        }
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); classes.len()];
    for (i, l) in labels.iter().enumerate() {
        match classes.binary_search(l) {
            Ok(k) => members[k].push(i),
            Err(_) => {
                return Err(Error::Training(format!(
                    "label {l} of sample {i} is not a declared class"
                )))
            }
        }
    }
    if let Some(k) = members.iter().position(Vec::is_empty) {
        return Err(Error::Training(format!(
            "class {} has no training samples",
            classes[k]
        )));
    }
    let gamma = resolve_gamma(
        &features.iter().map(|f| f.z.as_slice()).collect::<Vec<_>>(),
        cfg,
    )?;

    let pairs: Vec<(usize, usize)> = (0..classes.len())
        .flat_map(|a| (a + 1..classes.len()).map(move |b| (a, b)))
        .collect();
    let machines = pairs
        .par_iter()
        .map(|&(a, b)| {
            let idx: Vec<usize> = members[a].iter().chain(&members[b]).copied().collect();
            let x: Vec<&[f64]> = idx.iter().map(|&i| features[i].z.as_slice()).collect();
            let y: Vec<f64> = (0..idx.len())
                .map(|t| if t < members[a].len() { 1.0 } else { -1.0 })
                .collect();
            let sol = smo::solve(&x, &y, gamma, cfg.c_penalty, cfg.tol, cfg.max_iter);
            let (mut support, mut coef) = (Vec::new(), Vec::new());
            for t in 0..idx.len() {
                if sol.alpha[t] > 0.0 {
                    support.push(x[t].to_vec());
                    coef.push(sol.alpha[t] * y[t]);
                }
            }
            BinaryMachine {
                pos: classes[a],
                neg: classes[b],
                support,
                coef,
                bias: sol.bias,
                n_iter: sol.n_iter,
                converged: sol.converged,
            }
        })
        .collect();
    Ok(SvcModel {
        classes,
        machines,
        gamma,
        dim,
        config: cfg.clone(),
    })
}

pub fn predict_svc(model: &SvcModel, z: &SimilarityVector) -> Result<AreaId> {
    if z.len() != model.dim {
        return Err(Error::arg(format!(
            "similarity vector has length {}, model expects {}",
            z.len(),
            model.dim
        )));
    }
    let mut votes = vec![0usize; model.classes.len()];
    for m in &model.machines {
        let winner = m.vote(&z.z, model.gamma);
        votes[model
            .classes
            .binary_search(&winner)
            .expect("machine classes belong to the model")] += 1;
    }
    let mut best = 0;
    for (k, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = k;
        }
    }
    Ok(model.classes[best])
}

#[cfg(test)]
mod tests;
