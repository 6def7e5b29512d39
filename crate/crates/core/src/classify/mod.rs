//! Area classification on top of per-area mixtures.
//!
//! * per-bin independent scoring: `Σ_m log g_c^m(|h[m]|)`,
//! * joint scoring: `log g_c(|h|)`,
//! * hard majority voting over single-snapshot decisions,
//! * window similarity `z_c = Σ_t log g_c(|h^t|)` and its argmax.
//!
//! Every argmax breaks ties toward the lowest [`AreaId`].

mod persist;

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gmm::{fit_vb, FitConfig, GmmModel};
use crate::model::{AreaId, Dataset, MagnitudeVector, SnapshotWindow};

pub use persist::{load_models_1d, load_models_md, save_models_1d, save_models_md};

/// Per-area, per-bin univariate mixtures `g_c^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct AreaModelSet1D {
    areas: Vec<AreaId>,
    models: Vec<Vec<GmmModel>>,
    config: FitConfig,
}

impl AreaModelSet1D {
    pub fn new(areas: Vec<AreaId>, models: Vec<Vec<GmmModel>>, config: FitConfig) -> Result<Self> {
        check_areas(&areas, models.len())?;
        let bins = models.first().map_or(0, Vec::len);
        if bins == 0
            || models
                .iter()
                .any(|m| m.len() != bins || m.iter().any(|g| g.dim() != 1))
        {
            return Err(Error::arg(
                "every area needs the same positive number of univariate bin models",
            ));
        }
        Ok(AreaModelSet1D {
            areas,
            models,
            config,
        })
    }

    pub fn areas(&self) -> &[AreaId] {
        &self.areas
    }

    /// Bin models of the area at position `i` in [`Self::areas`].
    pub fn area_models(&self, i: usize) -> &[GmmModel] {
        &self.models[i]
    }

    pub fn bins(&self) -> usize {
        self.models[0].len()
    }

    pub fn config(&self) -> &FitConfig {
        &self.config
    }
}

/// One joint mixture `g_c` per area.
#[derive(Debug, Clone, PartialEq)]
pub struct AreaModelSetMD {
    areas: Vec<AreaId>,
    models: Vec<GmmModel>,
    config: FitConfig,
}

impl AreaModelSetMD {
    pub fn new(areas: Vec<AreaId>, models: Vec<GmmModel>, config: FitConfig) -> Result<Self> {
        check_areas(&areas, models.len())?;
        let dim = models[0].dim();
        if models.iter().any(|m| m.dim() != dim) {
            return Err(Error::arg("all area models must share one dimension"));
        }
        Ok(AreaModelSetMD {
            areas,
            models,
            config,
        })
    }

    pub fn areas(&self) -> &[AreaId] {
        &self.areas
    }

    pub fn models(&self) -> &[GmmModel] {
        &self.models
    }

    pub fn dim(&self) -> usize {
        self.models[0].dim()
    }

    pub fn config(&self) -> &FitConfig {
        &self.config
    }
}

fn check_areas(areas: &[AreaId], n_models: usize) -> Result<()> {
    if areas.is_empty() || areas.len() != n_models {
        return Err(Error::arg(
            "need one model entry per area and at least one area",
        ));
    }
    if areas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::arg("areas must be strictly ascending"));
    }
    Ok(())
}

/// Per-area window similarity, in ascending area order.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityVector {
    pub z: Vec<f64>,
}

impl SimilarityVector {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }
}

impl AsRef<[f64]> for SimilarityVector {
    fn as_ref(&self) -> &[f64] {
        &self.z
    }
}

/// Magnitude vectors of a labeled, processed training set grouped by area.
/// Every area of `train.areas()` must have at least `min_samples` snapshots.
fn group_by_area(
    train: &Dataset,
    min_samples: usize,
) -> Result<BTreeMap<AreaId, Vec<MagnitudeVector>>> {
    if train.processed() != Some(true) {
        return Err(Error::Training(
            "training set must be non-empty and processed".into(),
        ));
    }
    let mut groups: BTreeMap<AreaId, Vec<MagnitudeVector>> =
        train.areas().iter().map(|&a| (a, Vec::new())).collect();
    for (i, s) in train.snapshots().iter().enumerate() {
        let label = s.label().ok_or_else(|| {
            Error::Training(format!(
                "training snapshot {i} (seq {}) is unlabeled",
                s.seq()
            ))
        })?;
        groups
            .get_mut(&label)
            .expect("dataset labels are in its area set")
            .push(crate::model::magnitude(s)?);
    }
    for (area, samples) in &groups {
        if samples.len() < min_samples {
            return Err(Error::Training(format!(
                "area {area} has {} samples, need at least {min_samples}",
                samples.len()
            )));
        }
    }
    Ok(groups)
}

/// Fits one univariate mixture per (area, bin).
pub fn fit_area_models_1d(train: &Dataset, cfg: &FitConfig) -> Result<AreaModelSet1D> {
    cfg.validate()?;
    let groups = group_by_area(train, cfg.max_components.max(1))?;
    let bins = groups.values().next().map_or(0, |v| v[0].len());
    let jobs: Vec<(usize, usize)> = (0..groups.len())
        .flat_map(|a| (0..bins).map(move |m| (a, m)))
        .collect();
    let per_area: Vec<&Vec<MagnitudeVector>> = groups.values().collect();
    let fitted: Vec<GmmModel> = jobs
        .par_iter()
        .map(|&(a, m)| {
            let column: Vec<[f64; 1]> = per_area[a].iter().map(|x| [x.as_slice()[m]]).collect();
            fit_vb(&column, cfg)
        })
        .collect::<Result<_>>()?;
    let mut it = fitted.into_iter();
    let models = (0..groups.len())
        .map(|_| it.by_ref().take(bins).collect())
        .collect();
    AreaModelSet1D::new(groups.keys().copied().collect(), models, cfg.clone())
}

/// Fits one joint mixture per area on the stacked magnitude vectors.
pub fn fit_area_models_md(train: &Dataset, cfg: &FitConfig) -> Result<AreaModelSetMD> {
    cfg.validate()?;
    let groups = group_by_area(train, cfg.max_components.max(1))?;
    let fitted: Vec<GmmModel> = groups
        .values()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|s| fit_vb(s, cfg))
        .collect::<Result<_>>()?;
    AreaModelSetMD::new(groups.keys().copied().collect(), fitted, cfg.clone())
}

pub fn score_1d(models: &AreaModelSet1D, x: &MagnitudeVector) -> Result<Vec<f64>> {
    if x.len() != models.bins() {
        return Err(Error::arg(format!(
            "expected {} bins, got {}",
            models.bins(),
            x.len()
        )));
    }
    models
        .models
        .iter()
        .map(|bins| {
            let mut total = 0.0;
            for (g, v) in bins.iter().zip(x.as_slice()) {
                total += g.log_pdf(std::slice::from_ref(v))?;
            }
            Ok(total)
        })
        .collect()
}

pub fn score_md(models: &AreaModelSetMD, x: &MagnitudeVector) -> Result<Vec<f64>> {
    models
        .models
        .iter()
        .map(|g| g.log_pdf(x.as_slice()))
        .collect()
}

/// Index of the largest score, earliest index on ties.
pub fn argmax(scores: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    best.map(|(i, _)| i)
}

pub fn predict_1d(models: &AreaModelSet1D, x: &MagnitudeVector) -> Result<AreaId> {
    let s = score_1d(models, x)?;
    Ok(models.areas[argmax(&s).expect("at least one area")])
}

pub fn predict_md(models: &AreaModelSetMD, x: &MagnitudeVector) -> Result<AreaId> {
    let s = score_md(models, x)?;
    Ok(models.areas[argmax(&s).expect("at least one area")])
}

/// Most frequent label; the lowest id wins a tie.
pub fn majority_vote(predictions: &[AreaId]) -> Result<AreaId> {
    if predictions.is_empty() {
        return Err(Error::arg("majority vote over an empty list"));
    }
    let mut counts: BTreeMap<AreaId, usize> = BTreeMap::new();
    for p in predictions {
        *counts.entry(*p).or_default() += 1;
    }
    let mut best = (AreaId(0), 0usize);
    for (area, n) in counts {
        if n > best.1 {
            best = (area, n);
        }
    }
    Ok(best.0)
}

/// `z_c = Σ_t log g_c(member_t)`.
pub fn similarity_vector(
    models: &AreaModelSetMD,
    window: &SnapshotWindow,
) -> Result<SimilarityVector> {
    similarity_of(models, window.members())
}

/// Similarity vector of an arbitrary sample set (not necessarily magnitudes).
pub fn similarity_of<X: AsRef<[f64]>>(
    models: &AreaModelSetMD,
    members: &[X],
) -> Result<SimilarityVector> {
    if members.is_empty() {
        return Err(Error::arg("similarity of an empty sample set"));
    }
    let mut z = vec![0.0; models.models.len()];
    for member in members {
        let member = member.as_ref();
        if member.len() != models.dim() {
            return Err(Error::arg(format!(
                "member dimension {} != model dimension {}",
                member.len(),
                models.dim()
            )));
        }
        for (acc, g) in z.iter_mut().zip(&models.models) {
            *acc += g.log_pdf(member)?;
        }
    }
    Ok(SimilarityVector { z })
}

pub fn predict_maxsim(models: &AreaModelSetMD, window: &SnapshotWindow) -> Result<AreaId> {
    let z = similarity_vector(models, window)?;
    Ok(area_of_max(models, &z))
}

/// Area with the largest entry of `z`.
pub fn area_of_max(models: &AreaModelSetMD, z: &SimilarityVector) -> AreaId {
    models.areas[argmax(&z.z).expect("at least one area")]
}
