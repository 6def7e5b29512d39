//! Experiment orchestration: preprocess, fit, evaluate, report.

mod report;
mod runtime;

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{
    argmax, fit_area_models_1d, fit_area_models_md, majority_vote, score_1d, score_md,
    AreaModelSet1D, AreaModelSetMD, SimilarityVector,
};
use crate::error::{Error, Result};
use crate::gmm::FitConfig;
use crate::model::{load_dataset, AreaId, Dataset, DatasetFormat, MagnitudeVector};
use crate::preprocess::{preprocess_dataset, PreprocessConfig};
use crate::svc::{predict_svc, train_svc_for, SvcConfig, SvcModel};

pub use report::{
    emit_report, format_percent, render_report, AccuracyReport, ReportEntry, ReportFormat,
    ReportTable, TableRow,
};
pub use runtime::{compare_runtime, RuntimeComparison};

pub const DEFAULT_VOTE_WINDOW: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "1d")]
    OneD,
    #[serde(rename = "md")]
    Md,
    #[serde(rename = "maxsim")]
    MaxSim,
    #[serde(rename = "svc")]
    Svc,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::OneD, Method::Md, Method::MaxSim, Method::Svc];

    pub fn label(self) -> &'static str {
        match self {
            Method::OneD => "1D-GMM",
            Method::Md => "MD-GMM",
            Method::MaxSim => "MD-GMM-MaxSim",
            Method::Svc => "MD-GMM-SVC",
        }
    }

    fn key(self) -> &'static str {
        match self {
            Method::OneD => "1d",
            Method::Md => "md",
            Method::MaxSim => "maxsim",
            Method::Svc => "svc",
        }
    }

    /// Whether the method classifies single snapshots (and so also supports voting).
    pub fn per_snapshot(self) -> bool {
        matches!(self, Method::OneD | Method::Md)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.key() == s)
            .ok_or_else(|| {
                Error::Spec(format!(
                    "unknown method {s:?} (expected 1d, md, maxsim or svc)"
                ))
            })
    }
}

/// How test snapshots are grouped into decisions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowMode {
    /// One decision per snapshot.
    Single,
    /// Majority vote over disjoint windows of `T` single-snapshot decisions.
    Vote(usize),
    /// One set-based decision per disjoint window of `T` snapshots.
    Window(usize),
}

impl WindowMode {
    pub fn label(self) -> String {
        match self {
            WindowMode::Single => "1 snapshot".into(),
            WindowMode::Vote(t) => format!("MV{t}"),
            WindowMode::Window(t) => format!("{t} snapshots"),
        }
    }
}

/// Everything needed to reproduce one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub train_path: PathBuf,
    /// Named test sets, in report column order.
    pub test_paths: Vec<(String, PathBuf)>,
    pub methods: Vec<Method>,
    #[serde(default = "default_window")]
    pub vote_window: usize,
    #[serde(default)]
    pub fit_1d: Option<FitConfig>,
    #[serde(default)]
    pub fit_md: Option<FitConfig>,
    #[serde(default)]
    pub svc: Option<SvcConfig>,
    #[serde(default)]
    pub preprocess: PreprocessConfig,
    #[serde(default)]
    pub report_path: Option<PathBuf>,
}

fn default_window() -> usize {
    DEFAULT_VOTE_WINDOW
}

impl ExperimentSpec {
    /// A spec running `methods` with default configurations for each.
    pub fn new(
        train_path: impl Into<PathBuf>,
        test_paths: Vec<(String, PathBuf)>,
        methods: Vec<Method>,
    ) -> Self {
        let md = methods.iter().any(|m| !matches!(m, Method::OneD));
        ExperimentSpec {
            train_path: train_path.into(),
            test_paths,
            vote_window: DEFAULT_VOTE_WINDOW,
            fit_1d: methods.contains(&Method::OneD).then(FitConfig::one_dim),
            fit_md: md.then(FitConfig::multi_dim),
            svc: methods.contains(&Method::Svc).then(SvcConfig::default),
            methods,
            preprocess: PreprocessConfig::default(),
            report_path: None,
        }
    }

    /// Checks method/configuration consistency without touching any data.
    pub fn validate(&self) -> Result<()> {
        let spec = |e: Error| Error::Spec(e.to_string());
        if self.methods.is_empty() {
            return Err(Error::Spec("no methods requested".into()));
        }
        if self.methods.iter().collect::<BTreeSet<_>>().len() != self.methods.len() {
            return Err(Error::Spec("a method is listed twice".into()));
        }
        if self.vote_window == 0 {
            return Err(Error::Spec("vote window must be at least 1".into()));
        }
        if self.test_paths.is_empty() {
            return Err(Error::Spec("no test sets given".into()));
        }
        if self
            .test_paths
            .iter()
            .map(|(n, _)| n)
            .collect::<BTreeSet<_>>()
            .len()
            != self.test_paths.len()
        {
            return Err(Error::Spec("test set names must be unique".into()));
        }
        for m in &self.methods {
            match m {
                Method::OneD if self.fit_1d.is_none() => {
                    return Err(Error::Spec("method 1d needs a 1d fit configuration".into()))
                }
                Method::Md | Method::MaxSim if self.fit_md.is_none() => {
                    return Err(Error::Spec(format!(
                        "method {m} needs an md fit configuration"
                    )))
                }
                Method::Svc if self.fit_md.is_none() || self.svc.is_none() => {
                    return Err(Error::Spec(
                        "method svc needs md models and an svc configuration".into(),
                    ))
                }
                _ => {}
            }
        }
        self.fit_1d
            .as_ref()
            .map(FitConfig::validate)
            .transpose()
            .map_err(spec)?;
        self.fit_md
            .as_ref()
            .map(FitConfig::validate)
            .transpose()
            .map_err(spec)?;
        self.svc
            .as_ref()
            .map(SvcConfig::validate)
            .transpose()
            .map_err(spec)?;
        self.preprocess.validate().map_err(spec)?;
        Ok(())
    }
}

/// Model sets produced by [`train_models`].
#[derive(Debug, Clone, Default)]
pub struct TrainedModels {
    pub one_d: Option<AreaModelSet1D>,
    pub md: Option<AreaModelSetMD>,
    pub svc: Option<SvcModel>,
}

/// Returns the processed form of `dataset` (unchanged if already processed).
pub fn prepare(dataset: Dataset, cfg: &PreprocessConfig) -> Result<Dataset> {
    match dataset.processed() {
        Some(false) => preprocess_dataset(&dataset, cfg),
        _ => Ok(dataset),
    }
}

/// Similarity vectors of the stride-1 windows of `train` under `models`.
pub fn svc_training_set(
    models: &AreaModelSetMD,
    train: &Dataset,
    t: usize,
) -> Result<(Vec<SimilarityVector>, Vec<AreaId>)> {
    let scores = snapshot_scores(train, |x| score_md(models, x))?;
    let labels = labels_of(train)?;
    let mut features = Vec::new();
    let mut out_labels = Vec::new();
    for (start, end) in runs(&labels) {
        if end - start < t {
            continue;
        }
        for s in start..=end - t {
            features.push(sum_scores(&scores[s..s + t]));
            out_labels.push(labels[s]);
        }
    }
    Ok((features, out_labels))
}

/// Fits whatever model sets `spec.methods` need on a processed training set.
pub fn train_models(spec: &ExperimentSpec, train: &Dataset) -> Result<TrainedModels> {
    spec.validate()?;
    let mut out = TrainedModels::default();
    if spec.methods.contains(&Method::OneD) {
        out.one_d = Some(fit_area_models_1d(train, spec.fit_1d.as_ref().unwrap())?);
    }
    if spec.methods.iter().any(|m| *m != Method::OneD) {
        out.md = Some(fit_area_models_md(train, spec.fit_md.as_ref().unwrap())?);
    }
    if spec.methods.contains(&Method::Svc) {
        let md = out.md.as_ref().unwrap();
        let (features, labels) = svc_training_set(md, train, spec.vote_window)?;
        if features.is_empty() {
            return Err(Error::Training(format!(
                "no training window of {} snapshots fits in one area",
                spec.vote_window
            )));
        }
        out.svc = Some(train_svc_for(
            md.areas(),
            &features,
            &labels,
            spec.svc.as_ref().unwrap(),
        )?);
    }
    Ok(out)
}

/// Loads, preprocesses, trains and evaluates as described by `spec`, writing
/// the markdown report to `spec.report_path` when set.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<AccuracyReport> {
    spec.validate()?;
    let load = |p: &PathBuf| load_dataset(p, DatasetFormat::from_path(p));
    let train = load(&spec.train_path)?;
    let tests = spec
        .test_paths
        .iter()
        .map(|(n, p)| Ok((n.clone(), load(p)?)))
        .collect::<Result<Vec<_>>>()?;
    let report = run_experiment_on(spec, train, tests)?;
    if let Some(path) = &spec.report_path {
        emit_report(&report, ReportFormat::Markdown, path)?;
    }
    Ok(report)
}

/// [`run_experiment`] on in-memory datasets; the spec's paths are ignored.
pub fn run_experiment_on(
    spec: &ExperimentSpec,
    train: Dataset,
    tests: Vec<(String, Dataset)>,
) -> Result<AccuracyReport> {
    spec.validate()?;
    let train = prepare(train, &spec.preprocess)?;
    let tests = tests
        .into_iter()
        .map(|(n, d)| Ok((n, prepare(d, &spec.preprocess)?)))
        .collect::<Result<Vec<_>>>()?;
    let models = train_models(spec, &train)?;
    let areas = models
        .md
        .as_ref()
        .map(|m| m.areas().to_vec())
        .or_else(|| models.one_d.as_ref().map(|m| m.areas().to_vec()))
        .expect("at least one model set");
    let mut entries = Vec::new();
    for (name, test) in &tests {
        for &method in &spec.methods {
            entries.extend(evaluate(method, &models, test, name, spec.vote_window)?);
        }
    }
    Ok(AccuracyReport::new(
        areas,
        tests.iter().map(|(n, _)| n.clone()).collect(),
        entries,
    ))
}

/// Scores one processed test set with one method. Per-snapshot methods yield
/// a single-snapshot entry and a vote entry; set-based methods a window entry.
pub fn evaluate(
    method: Method,
    models: &TrainedModels,
    test: &Dataset,
    name: &str,
    t: usize,
) -> Result<Vec<ReportEntry>> {
    if t == 0 {
        return Err(Error::Spec("vote window must be at least 1".into()));
    }
    let missing = || Error::Spec(format!("method {method} has no trained model"));
    let areas: Vec<AreaId> = match method {
        Method::OneD => models.one_d.as_ref().ok_or_else(missing)?.areas().to_vec(),
        _ => models.md.as_ref().ok_or_else(missing)?.areas().to_vec(),
    };
    if method == Method::Svc && models.svc.is_none() {
        return Err(missing());
    }
    let labels = labels_of(test)?;
    let truth: Vec<usize> = labels
        .iter()
        .map(|l| {
            areas.binary_search(l).map_err(|_| {
                Error::format(format!(
                    "test set {name} has label {l}, unknown to the models"
                ))
            })
        })
        .collect::<Result<_>>()?;
    let windows: Vec<(usize, usize)> = runs(&labels)
        .into_iter()
        .flat_map(|(s, e)| (0..(e - s) / t).map(move |k| (s + k * t, s + (k + 1) * t)))
        .collect();

    let started = Instant::now();
    let scores = match method {
        Method::OneD => snapshot_scores(test, |x| score_1d(models.one_d.as_ref().unwrap(), x))?,
        _ => snapshot_scores(test, |x| score_md(models.md.as_ref().unwrap(), x))?,
    };
    let entry = |mode, pairs: Vec<(usize, usize)>, elapsed: f64| {
        ReportEntry::from_pairs(
            method,
            mode,
            name,
            areas.len(),
            &pairs,
            elapsed / test.len().max(1) as f64,
        )
    };
    let out = if method.per_snapshot() {
        let pred: Vec<usize> = scores
            .iter()
            .map(|s| argmax(s).expect("non-empty scores"))
            .collect();
        let elapsed = started.elapsed().as_secs_f64();
        let single = truth.iter().copied().zip(pred.iter().copied()).collect();
        let voted = windows
            .iter()
            .map(|&(s, e)| {
                let ids: Vec<AreaId> = pred[s..e].iter().map(|&k| areas[k]).collect();
                let winner = majority_vote(&ids)?;
                Ok((
                    truth[s],
                    areas
                        .binary_search(&winner)
                        .expect("vote among known areas"),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        vec![
            entry(WindowMode::Single, single, elapsed),
            entry(WindowMode::Vote(t), voted, elapsed),
        ]
    } else {
        let pairs = windows
            .iter()
            .map(|&(s, e)| {
                let z = sum_scores(&scores[s..e]);
                let k = match method {
                    Method::MaxSim => argmax(&z.z).expect("non-empty scores"),
                    _ => {
                        let id = predict_svc(models.svc.as_ref().unwrap(), &z)?;
                        areas
                            .binary_search(&id)
                            .expect("svc classes are the model areas")
                    }
                };
                Ok((truth[s], k))
            })
            .collect::<Result<Vec<_>>>()?;
        vec![entry(
            WindowMode::Window(t),
            pairs,
            started.elapsed().as_secs_f64(),
        )]
    };
    Ok(out)
}

fn labels_of(d: &Dataset) -> Result<Vec<AreaId>> {
    d.snapshots()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.label()
                .ok_or_else(|| Error::format(format!("snapshot {i} is unlabeled")))
        })
        .collect()
}

/// Half-open ranges of equal consecutive labels.
fn runs(labels: &[AreaId]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=labels.len() {
        if i == labels.len() || labels[i] != labels[start] {
            out.push((start, i));
            start = i;
        }
    }
    out
}

fn snapshot_scores<F>(d: &Dataset, score: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&MagnitudeVector) -> Result<Vec<f64>> + Sync + Send,
{
    let mags = d.magnitudes()?;
    mags.par_iter().map(score).collect()
}

/// Same summation order as `classify::similarity_of`.
fn sum_scores(rows: &[Vec<f64>]) -> SimilarityVector {
    let mut z = vec![0.0; rows[0].len()];
    for r in rows {
        z.iter_mut().zip(r).for_each(|(a, v)| *a += v);
    }
    SimilarityVector { z }
}
