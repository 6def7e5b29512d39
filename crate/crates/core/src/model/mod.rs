//! Domain types shared by every stage: CIR snapshots, datasets, magnitude
//! vectors and labeled snapshot windows.

mod io;

use std::collections::BTreeSet;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{load_dataset, save_dataset, DatasetFormat};

/// Number of delay bins read from the receiver.
pub const RAW_BINS: usize = 50;
/// Number of delay bins after low-pass filtering and decimation.
pub const PROCESSED_BINS: usize = 25;
/// Number of reference areas in the default layout.
pub const DEFAULT_AREAS: usize = 12;

/// Index of a reference area.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AreaId(pub u32);

impl AreaId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for AreaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One complex channel impulse response.
#[derive(Debug, Clone, PartialEq)]
pub struct CirSnapshot {
    bins: Vec<Complex64>,
    label: Option<AreaId>,
    seq: i64,
    processed: bool,
}

impl CirSnapshot {
    /// Builds a snapshot, checking that the bin count matches the processing state
    /// (50 raw bins or 25 processed bins).
    pub fn new(
        bins: Vec<Complex64>,
        label: Option<AreaId>,
        seq: i64,
        processed: bool,
    ) -> Result<Self> {
        let expected = if processed { PROCESSED_BINS } else { RAW_BINS };
        if bins.len() != expected {
            return Err(Error::format(format!(
                "{} snapshot must have {expected} bins, got {}",
                if processed { "processed" } else { "raw" },
                bins.len()
            )));
        }
        Ok(CirSnapshot {
            bins,
            label,
            seq,
            processed,
        })
    }

    pub fn bins(&self) -> &[Complex64] {
        &self.bins
    }

    pub fn label(&self) -> Option<AreaId> {
        self.label
    }

    pub fn seq(&self) -> i64 {
        self.seq
    }

    pub fn is_processed(&self) -> bool {
        self.processed
    }

    /// Same snapshot with a different label.
    pub fn with_label(mut self, label: Option<AreaId>) -> Self {
        self.label = label;
        self
    }

    /// Same snapshot with a different sequence index.
    pub fn with_seq(mut self, seq: i64) -> Self {
        self.seq = seq;
        self
    }
}

/// Bin magnitudes `|h[m]|` of a processed snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudeVector(Vec<f64>);

impl MagnitudeVector {
    pub fn new(mags: Vec<f64>) -> Result<Self> {
        if let Some(bad) = mags.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::arg(format!(
                "magnitude entries must be finite and >= 0, got {bad}"
            )));
        }
        Ok(MagnitudeVector(mags))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for MagnitudeVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// An ordered collection of snapshots sharing one processing state.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    snapshots: Vec<CirSnapshot>,
    areas: BTreeSet<AreaId>,
    meta: String,
}

impl Dataset {
    /// Builds a dataset whose area set is the set of labels present.
    pub fn new(snapshots: Vec<CirSnapshot>, meta: impl Into<String>) -> Result<Self> {
        let areas = snapshots.iter().filter_map(|s| s.label).collect();
        Self::with_areas(snapshots, areas, meta)
    }

    /// Builds a dataset with an explicit area set (which may contain areas
    /// without snapshots).
    pub fn with_areas(
        snapshots: Vec<CirSnapshot>,
        areas: BTreeSet<AreaId>,
        meta: impl Into<String>,
    ) -> Result<Self> {
        if let Some(first) = snapshots.first() {
            let processed = first.processed;
            if let Some((i, _)) = snapshots
                .iter()
                .enumerate()
                .find(|(_, s)| s.processed != processed)
            {
                return Err(Error::format(format!(
                    "snapshot {i} has processed={} but snapshot 0 has processed={processed}",
                    !processed
                )));
            }
        }
        for (i, pair) in snapshots.windows(2).enumerate() {
            if pair[1].seq <= pair[0].seq {
                return Err(Error::format(format!(
                    "sequence index must be strictly increasing: snapshot {} has seq {} after {}",
                    i + 1,
                    pair[1].seq,
                    pair[0].seq
                )));
            }
        }
        if let Some(s) = snapshots
            .iter()
            .find(|s| s.label.is_some_and(|l| !areas.contains(&l)))
        {
            return Err(Error::format(format!(
                "label {} not in the area set",
                s.label.unwrap()
            )));
        }
        Ok(Dataset {
            snapshots,
            areas,
            meta: meta.into(),
        })
    }

    pub fn empty() -> Self {
        Dataset {
            snapshots: Vec::new(),
            areas: BTreeSet::new(),
            meta: String::new(),
        }
    }

    pub fn snapshots(&self) -> &[CirSnapshot] {
        &self.snapshots
    }

    pub fn areas(&self) -> &BTreeSet<AreaId> {
        &self.areas
    }

    pub fn meta(&self) -> &str {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    /// Processing state shared by all snapshots; `None` for an empty dataset.
    pub fn processed(&self) -> Option<bool> {
        self.snapshots.first().map(|s| s.processed)
    }

    pub fn into_snapshots(self) -> Vec<CirSnapshot> {
        self.snapshots
    }

    /// Magnitude vectors of every snapshot, in order.
    pub fn magnitudes(&self) -> Result<Vec<MagnitudeVector>> {
        self.snapshots.iter().map(magnitude).collect()
    }
}

/// A window Ω of consecutive magnitude vectors treated as one sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotWindow {
    members: Vec<MagnitudeVector>,
    label: Option<AreaId>,
    origin: usize,
}

impl SnapshotWindow {
    pub fn new(
        members: Vec<MagnitudeVector>,
        label: Option<AreaId>,
        origin: usize,
    ) -> Result<Self> {
        let Some(first) = members.first() else {
            return Err(Error::arg("a window needs at least one member"));
        };
        let dim = first.len();
        if members.iter().any(|m| m.len() != dim) {
            return Err(Error::arg("window members must share one dimension"));
        }
        Ok(SnapshotWindow {
            members,
            label,
            origin,
        })
    }

    pub fn members(&self) -> &[MagnitudeVector] {
        &self.members
    }

    pub fn label(&self) -> Option<AreaId> {
        self.label
    }

    /// Index of the first member in the source dataset.
    pub fn origin(&self) -> usize {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.members[0].len()
    }
}

/// Complex modulus of every bin of a processed snapshot.
pub fn magnitude(snapshot: &CirSnapshot) -> Result<MagnitudeVector> {
    if !snapshot.processed {
        return Err(Error::State(
            "magnitude() needs a processed (25-bin) snapshot; run preprocess first".into(),
        ));
    }
    Ok(MagnitudeVector(
        snapshot.bins.iter().map(|c| c.norm()).collect(),
    ))
}

/// Cuts a processed dataset into windows of `t` snapshots, advancing by
/// `stride` inside each contiguous run of equal labels. Windows never span two
/// runs; a run shorter than `t` produces nothing.
pub fn slice_windows(dataset: &Dataset, t: usize, stride: usize) -> Result<Vec<SnapshotWindow>> {
    if t == 0 || stride == 0 {
        return Err(Error::arg(format!(
            "window size and stride must be positive (T={t}, stride={stride})"
        )));
    }
    if dataset.processed() == Some(false) {
        return Err(Error::State(
            "slice_windows needs a processed dataset".into(),
        ));
    }
    let mags = dataset.magnitudes()?;
    let snaps = dataset.snapshots();
    let mut windows = Vec::new();
    let mut run_start = 0;
    while run_start < snaps.len() {
        let label = snaps[run_start].label;
        let mut run_end = run_start + 1;
        while run_end < snaps.len() && snaps[run_end].label == label {
            run_end += 1;
        }
        let mut start = run_start;
        while start + t <= run_end {
            windows.push(SnapshotWindow {
                members: mags[start..start + t].to_vec(),
                label,
                origin: start,
            });
            start += stride;
        }
        run_start = run_end;
    }
    Ok(windows)
}
