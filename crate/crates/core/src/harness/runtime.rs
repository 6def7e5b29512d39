//! Scoring-time comparison of the per-bin and joint model sets.

use std::hint::black_box;
use std::time::Instant;

use crate::classify::{score_1d, score_md, AreaModelSet1D, AreaModelSetMD};
use crate::error::{Error, Result};
use crate::model::MagnitudeVector;

const REPETITIONS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuntimeComparison {
    /// Median per-snapshot seconds of `score_1d`.
    pub seconds_1d: f64,
    /// Median per-snapshot seconds of `score_md`.
    pub seconds_md: f64,
}

impl RuntimeComparison {
    /// How many times slower per-bin scoring is than joint scoring.
    pub fn ratio(&self) -> f64 {
        self.seconds_1d / self.seconds_md
    }
}

fn per_snapshot<F: Fn(&MagnitudeVector) -> Result<Vec<f64>>>(
    probe: &[MagnitudeVector],
    score: F,
) -> Result<f64> {
    let start = Instant::now();
    for x in probe {
        black_box(score(black_box(x))?);
    }
    Ok(start.elapsed().as_secs_f64() / probe.len() as f64)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// Serial timing: one warm-up pass each, then the median of five passes.
pub fn compare_runtime(
    models_1d: &AreaModelSet1D,
    models_md: &AreaModelSetMD,
    probe: &[MagnitudeVector],
) -> Result<RuntimeComparison> {
    if probe.is_empty() {
        return Err(Error::arg(
            "compare_runtime needs at least one probe vector",
        ));
    }
    let one = |x: &MagnitudeVector| score_1d(models_1d, x);
    let joint = |x: &MagnitudeVector| score_md(models_md, x);
    per_snapshot(probe, one)?;
    per_snapshot(probe, joint)?;
    let mut t1 = Vec::with_capacity(REPETITIONS);
    let mut tm = Vec::with_capacity(REPETITIONS);
    for _ in 0..REPETITIONS {
        t1.push(per_snapshot(probe, one)?);
        tm.push(per_snapshot(probe, joint)?);
    }
    Ok(RuntimeComparison {
        seconds_1d: median(t1),
        seconds_md: median(tm),
    })
}
