//! Synthetic per-area multipath CIR generator.
//!
//! A snapshot is a sum of band-limited pulses, one per tap, at
//! `delay + shift` with `shift ~ N(0, global_shift_std)` drawn per snapshot,
//! each rotated by its own phase wobble, plus circular complex noise; the
//! whole vector is then multiplied by a uniform random phase.
//!
//! Every snapshot owns two ChaCha8 streams keyed by its index in the dataset,
//! one for the global phase and one for everything else, so generation is
//! order-independent and the magnitudes never depend on the phase stream.

mod scenarios;

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AreaId, CirSnapshot, Dataset, RAW_BINS};

pub use scenarios::{benchmark_scenarios, scenario, LAYOUT_CHANGE_SEED, SCENARIO_NAMES};

/// One propagation path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathTap {
    /// Raw-bin units, fractional allowed.
    pub delay: f64,
    pub amplitude: f64,
    /// Per-snapshot phase wobble (radians).
    #[serde(default)]
    pub phase_jitter_std: f64,
}

impl PathTap {
    pub fn new(delay: f64, amplitude: f64, phase_jitter_std: f64) -> Self {
        PathTap {
            delay,
            amplitude,
            phase_jitter_std,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaProfile {
    pub area: AreaId,
    pub taps: Vec<PathTap>,
    /// Signal-to-noise ratio per snapshot; `+inf` means noiseless (`null` in JSON).
    #[serde(with = "snr_json")]
    pub snr_db: f64,
}

impl AreaProfile {
    pub fn validate(&self) -> Result<()> {
        if self.taps.is_empty() {
            return Err(Error::arg(format!("area {} has no taps", self.area)));
        }
        for t in &self.taps {
            if !(t.delay.is_finite() && (0.0..RAW_BINS as f64).contains(&t.delay)) {
                return Err(Error::arg(format!(
                    "area {}: tap delay {} outside [0, {RAW_BINS})",
                    self.area, t.delay
                )));
            }
            if !(t.amplitude.is_finite() && t.amplitude >= 0.0) {
                return Err(Error::arg(format!(
                    "area {}: tap amplitude {} is invalid",
                    self.area, t.amplitude
                )));
            }
            if !(t.phase_jitter_std.is_finite() && t.phase_jitter_std >= 0.0) {
                return Err(Error::arg(format!(
                    "area {}: phase jitter {} is invalid",
                    self.area, t.phase_jitter_std
                )));
            }
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::arg(format!(
                "area {}: snr_db {} is invalid",
                self.area, self.snr_db
            )));
        }
        Ok(())
    }

    /// `Σ amplitude²`.
    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t.amplitude * t.amplitude).sum()
    }

    /// Variance of the complex noise added to each raw bin.
    pub fn noise_variance(&self) -> f64 {
        if self.snr_db == f64::INFINITY {
            return 0.0;
        }
        self.energy() / RAW_BINS as f64 / 10f64.powf(self.snr_db / 10.0)
    }
}

mod snr_json {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub profiles: Vec<AreaProfile>,
    pub snapshots_per_area: usize,
    /// Std of the per-snapshot timing shift, in raw bins.
    pub global_shift_std: f64,
    pub seed: u64,
    /// Magnitude of the last [`perturb_layout`] applied (0 for a base layout).
    #[serde(default)]
    pub layout_perturbation: f64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.profiles.is_empty() {
            return Err(Error::arg("a simulation needs at least one area profile"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for p in &self.profiles {
            p.validate()?;
            if !seen.insert(p.area) {
                return Err(Error::arg(format!("area {} appears twice", p.area)));
            }
        }
        if self.snapshots_per_area == 0 {
            return Err(Error::arg("snapshots_per_area must be at least 1"));
        }
        if !(self.global_shift_std.is_finite() && self.global_shift_std >= 0.0) {
            return Err(Error::arg(
                "global_shift_std must be finite and non-negative",
            ));
        }
        if !(0.0..=1.0).contains(&self.layout_perturbation) {
            return Err(Error::arg("layout_perturbation must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_snapshots(mut self, n: usize) -> Self {
        self.snapshots_per_area = n;
        self
    }
}

/// The two random streams of one snapshot.
#[derive(Debug, Clone)]
pub struct SnapshotRng {
    pub phase: ChaCha8Rng,
    pub body: ChaCha8Rng,
}

impl SnapshotRng {
    /// Streams `2·index` and `2·index + 1` of the generator keyed by `seed`.
    pub fn for_index(seed: u64, index: u64) -> Self {
        let mut phase = ChaCha8Rng::seed_from_u64(seed);
        let mut body = phase.clone();
        phase.set_stream(2 * index);
        body.set_stream(2 * index + 1);
        SnapshotRng { phase, body }
    }
}

/// Counters collected while generating.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimStats {
    /// Taps whose shifted position fell outside the window and was clipped.
    pub truncated_taps: u64,
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Draws one raw labeled snapshot (seq 0) of `profile`.
pub fn generate_snapshot(
    profile: &AreaProfile,
    cfg: &SimConfig,
    rng: &mut SnapshotRng,
    stats: &mut SimStats,
) -> Result<CirSnapshot> {
    profile.validate()?;
    let body = &mut rng.body;
    let shift = if cfg.global_shift_std > 0.0 {
        Normal::new(0.0, cfg.global_shift_std)
            .map_err(|e| Error::arg(e.to_string()))?
            .sample(body)
    } else {
        0.0
    };
    let mut bins = vec![Complex64::new(0.0, 0.0); RAW_BINS];
    let last = (RAW_BINS - 1) as f64;
    for tap in &profile.taps {
        let jitter: f64 = if tap.phase_jitter_std > 0.0 {
            tap.phase_jitter_std * Distribution::<f64>::sample(&StandardNormal, body)
        } else {
            0.0
        };
        let mut centre = tap.delay + shift;
        if !(0.0..=last).contains(&centre) {
            stats.truncated_taps += 1;
            centre = centre.clamp(0.0, last);
        }
        let rot = Complex64::from_polar(tap.amplitude, jitter);
        for (n, b) in bins.iter_mut().enumerate() {
            *b += rot * sinc(n as f64 - centre);
        }
    }
    let sigma = (profile.noise_variance() / 2.0).sqrt();
    if sigma > 0.0 {
        for b in bins.iter_mut() {
            let re: f64 = StandardNormal.sample(body);
            let im: f64 = StandardNormal.sample(body);
            *b += Complex64::new(sigma * re, sigma * im);
        }
    }
    let phi = rng.phase.random_range(0.0..2.0 * PI);
    let rot = Complex64::from_polar(1.0, phi);
    bins.iter_mut().for_each(|b| *b *= rot);
    CirSnapshot::new(bins, Some(profile.area), 0, false)
}

/// Contiguous blocks of `snapshots_per_area` snapshots per area, in profile order.
pub fn generate_dataset(cfg: &SimConfig) -> Result<Dataset> {
    generate_dataset_with_stats(cfg).map(|(d, _)| d)
}

pub fn generate_dataset_with_stats(cfg: &SimConfig) -> Result<(Dataset, SimStats)> {
    cfg.validate()?;
    let n = cfg.snapshots_per_area;
    let total = cfg.profiles.len() * n;
    let out: Vec<(CirSnapshot, SimStats)> = (0..total)
        .into_par_iter()
        .map(|i| {
            let mut rng = SnapshotRng::for_index(cfg.seed, i as u64);
            let mut stats = SimStats::default();
            let s = generate_snapshot(&cfg.profiles[i / n], cfg, &mut rng, &mut stats)?;
            Ok((s.with_seq(i as i64), stats))
        })
        .collect::<Result<_>>()?;
    let truncated_taps = out.iter().map(|(_, s)| s.truncated_taps).sum();
    let snaps = out.into_iter().map(|(s, _)| s).collect();
    let areas = cfg.profiles.iter().map(|p| p.area).collect();
    let meta = format!(
        "simulated: {} areas x {n} snapshots, seed {}",
        cfg.profiles.len(),
        cfg.seed
    );
    Ok((
        Dataset::with_areas(snaps, areas, meta)?,
        SimStats { truncated_taps },
    ))
}

/// Emulates a rearranged room: every tap after the first has its amplitude
/// scaled by `1 + m·u` and its delay moved by `m·v` bins, `u, v ~ U[-1, 1]`.
pub fn perturb_layout(cfg: &SimConfig, magnitude: f64, seed: u64) -> Result<SimConfig> {
    if !(0.0..=1.0).contains(&magnitude) {
        return Err(Error::arg(format!(
            "layout perturbation {magnitude} outside [0, 1]"
        )));
    }
    let mut out = cfg.clone();
    if magnitude == 0.0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_delay = RAW_BINS as f64 - 1e-9;
    for p in &mut out.profiles {
        for t in p.taps.iter_mut().skip(1) {
            let u: f64 = rng.random_range(-1.0..=1.0);
            let v: f64 = rng.random_range(-1.0..=1.0);
            t.amplitude *= 1.0 + magnitude * u;
            t.delay = (t.delay + magnitude * v).clamp(0.0, max_delay);
        }
    }
    out.layout_perturbation = magnitude;
    Ok(out)
}

#[cfg(test)]
mod tests;
