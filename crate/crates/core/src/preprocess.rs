//! Frequency-domain low-pass filtering and factor-2 decimation.
//!
//! The receiver reports the CIR at twice the pulse bandwidth, so half of the
//! spectrum carries only noise. The filter keeps the `output_bins` lowest
//! frequency DFT coefficients (symmetric around DC) and inverse-transforms at
//! the output length. For 50 → 25 the retained band is `{0..=12} ∪ {38..=49}`.
//! No taper is applied; the operation is exactly linear.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::model::{CirSnapshot, Dataset, PROCESSED_BINS, RAW_BINS};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PreprocessConfig {
    pub input_bins: usize,
    pub output_bins: usize,
    /// Drop the DC coefficient before the inverse transform.
    pub dc_centering: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            input_bins: RAW_BINS,
            output_bins: PROCESSED_BINS,
            dc_centering: false,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.output_bins == 0 || self.input_bins != 2 * self.output_bins {
            return Err(Error::arg(format!(
                "input_bins ({}) must be twice a positive output_bins ({})",
                self.input_bins, self.output_bins
            )));
        }
        Ok(())
    }
}

/// Keeps the `out_len` lowest-frequency coefficients of `bins` and returns the
/// band-limited signal sampled at every second input position.
///
/// Forward DFT is unnormalized; the inverse is scaled by `1 / (2 * out_len)`,
/// i.e. the usual `1/N_out` times the decimation factor, so DC amplitude is kept.
/// For even `out_len` the two coefficients at `±out_len/2` are averaged into the
/// output Nyquist bin.
pub fn lowpass_decimate(bins: &[Complex64], out_len: usize) -> Result<Vec<Complex64>> {
    let n = bins.len();
    if out_len == 0 || n != 2 * out_len {
        return Err(Error::format(format!(
            "cannot decimate {n} bins to {out_len}"
        )));
    }
    let mut planner = FftPlanner::<f64>::new();
    let mut spec = bins.to_vec();
    planner.plan_fft_forward(n).process(&mut spec);

    let mut band = vec![Complex64::new(0.0, 0.0); out_len];
    let pos = out_len.div_ceil(2); // indices 0..pos are non-negative frequencies
    band[..pos].copy_from_slice(&spec[..pos]);
    let neg = out_len / 2; // number of strictly negative frequencies
    for j in 0..neg {
        band[out_len - 1 - j] = spec[n - 1 - j];
    }
    if out_len % 2 == 0 {
        let half = out_len / 2;
        band[half] = 0.5 * (spec[half] + spec[n - half]);
    }
    planner.plan_fft_inverse(out_len).process(&mut band);
    let scale = 1.0 / n as f64;
    band.iter_mut().for_each(|c| *c *= scale);
    Ok(band)
}

/// Filters and decimates one raw snapshot to the processed representation.
pub fn lowpass_downsample(snapshot: &CirSnapshot, cfg: &PreprocessConfig) -> Result<CirSnapshot> {
    cfg.validate()?;
    if snapshot.is_processed() {
        return Err(Error::State("snapshot is already processed".into()));
    }
    if snapshot.bins().len() != cfg.input_bins {
        return Err(Error::format(format!(
            "expected {} raw bins, got {}",
            cfg.input_bins,
            snapshot.bins().len()
        )));
    }
    let bins = if cfg.dc_centering {
        let mean = snapshot.bins().iter().sum::<Complex64>() / snapshot.bins().len() as f64;
        let centered: Vec<Complex64> = snapshot.bins().iter().map(|b| b - mean).collect();
        lowpass_decimate(&centered, cfg.output_bins)?
    } else {
        lowpass_decimate(snapshot.bins(), cfg.output_bins)?
    };
    CirSnapshot::new(bins, snapshot.label(), snapshot.seq(), true)
}

/// Applies [`lowpass_downsample`] to every snapshot, keeping order, labels and areas.
pub fn preprocess_dataset(dataset: &Dataset, cfg: &PreprocessConfig) -> Result<Dataset> {
    if dataset.processed() == Some(true) {
        return Err(Error::State("dataset is already processed".into()));
    }
    let snaps = dataset
        .snapshots()
        .iter()
        .map(|s| lowpass_downsample(s, cfg))
        .collect::<Result<Vec<_>>>()?;
    Dataset::with_areas(snaps, dataset.areas().clone(), dataset.meta())
}
