//! The three shipped benchmark scenarios.
//!
//! * `separable`: each area has its own dominant tap; high SNR, little jitter.
//! * `los`: one dominant tap shared by all areas plus weak area-specific
//!   taps, low SNR and timing jitter of about one bin.
//! * `nlos`: no dominant path; a shared cluster of weak taps whose delays
//!   drift slightly and whose gains vary from area to area.
//!
//! Tap layouts are drawn once from ChaCha8 generators with the fixed seeds
//! below, so the scenarios are constants of the crate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AreaProfile, PathTap, SimConfig};
use crate::model::{AreaId, DEFAULT_AREAS};

pub const SCENARIO_NAMES: [&str; 3] = ["separable", "los", "nlos"];

const SEPARABLE_LAYOUT_SEED: u64 = 0x5e9a;
const LOS_LAYOUT_SEED: u64 = 0x105;
const NLOS_LAYOUT_SEED: u64 = 0x4105;

/// Seeds of the snapshot streams used when a scenario is generated as is.
const SEPARABLE_SEED: u64 = 11;
const LOS_SEED: u64 = 12;
const NLOS_SEED: u64 = 13;

const SNAPSHOTS_PER_AREA: usize = 1000;

/// Seed for [`perturb_layout`](super::perturb_layout) in the layout-change benchmark.
pub const LAYOUT_CHANGE_SEED: u64 = 1001;

fn area(c: usize) -> AreaId {
    AreaId(c as u32)
}

fn separable() -> SimConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(SEPARABLE_LAYOUT_SEED);
    let profiles = (0..DEFAULT_AREAS)
        .map(|c| {
            let mut taps = vec![PathTap::new(4.0 + 3.5 * c as f64, 1.0, 0.05)];
            for _ in 0..2 {
                taps.push(PathTap::new(
                    rng.random_range(2.0..46.0),
                    rng.random_range(0.05..0.15),
                    0.3,
                ));
            }
            AreaProfile {
                area: area(c),
                taps,
                snr_db: 30.0,
            }
        })
        .collect();
    SimConfig {
        profiles,
        snapshots_per_area: SNAPSHOTS_PER_AREA,
        global_shift_std: 0.1,
        seed: SEPARABLE_SEED,
        layout_perturbation: 0.0,
    }
}

fn los() -> SimConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(LOS_LAYOUT_SEED);
    let profiles = (0..DEFAULT_AREAS)
        .map(|c| {
            let mut taps = vec![PathTap::new(8.0, 1.0, 0.1)];
            for _ in 0..4 {
                taps.push(PathTap::new(
                    rng.random_range(10.0..42.0),
                    rng.random_range(0.1..0.3),
                    0.4,
                ));
            }
            AreaProfile {
                area: area(c),
                taps,
                snr_db: 5.0,
            }
        })
        .collect();
    SimConfig {
        profiles,
        snapshots_per_area: SNAPSHOTS_PER_AREA,
        global_shift_std: 1.0,
        seed: LOS_SEED,
        layout_perturbation: 0.0,
    }
}

fn nlos() -> SimConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(NLOS_LAYOUT_SEED);
    let cluster: Vec<(f64, f64)> = (0..5)
        .map(|_| (rng.random_range(10.0..30.0), rng.random_range(0.2..0.5)))
        .collect();
    let profiles = (0..DEFAULT_AREAS)
        .map(|c| {
            let drift = 0.5 * c as f64;
            let taps = cluster
                .iter()
                .map(|&(d, a)| PathTap::new(d + drift, a * rng.random_range(0.9..1.1), 0.3))
                .collect();
            AreaProfile {
                area: area(c),
                taps,
                snr_db: 8.0,
            }
        })
        .collect();
    SimConfig {
        profiles,
        snapshots_per_area: SNAPSHOTS_PER_AREA,
        global_shift_std: 1.0,
        seed: NLOS_SEED,
        layout_perturbation: 0.0,
    }
}

/// `separable`, `los` and `nlos`, in that order.
pub fn benchmark_scenarios() -> Vec<(&'static str, SimConfig)> {
    vec![("separable", separable()), ("los", los()), ("nlos", nlos())]
}

pub fn scenario(name: &str) -> Option<SimConfig> {
    match name {
        "separable" => Some(separable()),
        "los" => Some(los()),
        "nlos" => Some(nlos()),
        _ => None,
    }
}
