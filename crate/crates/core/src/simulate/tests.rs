use super::*;

fn profile(taps: Vec<PathTap>, snr_db: f64) -> AreaProfile {
    AreaProfile {
        area: AreaId(0),
        taps,
        snr_db,
    }
}

fn config(profiles: Vec<AreaProfile>, shift: f64) -> SimConfig {
    SimConfig {
        profiles,
        snapshots_per_area: 10,
        global_shift_std: shift,
        seed: 1,
        layout_perturbation: 0.0,
    }
}

fn draw(p: &AreaProfile, cfg: &SimConfig, index: u64) -> CirSnapshot {
    let mut rng = SnapshotRng::for_index(cfg.seed, index);
    generate_snapshot(p, cfg, &mut rng, &mut SimStats::default()).unwrap()
}

fn mags(s: &CirSnapshot) -> Vec<f64> {
    s.bins().iter().map(|c| c.norm()).collect()
}

#[test]
fn noiseless_single_tap_is_a_delta() {
    let p = profile(vec![PathTap::new(10.0, 1.0, 0.0)], f64::INFINITY);
    let cfg = config(vec![p.clone()], 0.0);
    let s = draw(&p, &cfg, 0);
    assert!(!s.is_processed());
    assert_eq!(s.label(), Some(AreaId(0)));
    let m = mags(&s);
    assert!((m[10] - 1.0).abs() < 1e-12);
    for (k, v) in m.iter().enumerate().filter(|(k, _)| *k != 10) {
        assert!(*v <= 1e-12, "bin {k}: {v}");
    }
}

#[test]
fn fractional_tap_obeys_sinc_envelope() {
    let p = profile(vec![PathTap::new(20.3, 2.0, 0.0)], f64::INFINITY);
    let cfg = config(vec![p.clone()], 0.0);
    let m = mags(&draw(&p, &cfg, 3));
    for (n, v) in m.iter().enumerate() {
        let dist = (n as f64 - 20.3).abs();
        assert!(*v <= 2.0 * (1.0f64).min(1.0 / (PI * dist)) + 1e-12);
        let expect = 2.0 * sinc(n as f64 - 20.3).abs();
        assert!((v - expect).abs() < 1e-12);
    }
}

#[test]
fn global_phase_is_invisible_in_modulus() {
    let p = profile(
        vec![PathTap::new(5.0, 1.0, 0.0), PathTap::new(12.5, 0.4, 0.0)],
        f64::INFINITY,
    );
    let cfg = config(vec![p.clone()], 0.0);
    let a = draw(&p, &cfg, 0);
    let b = draw(&p, &cfg, 1);
    assert_ne!(a.bins(), b.bins());
    for (x, y) in mags(&a).iter().zip(mags(&b)) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn only_the_phase_stream_differs() {
    let p = profile(
        vec![PathTap::new(8.0, 1.0, 0.3), PathTap::new(19.2, 0.5, 0.8)],
        10.0,
    );
    let cfg = config(vec![p.clone()], 0.7);
    for i in 0..20 {
        let mut a = SnapshotRng::for_index(9, i);
        let mut b = SnapshotRng {
            phase: SnapshotRng::for_index(9, i + 1000).phase,
            body: a.body.clone(),
        };
        let mut st = SimStats::default();
        let sa = generate_snapshot(&p, &cfg, &mut a, &mut st).unwrap();
        let sb = generate_snapshot(&p, &cfg, &mut b, &mut st).unwrap();
        assert_ne!(sa.bins(), sb.bins());
        for (x, y) in mags(&sa).iter().zip(mags(&sb)) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn noise_variance_matches_configuration() {
    let p = profile(
        vec![PathTap::new(10.0, 1.0, 0.0), PathTap::new(30.0, 0.5, 0.0)],
        20.0,
    );
    let cfg = config(vec![p.clone()], 0.0);
    let expect = p.noise_variance();
    assert!((expect - 1.25 / 50.0 / 100.0).abs() < 1e-18);
    let n = 10_000;
    let mut power = vec![0.0; RAW_BINS];
    for i in 0..n {
        for (acc, b) in power.iter_mut().zip(draw(&p, &cfg, i).bins()) {
            *acc += b.norm_sqr();
        }
    }
    for (k, total) in power
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != 10 && *k != 30)
    {
        let var = total / n as f64;
        assert!(
            (var / expect - 1.0).abs() < 0.05,
            "bin {k}: {var} vs {expect}"
        );
    }
}

#[test]
fn energy_is_conserved_for_integer_taps() {
    let taps: Vec<PathTap> = [(3.0, 0.9), (11.0, 0.4), (27.0, 1.3), (44.0, 0.05)]
        .iter()
        .map(|&(d, a)| PathTap::new(d, a, 0.0))
        .collect();
    let p = profile(taps, f64::INFINITY);
    let cfg = config(vec![p.clone()], 0.0);
    let s = draw(&p, &cfg, 7);
    let e: f64 = s.bins().iter().map(|c| c.norm_sqr()).sum();
    assert!((e - p.energy()).abs() < 1e-9);
}

#[test]
fn shifted_taps_are_clipped_and_counted() {
    let p = profile(vec![PathTap::new(49.5, 1.0, 0.0)], f64::INFINITY);
    let cfg = config(vec![p.clone()], 0.0);
    let mut st = SimStats::default();
    let s = generate_snapshot(&p, &cfg, &mut SnapshotRng::for_index(0, 0), &mut st).unwrap();
    assert_eq!(st.truncated_taps, 1);
    assert!((s.bins()[49].norm() - 1.0).abs() < 1e-12);

    let cfg = config(vec![profile(vec![PathTap::new(25.0, 1.0, 0.0)], 10.0)], 0.5);
    let (_, st) = generate_dataset_with_stats(&cfg).unwrap();
    assert_eq!(st.truncated_taps, 0);
    let cfg = config(vec![profile(vec![PathTap::new(1.0, 1.0, 0.0)], 10.0)], 3.0);
    let (_, st) = generate_dataset_with_stats(&cfg).unwrap();
    assert!(st.truncated_taps > 0);
}

fn twelve(n: usize) -> SimConfig {
    let profiles = (0..12)
        .map(|c| AreaProfile {
            area: AreaId(c),
            taps: vec![
                PathTap::new(2.0 + 3.0 * c as f64, 1.0, 0.1),
                PathTap::new(40.0, 0.3, 0.5),
            ],
            snr_db: 15.0,
        })
        .collect();
    SimConfig {
        profiles,
        snapshots_per_area: n,
        global_shift_std: 0.3,
        seed: 77,
        layout_perturbation: 0.0,
    }
}

#[test]
fn datasets_are_deterministic_and_counted() {
    let cfg = twelve(100);
    let a = generate_dataset(&cfg).unwrap();
    let b = generate_dataset(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 1200);
    assert_eq!(a.areas().len(), 12);
    assert_eq!(a.processed(), Some(false));
    for (i, s) in a.snapshots().iter().enumerate() {
        assert_eq!(s.label(), Some(AreaId((i / 100) as u32)));
        assert_eq!(s.seq(), i as i64);
    }
    let c = generate_dataset(&cfg.clone().with_seed(78)).unwrap();
    assert_ne!(a, c);
}

#[test]
fn snapshots_depend_only_on_their_index() {
    let cfg = twelve(30);
    let d = generate_dataset(&cfg).unwrap();
    for i in [0usize, 29, 30, 200, 359] {
        let s = draw(&cfg.profiles[i / 30], &cfg, i as u64);
        assert_eq!(s.bins(), d.snapshots()[i].bins());
    }
}

#[test]
fn label_histogram_matches_random_configs() {
    use std::collections::BTreeMap;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let k = rng.random_range(1..8);
        let n = rng.random_range(1..40);
        let mut ids: Vec<u32> = (0..50).collect();
        for i in 0..k {
            let j = rng.random_range(i..50);
            ids.swap(i, j);
        }
        let profiles = ids[..k]
            .iter()
            .map(|&a| AreaProfile {
                area: AreaId(a),
                taps: vec![PathTap::new(5.0, 1.0, 0.0)],
                snr_db: 5.0,
            })
            .collect();
        let cfg = SimConfig {
            profiles,
            snapshots_per_area: n,
            global_shift_std: 0.0,
            seed: 3,
            layout_perturbation: 0.0,
        };
        let d = generate_dataset(&cfg).unwrap();
        let mut hist = BTreeMap::new();
        for s in d.snapshots() {
            *hist.entry(s.label().unwrap()).or_insert(0usize) += 1;
        }
        assert_eq!(hist.len(), k);
        assert!(hist.values().all(|&c| c == n));
        assert!(ids[..k].iter().all(|a| hist.contains_key(&AreaId(*a))));
    }
}

#[test]
fn zero_perturbation_is_identity() {
    let cfg = twelve(5);
    assert_eq!(perturb_layout(&cfg, 0.0, 9).unwrap(), cfg);
}

#[test]
fn perturbation_is_deterministic_and_keeps_first_tap() {
    let cfg = twelve(5);
    let a = perturb_layout(&cfg, 1.0, 4).unwrap();
    assert_eq!(a, perturb_layout(&cfg, 1.0, 4).unwrap());
    assert_ne!(a, perturb_layout(&cfg, 1.0, 5).unwrap());
    assert_eq!(a.layout_perturbation, 1.0);
    let m = 0.3;
    let b = perturb_layout(&cfg, m, 4).unwrap();
    for (p, q) in cfg.profiles.iter().zip(&b.profiles) {
        assert_eq!(p.taps[0], q.taps[0]);
        for (t, u) in p.taps.iter().zip(&q.taps).skip(1) {
            assert!((u.delay - t.delay).abs() <= m + 1e-12);
            assert!((u.amplitude / t.amplitude - 1.0).abs() <= m + 1e-12);
            assert_eq!(u.phase_jitter_std, t.phase_jitter_std);
        }
    }
    assert!(perturb_layout(&cfg, 1.5, 0).is_err());
    assert!(perturb_layout(&cfg, -0.1, 0).is_err());
}

#[test]
fn amplitude_ratios_are_uniform() {
    let m = 0.4;
    let profiles = (0..20)
        .map(|c| AreaProfile {
            area: AreaId(c),
            taps: (0..101)
                .map(|k| PathTap::new(k as f64 * 0.45, 1.0 + k as f64 * 0.01, 0.0))
                .collect(),
            snr_db: 10.0,
        })
        .collect();
    let cfg = SimConfig {
        profiles,
        snapshots_per_area: 1,
        global_shift_std: 0.0,
        seed: 0,
        layout_perturbation: 0.0,
    };
    let out = perturb_layout(&cfg, m, 21).unwrap();
    let mut ratios: Vec<f64> = cfg
        .profiles
        .iter()
        .zip(&out.profiles)
        .flat_map(|(p, q)| {
            p.taps
                .iter()
                .zip(&q.taps)
                .skip(1)
                .map(|(t, u)| u.amplitude / t.amplitude)
        })
        .collect();
    ratios.sort_by(f64::total_cmp);
    let n = ratios.len() as f64;
    let cdf = |x: f64| ((x - (1.0 - m)) / (2.0 * m)).clamp(0.0, 1.0);
    let d = ratios
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            (cdf(x) - i as f64 / n)
                .abs()
                .max(((i + 1) as f64 / n - cdf(x)).abs())
        })
        .fold(0.0, f64::max);
    // asymptotic Kolmogorov critical value at alpha = 0.01
    assert!(d < 1.628 / n.sqrt(), "D = {d}");
}

#[test]
fn invalid_configs_are_rejected() {
    let ok = twelve(1);
    assert!(ok.validate().is_ok());
    let mut c = ok.clone();
    c.profiles[0].taps[0].delay = 50.0;
    assert!(c.validate().is_err());
    let mut c = ok.clone();
    c.profiles[1].taps[0].amplitude = -1.0;
    assert!(c.validate().is_err());
    let mut c = ok.clone();
    c.profiles[2].area = AreaId(0);
    assert!(c.validate().is_err());
    let mut c = ok.clone();
    c.profiles[0].snr_db = f64::NAN;
    assert!(generate_dataset(&c).is_err());
    let mut c = ok.clone();
    c.profiles[0].taps.clear();
    assert!(c.validate().is_err());
    assert!(ok.clone().with_snapshots(0).validate().is_err());
    let mut c = ok;
    c.global_shift_std = -1.0;
    assert!(c.validate().is_err());
}

#[test]
fn shipped_scenarios() {
    let all = benchmark_scenarios();
    assert_eq!(
        all.iter().map(|(n, _)| *n).collect::<Vec<_>>(),
        SCENARIO_NAMES
    );
    for (name, cfg) in &all {
        cfg.validate().unwrap();
        assert_eq!(cfg.profiles.len(), 12);
        assert_eq!(scenario(name).as_ref(), Some(cfg));
    }
    let seeds: std::collections::BTreeSet<u64> = all.iter().map(|(_, c)| c.seed).collect();
    assert_eq!(seeds.len(), 3);
    assert!(scenario("indoor").is_none());
}

#[test]
fn configs_round_trip_through_json() {
    let mut cfg = twelve(3);
    cfg.profiles[4].snr_db = f64::INFINITY;
    let text = serde_json::to_string(&cfg).unwrap();
    let back: SimConfig = serde_json::from_str(&text).unwrap();
    assert_eq!(back, cfg);
    for (_, c) in benchmark_scenarios() {
        let back: SimConfig =
            serde_json::from_str(&serde_json::to_string_pretty(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
