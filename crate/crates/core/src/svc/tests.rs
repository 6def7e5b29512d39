use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::*;

fn sv(z: Vec<f64>) -> SimilarityVector {
    SimilarityVector { z }
}

fn gram(x: &[Vec<f64>], gamma: f64) -> DMatrix<f64> {
    let n = x.len();
    DMatrix::from_fn(n, n, |i, j| {
        let d2: f64 = x[i].iter().zip(&x[j]).map(|(a, b)| (a - b).powi(2)).sum();
        (-gamma * d2).exp()
    })
}

fn dual_objective(alpha: &[f64], y: &[f64], k: &DMatrix<f64>) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * k[(i, j)];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Euclidean projection onto `{0 ≤ α ≤ c, yᵀα = 0}` by bisection on the multiplier.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |lam: f64| -> Vec<f64> {
        v.iter()
            .zip(y)
            .map(|(vi, yi)| (vi - lam * yi).clamp(0.0, c))
            .collect()
    };
    let g = |lam: f64| -> f64 { at(lam).iter().zip(y).map(|(a, yi)| a * yi).sum() };
    let (mut lo, mut hi) = (-1e3, 1e3);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Accelerated projected gradient on the dual.
fn qp_oracle(y: &[f64], k: &DMatrix<f64>, c: f64) -> Vec<f64> {
    let n = y.len();
    let q = DMatrix::from_fn(n, n, |i, j| y[i] * y[j] * k[(i, j)]);
    let lip = SymmetricEigen::new(q.clone()).eigenvalues.max().max(1e-12);
    let mut a = vec![0.0; n];
    let mut prev = a.clone();
    let mut t = 1.0f64;
    for _ in 0..30_000 {
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let mom = (t - 1.0) / t_next;
        let w: Vec<f64> = (0..n).map(|i| a[i] + mom * (a[i] - prev[i])).collect();
        let step: Vec<f64> = (0..n)
            .map(|i| {
                let grad = (0..n).map(|j| q[(i, j)] * w[j]).sum::<f64>() - 1.0;
                w[i] - grad / lip
            })
            .collect();
        prev = std::mem::replace(&mut a, project(&step, y, c));
        t = t_next;
    }
    a
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn random_problem(rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = rng.random_range(6..=50);
    let d = rng.random_range(1..=4);
    let sep: f64 = rng.random_range(0.0..3.0);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..n {
        let label = if i % 2 == 0 { 1.0 } else { -1.0 };
        x.push(
            (0..d)
                .map(|_| normal(rng) + label * sep / 2.0)
                .collect::<Vec<f64>>(),
        );
        y.push(label);
    }
    (x, y)
}

#[test]
fn smo_matches_qp_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let (x, y) = random_problem(&mut rng);
        let gamma = rng.random_range(0.1..2.0);
        let c = rng.random_range(0.5..5.0);
        let refs: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
        let sol = smo::solve(&refs, &y, gamma, c, 1e-3, 100_000);
        assert!(sol.converged);
        let k = gram(&x, gamma);
        let ours = dual_objective(&sol.alpha, &y, &k);
        let truth = dual_objective(&qp_oracle(&y, &k, c), &y, &k);
        assert!(
            (ours - truth).abs() <= 1e-4 * truth.abs(),
            "{ours} vs {truth}"
        );
    }
}

#[test]
fn kkt_and_feasibility_at_convergence() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let tol = 1e-3;
    for _ in 0..10 {
        let (x, y) = random_problem(&mut rng);
        let (gamma, c) = (0.7, 1.0);
        let refs: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
        let sol = smo::solve(&refs, &y, gamma, c, tol, 100_000);
        let k = gram(&x, gamma);
        let balance: f64 = sol.alpha.iter().zip(&y).map(|(a, yi)| a * yi).sum();
        assert!(balance.abs() < 1e-9);
        for i in 0..x.len() {
            let a = sol.alpha[i];
            assert!((0.0..=c).contains(&a));
            let f = (0..x.len())
                .map(|j| sol.alpha[j] * y[j] * k[(i, j)])
                .sum::<f64>()
                + sol.bias;
            let margin = y[i] * f;
            if a == 0.0 {
                assert!(margin >= 1.0 - 10.0 * tol, "{margin}");
            } else if a == c {
                assert!(margin <= 1.0 + 10.0 * tol, "{margin}");
            } else {
                assert!((margin - 1.0).abs() <= 10.0 * tol, "{margin}");
            }
        }
    }
}

#[test]
fn gram_matrix_is_symmetric_psd() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x: Vec<Vec<f64>> = (0..100)
        .map(|_| (0..12).map(|_| rng.random_range(-50.0..0.0)).collect())
        .collect();
    let gamma = resolve_gamma(&x, &SvcConfig::default()).unwrap();
    let k = gram(&x, gamma);
    for i in 0..100 {
        for j in 0..100 {
            assert!((k[(i, j)] - k[(j, i)]).abs() <= 1e-12);
            assert_eq!(k[(i, j)], smo::rbf(&x[i], &x[j], gamma));
        }
    }
    assert!(SymmetricEigen::new(k).eigenvalues.min() >= -1e-8);
}

#[test]
fn gamma_rules() {
    let cfg = SvcConfig::default();
    assert_eq!(
        resolve_gamma(&[vec![3.0, 3.0], vec![3.0, 3.0]], &cfg).unwrap(),
        0.5
    );
    assert!((resolve_gamma(&[vec![-1.0, 0.0], vec![0.0, 1.0]], &cfg).unwrap() - 1.0).abs() < 1e-15);
    let fixed = SvcConfig {
        gamma_mode: GammaMode::Fixed,
        gamma_value: 0.25,
        ..cfg.clone()
    };
    assert_eq!(resolve_gamma(&[vec![1.0]], &fixed).unwrap(), 0.25);
    assert!(resolve_gamma::<Vec<f64>>(&[], &cfg).is_err());
}

#[test]
fn gamma_matches_online_variance() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x: Vec<Vec<f64>> = (0..300)
        .map(|_| (0..7).map(|_| rng.random_range(-900.0..-100.0)).collect())
        .collect();
    // Welford
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for v in x.iter().flatten() {
        n += 1.0;
        let delta = v - mean;
        mean += delta / n;
        m2 += delta * (v - mean);
    }
    let expect = 1.0 / (7.0 * m2 / n);
    let got = resolve_gamma(&x, &SvcConfig::default()).unwrap();
    assert!((got - expect).abs() <= 1e-12 * expect);
}

#[test]
fn separable_line_is_learned() {
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for i in 0..20 {
        let e = i as f64 * 0.01;
        features.push(sv(vec![-1.0 - e]));
        labels.push(AreaId(0));
        features.push(sv(vec![1.0 + e]));
        labels.push(AreaId(1));
    }
    let m = train_svc(&features, &labels, &SvcConfig::default()).unwrap();
    for (f, l) in features.iter().zip(&labels) {
        assert_eq!(predict_svc(&m, f).unwrap(), *l);
    }
    let machine = &m.machines()[0];
    assert!(machine.dual_coef().iter().sum::<f64>().abs() < 1e-9);
    assert!(machine.dual_coef().iter().all(|c| c.abs() <= 1.0));
}

#[test]
fn single_class_always_predicts_it() {
    let features = vec![sv(vec![1.0, 2.0]), sv(vec![3.0, 4.0])];
    let m = train_svc(&features, &[AreaId(7), AreaId(7)], &SvcConfig::default()).unwrap();
    assert!(m.machines().is_empty());
    assert_eq!(predict_svc(&m, &sv(vec![-100.0, 5.0])).unwrap(), AreaId(7));
}

fn blobs(rng: &mut ChaCha8Rng, per: usize, spread: f64) -> (Vec<SimilarityVector>, Vec<AreaId>) {
    let centres = [[0.0, 0.0, 0.0], [10.0, 0.0, 0.0], [0.0, 10.0, 0.0]];
    let mut f = Vec::new();
    let mut l = Vec::new();
    for (k, c) in centres.iter().enumerate() {
        for _ in 0..per {
            f.push(sv(c.iter().map(|m| m + spread * normal(rng)).collect()));
            l.push(AreaId(k as u32));
        }
    }
    (f, l)
}

#[test]
fn three_blobs_train_accurately() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (f, l) = blobs(&mut rng, 60, 1.0);
    let m = train_svc(&f, &l, &SvcConfig::default()).unwrap();
    assert_eq!(m.machines().len(), 3);
    let correct = f
        .iter()
        .zip(&l)
        .filter(|(x, y)| predict_svc(&m, x).unwrap() == **y)
        .count();
    assert!(correct as f64 >= 0.99 * f.len() as f64);
}

#[test]
fn deep_support_vector_matches_oracle_side() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (f, l) = blobs(&mut rng, 20, 2.5);
    let (f, l): (Vec<_>, Vec<_>) = f.into_iter().zip(l).filter(|(_, l)| l.0 < 2).unzip();
    let cfg = SvcConfig {
        gamma_mode: GammaMode::Fixed,
        gamma_value: 0.1,
        ..SvcConfig::default()
    };
    let m = train_svc(&f, &l, &cfg).unwrap();
    let x: Vec<Vec<f64>> = f.iter().map(|s| s.z.clone()).collect();
    let y: Vec<f64> = l
        .iter()
        .map(|a| if a.0 == 0 { 1.0 } else { -1.0 })
        .collect();
    let k = gram(&x, 0.1);
    let alpha = qp_oracle(&y, &k, 1.0);
    let free: Vec<usize> = (0..x.len())
        .filter(|&i| alpha[i] > 1e-6 && alpha[i] < 1.0 - 1e-6)
        .collect();
    let f_no_bias = |i: usize| {
        (0..x.len())
            .map(|j| alpha[j] * y[j] * k[(i, j)])
            .sum::<f64>()
    };
    let bias = free.iter().map(|&i| y[i] - f_no_bias(i)).sum::<f64>() / free.len() as f64;
    // the class-0 support vector the oracle places deepest in class 0's region
    let deep = (0..x.len())
        .filter(|&i| y[i] > 0.0 && alpha[i] > 1e-6)
        .max_by(|&a, &b| f_no_bias(a).total_cmp(&f_no_bias(b)))
        .unwrap();
    assert!(f_no_bias(deep) + bias > 0.0);
    assert_eq!(predict_svc(&m, &f[deep]).unwrap(), AreaId(0));
}

#[test]
fn vote_and_decision_ties_go_low() {
    let machine = |pos: u32, neg: u32, bias: f64| BinaryMachine {
        pos: AreaId(pos),
        neg: AreaId(neg),
        support: vec![],
        coef: vec![],
        bias,
        n_iter: 0,
        converged: true,
    };
    // (0,1)→0, (0,2)→2, (1,2)→1: one vote each
    let m = SvcModel {
        classes: vec![AreaId(0), AreaId(1), AreaId(2)],
        machines: vec![machine(0, 1, 1.0), machine(0, 2, -1.0), machine(1, 2, 1.0)],
        gamma: 1.0,
        dim: 1,
        config: SvcConfig::default(),
    };
    assert_eq!(predict_svc(&m, &sv(vec![0.0])).unwrap(), AreaId(0));
    let tie = SvcModel {
        classes: vec![AreaId(4), AreaId(9)],
        machines: vec![machine(4, 9, -1e-13)],
        gamma: 1.0,
        dim: 1,
        config: SvcConfig::default(),
    };
    assert_eq!(predict_svc(&tie, &sv(vec![0.0])).unwrap(), AreaId(4));
}

#[test]
fn errors() {
    let cfg = SvcConfig::default();
    let f = vec![sv(vec![1.0]), sv(vec![2.0])];
    let l = vec![AreaId(0), AreaId(1)];
    let m = train_svc(&f, &l, &cfg).unwrap();
    assert!(matches!(
        predict_svc(&m, &sv(vec![1.0, 2.0])),
        Err(Error::Argument(_))
    ));
    assert!(matches!(
        train_svc(&[sv(vec![f64::NAN]), sv(vec![1.0])], &l, &cfg),
        Err(Error::Argument(_))
    ));
    assert!(matches!(
        train_svc_for(&[AreaId(0), AreaId(1), AreaId(2)], &f, &l, &cfg),
        Err(Error::Training(msg)) if msg.contains("class 2")
    ));
    assert!(train_svc(
        &f,
        &l,
        &SvcConfig {
            c_penalty: 0.0,
            ..cfg.clone()
        }
    )
    .is_err());
    assert!(train_svc(&[sv(vec![1.0]), sv(vec![1.0, 2.0])], &l, &cfg).is_err());
}

#[test]
fn deterministic_and_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (f, l) = blobs(&mut rng, 30, 4.0);
    let a = train_svc(&f, &l, &SvcConfig::default()).unwrap();
    let b = train_svc(&f, &l, &SvcConfig::default()).unwrap();
    assert_eq!(a, b);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.svc");
    save_svc(&a, &path).unwrap();
    let c = load_svc(&path).unwrap();
    assert_eq!(a, c);
    for x in &f {
        assert_eq!(predict_svc(&a, x).unwrap(), predict_svc(&c, x).unwrap());
    }
}

#[test]
fn iteration_cap_is_reported() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (f, l) = blobs(&mut rng, 40, 6.0);
    let m = train_svc(
        &f,
        &l,
        &SvcConfig {
            max_iter: 3,
            ..SvcConfig::default()
        },
    )
    .unwrap();
    assert!(m.machines().iter().all(|mm| mm.n_iter() <= 3));
    assert!(m.machines().iter().any(|mm| !mm.converged()));
}
