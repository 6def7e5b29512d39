//! Binary soft-margin SVM dual solved by SMO with maximal-violating-pair selection.

const TAU: f64 = 1e-12;
const CACHE_FLOATS: usize = 1 << 25;

pub(crate) fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

/// Solution of `min ½ αᵀQα − eᵀα` s.t. `0 ≤ α ≤ C`, `yᵀα = 0`.
#[derive(Debug, Clone)]
pub(crate) struct Solution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub n_iter: usize,
    pub converged: bool,
}

struct RowCache<'a> {
    x: &'a [&'a [f64]],
    gamma: f64,
    rows: Vec<Option<Vec<f64>>>,
    held: usize,
    cap: usize,
}

impl<'a> RowCache<'a> {
    fn new(x: &'a [&'a [f64]], gamma: f64) -> Self {
        let n = x.len();
        RowCache {
            x,
            gamma,
            rows: vec![None; n],
            held: 0,
            cap: (CACHE_FLOATS / n.max(1)).max(2),
        }
    }

    fn fill(&mut self, i: usize) {
        if self.rows[i].is_some() {
            return;
        }
        if self.held >= self.cap {
            self.rows.iter_mut().for_each(|r| *r = None);
            self.held = 0;
        }
        let xi = self.x[i];
        self.rows[i] = Some(self.x.iter().map(|xj| rbf(xi, xj, self.gamma)).collect());
        self.held += 1;
    }

    fn pair(&mut self, i: usize, j: usize) -> (&[f64], &[f64]) {
        self.fill(i);
        self.fill(j);
        if self.rows[i].is_none() {
            // j's fill evicted i
            self.fill(i);
        }
        (
            self.rows[i].as_deref().unwrap(),
            self.rows[j].as_deref().unwrap(),
        )
    }
}

/// `y` entries are ±1.
pub(crate) fn solve(
    x: &[&[f64]],
    y: &[f64],
    gamma: f64,
    c: f64,
    tol: f64,
    max_iter: usize,
) -> Solution {
    let n = x.len();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut cache = RowCache::new(x, gamma);
    let mut n_iter = 0;
    let mut converged = false;
    loop {
        let (mut i, mut g_max) = (usize::MAX, f64::NEG_INFINITY);
        let (mut j, mut g_min) = (usize::MAX, f64::INFINITY);
        for t in 0..n {
            let v = -y[t] * grad[t];
            let up = if y[t] > 0.0 {
                alpha[t] < c
            } else {
                alpha[t] > 0.0
            };
            let low = if y[t] > 0.0 {
                alpha[t] > 0.0
            } else {
                alpha[t] < c
            };
            if up && v > g_max {
                g_max = v;
                i = t;
            }
            if low && v < g_min {
                g_min = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || g_max - g_min < tol {
            converged = true;
            break;
        }
        if n_iter >= max_iter {
            break;
        }
        n_iter += 1;

        let (ki, kj) = cache.pair(i, j);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        // Q_ij = y_i y_j K_ij, K_ii = K_jj = 1
        if y[i] != y[j] {
            let quad = (2.0 + 2.0 * ki[j]).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let quad = (2.0 - 2.0 * ki[j]).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
        }
    }
    Solution {
        bias: -rho(&alpha, &grad, y, c),
        alpha,
        n_iter,
        converged,
    }
}

fn rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum) = (0usize, 0.0);
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum += yg;
        }
    }
    if free > 0 {
        sum / free as f64
    } else {
        (ub + lb) / 2.0
    }
}
