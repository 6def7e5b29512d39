use nalgebra::DMatrix;
use rand::Rng;

/// Hard cluster assignment from k-means++ seeding followed by Lloyd iterations.
/// `data` holds one sample per column.
pub(crate) fn kmeans_assign<R: Rng>(data: &DMatrix<f64>, k: usize, rng: &mut R) -> Vec<usize> {
    let n = data.ncols();
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    let col = |i: usize| data.column(i).iter().copied().collect::<Vec<f64>>();
    let dist2 = |c: &[f64], i: usize| -> f64 {
        data.column(i)
            .iter()
            .zip(c)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    };

    centers.push(col(rng.random_range(0..n)));
    let mut closest: Vec<f64> = (0..n).map(|i| dist2(&centers[0], i)).collect();
    while centers.len() < k {
        let total: f64 = closest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, d) in closest.iter().enumerate() {
                if target < *d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = col(pick);
        for (i, d) in closest.iter_mut().enumerate() {
            *d = d.min(dist2(&c, i));
        }
        centers.push(c);
    }

    let mut labels = vec![0usize; n];
    for iter in 0..300 {
        let mut changed = false;
        for (i, label) in labels.iter_mut().enumerate() {
            let mut best = (f64::INFINITY, 0);
            for (j, c) in centers.iter().enumerate() {
                let d = dist2(c, i);
                if d < best.0 {
                    best = (d, j);
                }
            }
            if *label != best.1 || iter == 0 {
                changed |= *label != best.1;
                *label = best.1;
            }
        }
        if !changed && iter > 0 {
            break;
        }
        let d = data.nrows();
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(data.column(i).iter()) {
                *s += v;
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                centers[j] = sums[j].iter().map(|s| s / counts[j] as f64).collect();
            }
        }
    }
    labels
}
