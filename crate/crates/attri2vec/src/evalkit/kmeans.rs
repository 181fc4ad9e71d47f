//! K-means with k-means++ seeding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ initial centers.
fn init_centers(x: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut centers = Vec::with_capacity(k);
    centers.push(x[rng.gen_range(0..x.len())].clone());
    let mut dists: Vec<f64> = x.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = dists.iter().sum();
        let next = if total <= 0.0 {
            // all points coincide with a center; fall back to uniform
            x[rng.gen_range(0..x.len())].clone()
        } else {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = x.len() - 1;
            for (i, &d) in dists.iter().enumerate() {
                target -= d;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            x[chosen].clone()
        };
        for (d, p) in dists.iter_mut().zip(x) {
            *d = d.min(sq_dist(p, &next));
        }
        centers.push(next);
    }
    centers
}

/// Lloyd iterations from a k-means++ seed. Returns an assignment per point.
/// A run that produces an empty cluster is retried with a reseeded RNG.
pub fn kmeans(x: &[Vec<f64>], k: usize, max_iters: usize, seed: u64) -> Result<Vec<u32>> {
    if k < 2 {
        return Err(Error::Eval("k must be >= 2".into()));
    }
    if x.len() < k {
        return Err(Error::Eval(format!(
            "need at least k={k} points, got {}",
            x.len()
        )));
    }
    let dim = x[0].len();
    'attempt: for attempt in 0..16u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt * 0x9e3779b9));
        let mut centers = init_centers(x, k, &mut rng);
        let mut assign = vec![0u32; x.len()];
        for _ in 0..max_iters {
            let mut changed = false;
            for (i, p) in x.iter().enumerate() {
                let best = (0..k)
                    .min_by(|&a, &b| {
                        sq_dist(p, &centers[a])
                            .partial_cmp(&sq_dist(p, &centers[b]))
                            .unwrap()
                    })
                    .unwrap() as u32;
                if assign[i] != best {
                    assign[i] = best;
                    changed = true;
                }
            }
            let mut counts = vec![0usize; k];
            let mut sums = vec![vec![0.0; dim]; k];
            for (p, &a) in x.iter().zip(&assign) {
                counts[a as usize] += 1;
                for (s, &v) in sums[a as usize].iter_mut().zip(p) {
                    *s += v;
                }
            }
            if counts.iter().any(|&c| c == 0) {
                continue 'attempt;
            }
            for (c, (sum, &count)) in centers.iter_mut().zip(sums.iter().zip(&counts)) {
                for (cv, &s) in c.iter_mut().zip(sum) {
                    *cv = s / count as f64;
                }
            }
            if !changed {
                break;
            }
        }
        return Ok(assign);
    }
    Err(Error::Eval("k-means kept producing empty clusters".into()))
}
