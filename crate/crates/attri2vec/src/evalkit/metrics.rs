//! Clustering and ranking metrics: Hungarian-matched accuracy, pairwise
//! F-value, NMI and rank-based AUC.

use std::collections::HashMap;

/// Minimum-cost assignment on a square cost matrix; returns the column
/// assigned to each row. Standard O(n^3) Hungarian algorithm with potentials.
pub fn hungarian_min(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cost[0].len();
    assert!(n <= m, "need rows <= cols");
    const INF: f64 = f64::INFINITY;

    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1]; // row matched to column j (1-based)
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for j in 1..=m {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Clustering accuracy under the optimal one-to-one cluster-to-class map.
pub fn hungarian_accuracy(clusters: &[u32], classes: &[u32]) -> f64 {
    assert_eq!(clusters.len(), classes.len());
    let n = clusters.len();
    if n == 0 {
        return 0.0;
    }
    let num_clusters = clusters.iter().max().map_or(0, |&c| c as usize + 1);
    let num_classes = classes.iter().max().map_or(0, |&c| c as usize + 1);
    let k = num_clusters.max(num_classes);
    let mut counts = vec![vec![0u64; k]; k];
    for (&cl, &cs) in clusters.iter().zip(classes) {
        counts[cl as usize][cs as usize] += 1;
    }
    let max_count = *counts.iter().flatten().max().unwrap() as f64;
    let cost: Vec<Vec<f64>> = counts
        .iter()
        .map(|row| row.iter().map(|&c| max_count - c as f64).collect())
        .collect();
    let assignment = hungarian_min(&cost);
    let matched: u64 = assignment
        .iter()
        .enumerate()
        .map(|(cl, &cs)| counts[cl][cs])
        .sum();
    matched as f64 / n as f64
}

fn entropy(labels: &[u32], n: f64) -> f64 {
    let mut counts: HashMap<u32, u64> = HashMap::new();
    for &l in labels {
        *counts.entry(l).or_insert(0) += 1;
    }
    counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information between two labelings, in nats.
fn mutual_information(a: &[u32], b: &[u32]) -> f64 {
    let n = a.len() as f64;
    let mut joint: HashMap<(u32, u32), u64> = HashMap::new();
    let mut ca: HashMap<u32, u64> = HashMap::new();
    let mut cb: HashMap<u32, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_insert(0) += 1;
        *ca.entry(x).or_insert(0) += 1;
        *cb.entry(y).or_insert(0) += 1;
    }
    let mut mi = 0.0;
    for (&(x, y), &c) in &joint {
        let pxy = c as f64 / n;
        let px = ca[&x] as f64 / n;
        let py = cb[&y] as f64 / n;
        mi += pxy * (pxy / (px * py)).ln();
    }
    mi.max(0.0)
}

/// How to combine the two entropies in the NMI denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NmiNorm {
    Arithmetic,
    Geometric,
}

/// Normalized mutual information between two partitions; symmetric and
/// invariant under label permutation.
pub fn nmi(a: &[u32], b: &[u32], norm: NmiNorm) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let ha = entropy(a, n);
    let hb = entropy(b, n);
    if ha == 0.0 && hb == 0.0 {
        // both partitions are single clusters: identical
        return 1.0;
    }
    let denom = match norm {
        NmiNorm::Arithmetic => (ha + hb) / 2.0,
        NmiNorm::Geometric => (ha * hb).sqrt(),
    };
    if denom == 0.0 {
        return 0.0;
    }
    (mutual_information(a, b) / denom).clamp(0.0, 1.0)
}

/// Pairwise F-measure: precision/recall F1 over same-cluster point pairs.
pub fn pairwise_f(clusters: &[u32], classes: &[u32]) -> f64 {
    assert_eq!(clusters.len(), classes.len());
    let n = clusters.len();
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for i in 0..n {
        for j in (i + 1)..n {
            let same_cluster = clusters[i] == clusters[j];
            let same_class = classes[i] == classes[j];
            match (same_cluster, same_class) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                _ => {}
            }
        }
    }
    if tp == 0 {
        return 0.0;
    }
    let precision = tp as f64 / (tp + fp) as f64;
    let recall = tp as f64 / (tp + fn_) as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Micro- and macro-averaged F1 for single-label multi-class predictions.
pub fn f1_scores(predicted: &[u32], actual: &[u32], num_classes: usize) -> (f64, f64) {
    assert_eq!(predicted.len(), actual.len());
    let mut tp = vec![0u64; num_classes];
    let mut fp = vec![0u64; num_classes];
    let mut fn_ = vec![0u64; num_classes];
    for (&p, &a) in predicted.iter().zip(actual) {
        if p == a {
            tp[p as usize] += 1;
        } else {
            fp[p as usize] += 1;
            fn_[a as usize] += 1;
        }
    }
    let (stp, sfp, sfn): (u64, u64, u64) = (
        tp.iter().sum(),
        fp.iter().sum(),
        fn_.iter().sum(),
    );
    let micro = if 2 * stp + sfp + sfn == 0 {
        0.0
    } else {
        2.0 * stp as f64 / (2 * stp + sfp + sfn) as f64
    };
    let macro_ = (0..num_classes)
        .map(|c| {
            let denom = 2 * tp[c] + fp[c] + fn_[c];
            if denom == 0 {
                0.0
            } else {
                2.0 * tp[c] as f64 / denom as f64
            }
        })
        .sum::<f64>()
        / num_classes as f64;
    (micro, macro_)
}

/// Rank-based (Mann-Whitney) AUC with midrank tie handling.
pub fn auc(positive_scores: &[f64], negative_scores: &[f64]) -> f64 {
    let np = positive_scores.len();
    let nn = negative_scores.len();
    assert!(np > 0 && nn > 0, "need both classes");
    let mut all: Vec<(f64, bool)> = positive_scores
        .iter()
        .map(|&s| (s, true))
        .chain(negative_scores.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        // midrank for the tie group [i, j)
        let rank = (i + 1 + j) as f64 / 2.0;
        for item in &all[i..j] {
            if item.1 {
                rank_sum_pos += rank;
            }
        }
        i = j;
    }
    (rank_sum_pos - np as f64 * (np as f64 + 1.0) / 2.0) / (np as f64 * nn as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hungarian_simple_assignment() {
        let cost = vec![
            vec![4.0, 1.0, 3.0],
            vec![2.0, 0.0, 5.0],
            vec![3.0, 2.0, 2.0],
        ];
        let a = hungarian_min(&cost);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        assert_eq!(total, 5.0);
    }

    #[test]
    fn identical_partitions_perfect_scores() {
        let classes = vec![0u32, 0, 1, 1, 2, 2];
        // same partition under a relabeling
        let clusters = vec![2u32, 2, 0, 0, 1, 1];
        assert_eq!(hungarian_accuracy(&clusters, &classes), 1.0);
        assert_eq!(nmi(&clusters, &classes, NmiNorm::Arithmetic), 1.0);
        assert_eq!(pairwise_f(&clusters, &classes), 1.0);
    }

    #[test]
    fn single_cluster_balanced_classes() {
        let classes = vec![0u32, 1, 2, 3, 0, 1, 2, 3];
        let clusters = vec![0u32; 8];
        assert_eq!(hungarian_accuracy(&clusters, &classes), 0.25);
        assert!(nmi(&clusters, &classes, NmiNorm::Arithmetic) < 1e-12);
    }

    #[test]
    fn nmi_symmetric_and_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a: Vec<u32> = (0..200).map(|_| rng.gen_range(0..4)).collect();
        let b: Vec<u32> = (0..200).map(|_| rng.gen_range(0..3)).collect();
        let v1 = nmi(&a, &b, NmiNorm::Arithmetic);
        let v2 = nmi(&b, &a, NmiNorm::Arithmetic);
        assert!((v1 - v2).abs() < 1e-12);
        // permute labels of a
        let a_perm: Vec<u32> = a.iter().map(|&x| (x + 2) % 4).collect();
        let v3 = nmi(&a_perm, &b, NmiNorm::Arithmetic);
        assert!((v1 - v3).abs() < 1e-12);
    }

    #[test]
    fn geometric_vs_arithmetic_close_on_balanced() {
        let a = vec![0u32, 0, 1, 1];
        let b = vec![0u32, 1, 0, 1];
        let g = nmi(&a, &b, NmiNorm::Geometric);
        let ar = nmi(&a, &b, NmiNorm::Arithmetic);
        // equal entropies make the two normalizations coincide
        assert!((g - ar).abs() < 1e-12);
    }

    #[test]
    fn micro_f1_equals_accuracy_single_label() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let actual: Vec<u32> = (0..300).map(|_| rng.gen_range(0..5)).collect();
        let predicted: Vec<u32> = (0..300).map(|_| rng.gen_range(0..5)).collect();
        let (micro, _) = f1_scores(&predicted, &actual, 5);
        let acc = predicted
            .iter()
            .zip(&actual)
            .filter(|(p, a)| p == a)
            .count() as f64
            / 300.0;
        assert!((micro - acc).abs() < 1e-12);
    }

    #[test]
    fn auc_perfect_and_random() {
        let pos = vec![2.0, 3.0, 4.0];
        let neg = vec![0.0, 1.0, 1.5];
        assert_eq!(auc(&pos, &neg), 1.0);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pos: Vec<f64> = (0..5000).map(|_| rng.gen::<f64>()).collect();
        let neg: Vec<f64> = (0..5000).map(|_| rng.gen::<f64>()).collect();
        let a = auc(&pos, &neg);
        assert!((a - 0.5).abs() < 0.02, "auc={a}");
    }

    #[test]
    fn auc_monotone_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pos: Vec<f64> = (0..100).map(|_| rng.gen::<f64>() + 0.2).collect();
        let neg: Vec<f64> = (0..150).map(|_| rng.gen::<f64>()).collect();
        let a1 = auc(&pos, &neg);
        let t = |v: &f64| (3.0 * v + 1.0).exp();
        let pos2: Vec<f64> = pos.iter().map(t).collect();
        let neg2: Vec<f64> = neg.iter().map(t).collect();
        let a2 = auc(&pos2, &neg2);
        assert!((a1 - a2).abs() < 1e-12);
    }

    #[test]
    fn auc_with_ties_is_half() {
        let pos = vec![1.0; 10];
        let neg = vec![1.0; 10];
        assert!((auc(&pos, &neg) - 0.5).abs() < 1e-12);
    }
}
