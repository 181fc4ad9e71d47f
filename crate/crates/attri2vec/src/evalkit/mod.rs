//! Evaluation protocols: node classification, clustering and link prediction.
//!
//! Classification trains an L2-regularized one-vs-rest logistic regression on
//! random splits and reports averaged Micro-/Macro-F1. Clustering runs
//! k-means and reports Hungarian-matched accuracy, pairwise F-value and NMI.
//! Link prediction builds edge features from embedding pairs, trains a binary
//! classifier against sampled non-edges and reports rank-based AUC.

pub mod kmeans;
pub mod logreg;
pub mod metrics;

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use metrics::NmiNorm;

/// Component-wise operators turning two node embeddings into an edge feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeFeatureOp {
    Average,
    Hadamard,
    WeightedL1,
    WeightedL2,
}

impl EdgeFeatureOp {
    pub fn name(&self) -> &'static str {
        match self {
            EdgeFeatureOp::Average => "average",
            EdgeFeatureOp::Hadamard => "hadamard",
            EdgeFeatureOp::WeightedL1 => "weighted-l1",
            EdgeFeatureOp::WeightedL2 => "weighted-l2",
        }
    }
}

impl std::str::FromStr for EdgeFeatureOp {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "average" | "avg" => EdgeFeatureOp::Average,
            "hadamard" => EdgeFeatureOp::Hadamard,
            "weighted-l1" | "l1" => EdgeFeatureOp::WeightedL1,
            "weighted-l2" | "l2" => EdgeFeatureOp::WeightedL2,
            other => return Err(Error::Config(format!("unknown edge operator {other}"))),
        })
    }
}

/// Component-wise edge feature for a node pair; symmetric in its arguments.
pub fn edge_features(a: &[f64], b: &[f64], op: EdgeFeatureOp) -> Vec<f64> {
    assert_eq!(a.len(), b.len(), "embedding dimensions differ");
    a.iter()
        .zip(b)
        .map(|(&x, &y)| match op {
            EdgeFeatureOp::Average => (x + y) / 2.0,
            EdgeFeatureOp::Hadamard => x * y,
            EdgeFeatureOp::WeightedL1 => (x - y).abs(),
            EdgeFeatureOp::WeightedL2 => (x - y) * (x - y),
        })
        .collect()
}

/// Result of one evaluation protocol run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: String,
    pub metrics: BTreeMap<String, f64>,
    pub split: String,
    pub seed: u64,
}

impl EvalReport {
    fn new(task: &str, split: String, seed: u64) -> Self {
        EvalReport {
            task: task.to_string(),
            metrics: BTreeMap::new(),
            split,
            seed,
        }
    }

    fn push(&mut self, name: &str, value: f64) {
        debug_assert!((0.0..=1.0 + 1e-12).contains(&value), "{name}={value}");
        self.metrics.insert(name.to_string(), value);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    /// Aligned two-column text table.
    pub fn render_table(&self) -> String {
        let width = self
            .metrics
            .keys()
            .map(|k| k.len())
            .max()
            .unwrap_or(0)
            .max(6);
        let mut out = format!("{} ({})\n", self.task, self.split);
        for (k, v) in &self.metrics {
            out.push_str(&format!("  {k:<width$}  {v:.4}\n"));
        }
        out
    }
}

const CLASSIFIER_LAMBDA: f64 = 1e-3;
const CLASSIFIER_ITERS: usize = 300;

/// Node classification on random train/test splits, averaged over `repeats`.
/// A split missing a class in its training part is resampled.
pub fn classify(
    x: &[Vec<f64>],
    y: &[u32],
    num_classes: usize,
    train_ratio: f64,
    repeats: usize,
    seed: u64,
) -> Result<EvalReport> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::Eval("empty or mismatched inputs".into()));
    }
    if !(train_ratio > 0.0 && train_ratio < 1.0) {
        return Err(Error::Eval("train ratio must be in (0, 1)".into()));
    }
    let n = x.len();
    let train_n = ((train_ratio * n as f64).round() as usize).clamp(1, n - 1);

    let mut micro_sum = 0.0;
    let mut macro_sum = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..repeats {
        let mut indices: Vec<usize> = (0..n).collect();
        // resample until the training part covers every class
        let mut tries = 0;
        loop {
            indices.shuffle(&mut rng);
            let seen: HashSet<u32> = indices[..train_n].iter().map(|&i| y[i]).collect();
            if seen.len() == num_classes {
                break;
            }
            tries += 1;
            if tries > 200 {
                return Err(Error::Eval(
                    "could not sample a training split covering every class".into(),
                ));
            }
        }
        let train_x: Vec<Vec<f64>> = indices[..train_n].iter().map(|&i| x[i].clone()).collect();
        let train_y: Vec<u32> = indices[..train_n].iter().map(|&i| y[i]).collect();
        let model = logreg::OneVsRest::fit(
            &train_x,
            &train_y,
            num_classes,
            CLASSIFIER_LAMBDA,
            CLASSIFIER_ITERS,
        )?;
        let predicted: Vec<u32> = indices[train_n..].iter().map(|&i| model.predict(&x[i])).collect();
        let actual: Vec<u32> = indices[train_n..].iter().map(|&i| y[i]).collect();
        let (micro, macro_) = metrics::f1_scores(&predicted, &actual, num_classes);
        micro_sum += micro;
        macro_sum += macro_;
    }

    let mut report = EvalReport::new(
        "classification",
        format!("{:.0}% train, {repeats} repeats", train_ratio * 100.0),
        seed,
    );
    report.push("micro-f1", micro_sum / repeats as f64);
    report.push("macro-f1", macro_sum / repeats as f64);
    Ok(report)
}

/// K-means clustering against class labels, averaged over `repeats` runs.
pub fn cluster(
    x: &[Vec<f64>],
    y: &[u32],
    k: usize,
    repeats: usize,
    seed: u64,
    nmi_norm: NmiNorm,
) -> Result<EvalReport> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::Eval("empty or mismatched inputs".into()));
    }
    let mut acc_sum = 0.0;
    let mut f_sum = 0.0;
    let mut nmi_sum = 0.0;
    for run in 0..repeats as u64 {
        let assign = kmeans::kmeans(x, k, 100, seed.wrapping_add(run * 7919))?;
        acc_sum += metrics::hungarian_accuracy(&assign, y);
        f_sum += metrics::pairwise_f(&assign, y);
        nmi_sum += metrics::nmi(&assign, y, nmi_norm);
    }
    let mut report = EvalReport::new(
        "clustering",
        format!("k={k}, {repeats} repeats"),
        seed,
    );
    report.push("accuracy", acc_sum / repeats as f64);
    report.push("f-value", f_sum / repeats as f64);
    report.push("nmi", nmi_sum / repeats as f64);
    Ok(report)
}

/// Link prediction: train a binary classifier on in-sample edges against
/// sampled non-edges, score out-of-sample edges against sampled non-edges,
/// report rank-based AUC.
///
/// `vectors[v]` is the embedding of node `v`; `train_nodes` / `test_nodes`
/// are the endpoint universes for negative sampling on each side. Only edges
/// present in `train_edges` are excluded when sampling non-edges.
#[allow(clippy::too_many_arguments)]
pub fn link_predict(
    train_edges: &[(u32, u32)],
    test_edges: &[(u32, u32)],
    vectors: &[Vec<f64>],
    train_nodes: &[u32],
    test_nodes: &[u32],
    op: EdgeFeatureOp,
    neg_ratio: f64,
    seed: u64,
) -> Result<EvalReport> {
    if train_edges.is_empty() || test_edges.is_empty() {
        return Err(Error::Eval("need nonempty train and test edges".into()));
    }
    if !(neg_ratio > 0.0) {
        return Err(Error::Eval("negative ratio must be positive".into()));
    }
    let known: HashSet<(u32, u32)> = train_edges
        .iter()
        .map(|&(a, b)| (a.min(b), a.max(b)))
        .collect();
    let test_set: HashSet<(u32, u32)> = test_edges
        .iter()
        .map(|&(a, b)| (a.min(b), a.max(b)))
        .collect();
    if !known.is_disjoint(&test_set) {
        return Err(Error::Eval("test edges overlap train edges".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample_non_edges = |count: usize, universe: &[u32], rng: &mut ChaCha8Rng| -> Result<Vec<(u32, u32)>> {
        if universe.len() < 2 {
            return Err(Error::Eval("not enough nodes to sample non-edges".into()));
        }
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0usize;
        while out.len() < count {
            attempts += 1;
            if attempts > count * 1000 {
                return Err(Error::Eval("non-edge sampling keeps hitting edges".into()));
            }
            let a = universe[rng.gen_range(0..universe.len())];
            let b = universe[rng.gen_range(0..universe.len())];
            if a == b {
                continue;
            }
            let key = (a.min(b), a.max(b));
            if known.contains(&key) {
                continue;
            }
            out.push(key);
        }
        Ok(out)
    };

    let n_train_neg = ((train_edges.len() as f64) * neg_ratio).round().max(1.0) as usize;
    let train_negs = sample_non_edges(n_train_neg, train_nodes, &mut rng)?;
    let n_test_neg = ((test_edges.len() as f64) * neg_ratio).round().max(1.0) as usize;
    let test_negs = sample_non_edges(n_test_neg, test_nodes, &mut rng)?;

    let feat = |&(a, b): &(u32, u32)| -> Vec<f64> {
        edge_features(&vectors[a as usize], &vectors[b as usize], op)
    };

    let mut x: Vec<Vec<f64>> = train_edges.iter().map(feat).collect();
    let mut y: Vec<f64> = vec![1.0; train_edges.len()];
    x.extend(train_negs.iter().map(feat));
    y.extend(std::iter::repeat(0.0).take(train_negs.len()));
    let model = logreg::BinaryLogReg::fit(&x, &y, CLASSIFIER_LAMBDA, CLASSIFIER_ITERS)?;

    let pos_scores: Vec<f64> = test_edges.iter().map(|e| model.score(&feat(e))).collect();
    let neg_scores: Vec<f64> = test_negs.iter().map(|e| model.score(&feat(e))).collect();
    if pos_scores.is_empty() || neg_scores.is_empty() {
        return Err(Error::Eval("degenerate single-class test set".into()));
    }

    let mut report = EvalReport::new(
        "link-prediction",
        format!(
            "{} train / {} test edges, op={}, neg ratio {neg_ratio}",
            train_edges.len(),
            test_edges.len(),
            op.name()
        ),
        seed,
    );
    report.push("auc", metrics::auc(&pos_scores, &neg_scores));
    Ok(report)
}
