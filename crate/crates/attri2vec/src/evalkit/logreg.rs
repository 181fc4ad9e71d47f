//! L2-regularized logistic regression with a deterministic full-batch
//! gradient solver; one-vs-rest for multi-class problems.

use crate::error::{Error, Result};

/// Binary logistic regression weights (with intercept).
#[derive(Debug, Clone)]
pub struct BinaryLogReg {
    weights: Vec<f64>,
    bias: f64,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl BinaryLogReg {
    /// Fit on dense rows with 0/1 targets. Plain gradient descent with a step
    /// size from the Lipschitz bound of the regularized loss; deterministic.
    pub fn fit(x: &[Vec<f64>], y: &[f64], lambda: f64, iterations: usize) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::Eval("empty or mismatched training data".into()));
        }
        let n = x.len();
        let dim = x[0].len();
        let max_norm2 = x
            .iter()
            .map(|row| row.iter().map(|v| v * v).sum::<f64>() + 1.0)
            .fold(0.0, f64::max);
        let lr = 1.0 / (max_norm2 / 4.0 + lambda);

        let mut w = vec![0.0; dim];
        let mut b = 0.0;
        let mut grad = vec![0.0; dim];
        for _ in 0..iterations {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut gb = 0.0;
            for (row, &target) in x.iter().zip(y) {
                let score = b + row.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>();
                let err = sigmoid(score) - target;
                for (g, &v) in grad.iter_mut().zip(row) {
                    *g += err * v;
                }
                gb += err;
            }
            let inv_n = 1.0 / n as f64;
            for (wk, &g) in w.iter_mut().zip(&grad) {
                *wk -= lr * (g * inv_n + lambda * *wk);
            }
            b -= lr * gb * inv_n;
        }
        Ok(BinaryLogReg { weights: w, bias: b })
    }

    pub fn score(&self, row: &[f64]) -> f64 {
        self.bias + row.iter().zip(&self.weights).map(|(a, c)| a * c).sum::<f64>()
    }

    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        sigmoid(self.score(row))
    }
}

/// One-vs-rest multi-class wrapper.
#[derive(Debug, Clone)]
pub struct OneVsRest {
    models: Vec<BinaryLogReg>,
}

impl OneVsRest {
    pub fn fit(
        x: &[Vec<f64>],
        y: &[u32],
        num_classes: usize,
        lambda: f64,
        iterations: usize,
    ) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::Eval("need at least two classes".into()));
        }
        let mut models = Vec::with_capacity(num_classes);
        for c in 0..num_classes as u32 {
            let targets: Vec<f64> = y.iter().map(|&l| if l == c { 1.0 } else { 0.0 }).collect();
            models.push(BinaryLogReg::fit(x, &targets, lambda, iterations)?);
        }
        Ok(OneVsRest { models })
    }

    pub fn predict(&self, row: &[f64]) -> u32 {
        self.models
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.score(row).partial_cmp(&b.score(row)).unwrap())
            .map(|(c, _)| c as u32)
            .unwrap()
    }
}
