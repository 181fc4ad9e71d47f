//! O(1) categorical sampling via the alias method.
//!
//! Positive training pairs are drawn proportionally to their co-occurrence
//! counts; negative nodes are drawn from the context-marginal distribution
//! raised to a configurable exponent.

use rand::Rng;

use crate::error::{Error, Result};
use crate::walker::ContextCorpus;

/// Alias table for O(1) draws from a weighted categorical distribution.
///
/// Construction uses the stable two-queue split into under- and over-full
/// slots, preserving input order, so the table is deterministic for a given
/// weight vector.
#[derive(Debug, Clone)]
pub struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<u32>,
}

impl AliasTable {
    pub fn new(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidWeights("empty weight vector".into()));
        }
        let mut total = 0.0;
        for &w in weights {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidWeights(format!(
                    "weights must be finite and nonnegative, got {w}"
                )));
            }
            total += w;
        }
        if total <= 0.0 {
            return Err(Error::InvalidWeights("all weights are zero".into()));
        }

        let n = weights.len();
        // Scaled so a perfectly uniform distribution has every slot at 1.0.
        let scaled: Vec<f64> = weights.iter().map(|&w| w * n as f64 / total).collect();
        let mut prob = vec![0.0; n];
        let mut alias = vec![0u32; n];

        let mut small: Vec<u32> = Vec::with_capacity(n);
        let mut large: Vec<u32> = Vec::with_capacity(n);
        // Iterate in reverse so popping processes slots in input order.
        for i in (0..n).rev() {
            if scaled[i] < 1.0 {
                small.push(i as u32);
            } else {
                large.push(i as u32);
            }
        }

        let mut remaining = scaled;
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            prob[s as usize] = remaining[s as usize];
            alias[s as usize] = l;
            remaining[l as usize] -= 1.0 - remaining[s as usize];
            if remaining[l as usize] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // Leftovers in either queue get probability 1 (numerical residue).
        for &i in small.iter().chain(large.iter()) {
            prob[i as usize] = 1.0;
            alias[i as usize] = i;
        }

        Ok(AliasTable { prob, alias })
    }

    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    pub fn draw(&self, rng: &mut impl Rng) -> u32 {
        let slot = rng.gen_range(0..self.prob.len());
        if rng.gen::<f64>() < self.prob[slot] {
            slot as u32
        } else {
            self.alias[slot]
        }
    }

    /// Probability of drawing slot `k`, reconstructed from the table.
    pub fn reconstructed_probability(&self, k: usize) -> f64 {
        let n = self.prob.len() as f64;
        let mut p = self.prob[k];
        for (j, &a) in self.alias.iter().enumerate() {
            if a as usize == k && j != k {
                p += 1.0 - self.prob[j];
            } else if a as usize == k && j == k && self.prob[j] < 1.0 {
                p += 1.0 - self.prob[j];
            }
        }
        p / n
    }
}

/// Draws `(center, context)` pairs proportionally to corpus counts.
#[derive(Debug, Clone)]
pub struct PairSampler {
    table: AliasTable,
    pairs: Vec<(u32, u32)>,
}

impl PairSampler {
    pub fn new(corpus: &ContextCorpus) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let weights: Vec<f64> = corpus.pairs().iter().map(|&(_, _, c)| c as f64).collect();
        let pairs: Vec<(u32, u32)> = corpus.pairs().iter().map(|&(i, j, _)| (i, j)).collect();
        Ok(PairSampler {
            table: AliasTable::new(&weights)?,
            pairs,
        })
    }

    pub fn draw(&self, rng: &mut impl Rng) -> (u32, u32) {
        self.pairs[self.table.draw(rng) as usize]
    }
}

/// Noise distribution over nodes for negative sampling: weight of node v is
/// `marginal(v)^alpha` over nodes with a positive context marginal.
#[derive(Debug, Clone)]
pub struct NoiseDistribution {
    table: AliasTable,
    nodes: Vec<u32>,
}

impl NoiseDistribution {
    pub fn new(context_marginals: &[u64], alpha: f64) -> Result<Self> {
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for (v, &c) in context_marginals.iter().enumerate() {
            if c > 0 {
                nodes.push(v as u32);
                weights.push((c as f64).powf(alpha));
            }
        }
        if nodes.is_empty() {
            return Err(Error::InvalidWeights(
                "no node has a positive context marginal".into(),
            ));
        }
        Ok(NoiseDistribution {
            table: AliasTable::new(&weights)?,
            nodes,
        })
    }

    pub fn from_corpus(corpus: &ContextCorpus, alpha: f64) -> Result<Self> {
        Self::new(corpus.context_marginals(), alpha)
    }

    pub fn draw(&self, rng: &mut impl Rng) -> u32 {
        self.nodes[self.table.draw(rng) as usize]
    }

    /// Draw `k` negatives, rejecting and redrawing any draw equal to
    /// `forbidden`. Errors when the distribution only supports `forbidden`.
    pub fn draw_negatives(
        &self,
        k: usize,
        forbidden: u32,
        rng: &mut impl Rng,
        out: &mut Vec<u32>,
    ) -> Result<()> {
        if self.nodes.len() == 1 && self.nodes[0] == forbidden {
            return Err(Error::DegenerateNoise);
        }
        out.clear();
        while out.len() < k {
            let v = self.draw(rng);
            if v != forbidden {
                out.push(v);
            }
        }
        Ok(())
    }
}
