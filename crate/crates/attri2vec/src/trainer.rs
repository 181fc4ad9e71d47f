//! Stochastic gradient descent over the negative-sampled objective.
//!
//! Each step draws a `(center, context)` pair proportionally to its
//! co-occurrence count, draws `K` negatives from the noise distribution,
//! and descends the partial objective
//!
//! ```text
//! O_ij = -log sigma(phi_i . w_j) - sum_k log sigma(-phi_i . w_neg_k)
//! ```
//!
//! where `phi_i = f(x_i)` is the mapped attribute vector. The update touches
//! the `K+1` involved output columns and only the attribute-supported rows of
//! the input weights, so per-step cost is O(nnz(x) * d + K * d) regardless of
//! graph size.

use std::cell::UnsafeCell;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, SparseVec};
use crate::mapping::{sigmoid, KernelNorm, MappingKind, MappingModel};
use crate::sampler::{NoiseDistribution, PairSampler};
use crate::walker::ContextCorpus;

/// Training hyperparameters. Defaults follow the standard settings:
/// `d = 128`, `K = 5`, `eta0 = 0.025` decaying to `2.5e-6`.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub mapping: MappingKind,
    pub embed_dim: usize,
    pub kernel_norm: KernelNorm,
    /// Negatives per positive pair (K).
    pub negatives: usize,
    pub eta0: f64,
    pub eta_min: f64,
    /// Iteration budget; `None` scales with the corpus as
    /// `min(1e8, 200 * total_pairs)`.
    pub max_iterations: Option<u64>,
    /// Noise distribution exponent over context marginals.
    pub noise_alpha: f64,
    /// Global gradient-norm clip per step; off by default.
    pub grad_clip: Option<f64>,
    pub seed: u64,
    pub threads: usize,
    /// Emit a progress line to stderr every this many iterations (0 = quiet).
    pub log_every: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mapping: MappingKind::Linear,
            embed_dim: 128,
            kernel_norm: KernelNorm::InputDim,
            negatives: 5,
            eta0: 0.025,
            eta_min: 2.5e-6,
            max_iterations: None,
            noise_alpha: 0.75,
            grad_clip: None,
            seed: 1,
            threads: 1,
            log_every: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.negatives < 1 {
            return Err(Error::Config("need at least one negative sample".into()));
        }
        if !(self.eta0 > 0.0) || !(self.eta_min >= 0.0) || self.eta_min > self.eta0 {
            return Err(Error::Config("need 0 <= eta_min <= eta0, eta0 > 0".into()));
        }
        if self.mapping == MappingKind::Kernel && self.embed_dim % 2 != 0 {
            return Err(Error::Config(
                "kernel mapping requires an even embedding dimension".into(),
            ));
        }
        Ok(())
    }

    pub fn resolve_iterations(&self, total_pairs: u64) -> u64 {
        self.max_iterations
            .unwrap_or_else(|| (200 * total_pairs).min(100_000_000))
    }
}

/// Reusable per-step buffers.
#[derive(Default)]
pub struct StepScratch {
    z: Vec<f64>,
    phi: Vec<f64>,
    upstream: Vec<f64>,
    scores: Vec<f64>,
    negatives: Vec<u32>,
}

/// Mapping model plus output weights and schedule position.
pub struct Trainer {
    model: MappingModel,
    /// `d x |V|`, column per node stored contiguously; initialized to zero.
    w_out: Vec<f64>,
    num_nodes: usize,
    iteration: u64,
    max_iterations: u64,
    eta0: f64,
    eta_min: f64,
    grad_clip: Option<f64>,
}

impl Trainer {
    pub fn new(attr_dim: usize, num_nodes: usize, cfg: &TrainConfig, total_pairs: u64) -> Result<Self> {
        cfg.validate()?;
        let mut model = MappingModel::new(cfg.mapping, attr_dim, cfg.embed_dim, cfg.kernel_norm)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        model.init_random(&mut rng);
        Ok(Trainer {
            model,
            w_out: vec![0.0; cfg.embed_dim * num_nodes],
            num_nodes,
            iteration: 0,
            max_iterations: cfg.resolve_iterations(total_pairs),
            eta0: cfg.eta0,
            eta_min: cfg.eta_min,
            grad_clip: cfg.grad_clip,
        })
    }

    pub fn model(&self) -> &MappingModel {
        &self.model
    }

    pub fn model_mut(&mut self) -> &mut MappingModel {
        &mut self.model
    }

    pub fn into_model(self) -> MappingModel {
        self.model
    }

    pub fn w_out(&self) -> &[f64] {
        &self.w_out
    }

    pub fn w_out_mut(&mut self) -> &mut [f64] {
        &mut self.w_out
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn max_iterations(&self) -> u64 {
        self.max_iterations
    }

    /// Linearly decayed learning rate with a floor; nonincreasing in `iter`.
    pub fn learning_rate(&self, iter: u64) -> f64 {
        let frac = 1.0 - iter as f64 / self.max_iterations.max(1) as f64;
        (self.eta0 * frac).max(self.eta_min)
    }

    fn out_column(&self, node: u32) -> &[f64] {
        let d = self.model.embed_dim();
        &self.w_out[node as usize * d..(node as usize + 1) * d]
    }

    /// The negative-sampled partial objective at the current parameters.
    pub fn partial_objective(&self, x: &SparseVec, context: u32, negatives: &[u32]) -> Result<f64> {
        let phi = self.model.embed(x)?;
        let mut loss = -log_sigmoid(dot(&phi, self.out_column(context)));
        for &neg in negatives {
            loss -= log_sigmoid(-dot(&phi, self.out_column(neg)));
        }
        Ok(loss)
    }

    /// One SGD step on `(x, context)` with the given negatives; returns the
    /// pre-update loss. All gradients are evaluated at the pre-step weights;
    /// colliding negatives accumulate on their shared column.
    pub fn sgd_step(
        &mut self,
        x: &SparseVec,
        context: u32,
        negatives: &[u32],
        eta: f64,
        scratch: &mut StepScratch,
    ) -> Result<f64> {
        let d = self.model.embed_dim();

        scratch.z.clear();
        scratch.z.extend_from_slice(&self.model.raw_activations(x));
        scratch.phi.clear();
        scratch.phi.extend_from_slice(&self.model.activate(&scratch.z));
        let phi = &scratch.phi;

        // Scores against the pre-update output columns.
        scratch.scores.clear();
        let s_pos = dot(phi, self.out_column(context));
        let mut loss = -log_sigmoid(s_pos);
        for &neg in negatives {
            let s = dot(phi, self.out_column(neg));
            scratch.scores.push(s);
            loss -= log_sigmoid(-s);
        }
        if !loss.is_finite() {
            return Err(Error::Diverged {
                iteration: self.iteration,
                msg: "non-finite loss".into(),
            });
        }

        // dO/dphi, accumulated before any column is touched.
        scratch.upstream.clear();
        scratch.upstream.resize(d, 0.0);
        let g_pos = sigmoid(s_pos) - 1.0;
        axpy(&mut scratch.upstream, g_pos, self.out_column(context));
        for (&neg, &s) in negatives.iter().zip(&scratch.scores) {
            axpy(&mut scratch.upstream, sigmoid(s), self.out_column(neg));
        }

        let coeff = self
            .model
            .gradient_coefficients(&scratch.z, &scratch.upstream)?;

        // Optional global-norm clip across both parameter blocks.
        let mut step_eta = eta;
        if let Some(clip) = self.grad_clip {
            let x_norm2: f64 = x.iter().map(|&(_, v)| v * v).sum();
            let phi_norm2: f64 = phi.iter().map(|v| v * v).sum();
            let coeff_norm2: f64 = coeff.iter().map(|v| v * v).sum();
            let mut out_norm2 = g_pos * g_pos * phi_norm2;
            for &s in &scratch.scores {
                let g = sigmoid(s);
                out_norm2 += g * g * phi_norm2;
            }
            let gnorm = (coeff_norm2 * x_norm2 + out_norm2).sqrt();
            if gnorm > clip {
                step_eta *= clip / gnorm;
            }
        }

        if coeff.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged {
                iteration: self.iteration,
                msg: "non-finite gradient".into(),
            });
        }

        // Output columns: w_j -= eta * g * phi.
        {
            let col = context as usize * d;
            for k in 0..d {
                self.w_out[col + k] -= step_eta * g_pos * phi[k];
            }
        }
        for (i, &neg) in negatives.iter().enumerate() {
            let g = sigmoid(scratch.scores[i]);
            let col = neg as usize * d;
            for k in 0..d {
                self.w_out[col + k] -= step_eta * g * phi[k];
            }
        }

        // Input weights, sparse rows only.
        self.model.apply_update(x, &coeff, -step_eta);

        Ok(loss)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(acc: &mut [f64], a: f64, x: &[f64]) {
    for (dst, &v) in acc.iter_mut().zip(x) {
        *dst += a * v;
    }
}

/// Numerically safe `log(sigmoid(x))`.
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -((-x).exp().ln_1p())
    } else {
        x - x.exp().ln_1p()
    }
}

/// Result of a training run.
pub struct TrainOutcome {
    pub model: MappingModel,
    /// Present when the caller asked to keep the output weights.
    pub w_out: Option<Vec<f64>>,
    pub iterations: u64,
    pub final_loss: f64,
}

const LOSS_WINDOW: u64 = 10_000;

/// Run the full training loop: sample pairs and negatives, step, track a
/// running-average loss and abort on divergence.
pub fn train(
    g: &AttributedGraph,
    corpus: &ContextCorpus,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    train_with_wout(g, corpus, cfg, false)
}

pub fn train_with_wout(
    g: &AttributedGraph,
    corpus: &ContextCorpus,
    cfg: &TrainConfig,
    keep_w_out: bool,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let pair_sampler = PairSampler::new(corpus)?;
    let noise = NoiseDistribution::from_corpus(corpus, cfg.noise_alpha)?;
    let trainer = Trainer::new(g.attr_dim(), g.num_nodes(), cfg, corpus.total_pairs())?;

    if cfg.threads > 1 {
        train_parallel(g, cfg, trainer, pair_sampler, noise, keep_w_out)
    } else {
        train_sequential(g, cfg, trainer, pair_sampler, noise, keep_w_out)
    }
}

fn train_sequential(
    g: &AttributedGraph,
    cfg: &TrainConfig,
    mut trainer: Trainer,
    pair_sampler: PairSampler,
    noise: NoiseDistribution,
    keep_w_out: bool,
) -> Result<TrainOutcome> {
    let max_iter = trainer.max_iterations;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x5eed));
    let mut scratch = StepScratch::default();
    let mut window_loss = 0.0;
    let mut window_n = 0u64;
    let mut running = f64::NAN;
    let mut initial = f64::NAN;
    let mut last = 0.0;

    for iter in 0..max_iter {
        trainer.iteration = iter;
        let eta = trainer.learning_rate(iter);
        let (center, context) = pair_sampler.draw(&mut rng);
        noise.draw_negatives(cfg.negatives, context, &mut rng, &mut scratch.negatives)?;
        let negatives = std::mem::take(&mut scratch.negatives);
        let loss = trainer.sgd_step(g.attributes_of(center), context, &negatives, eta, &mut scratch)?;
        scratch.negatives = negatives;
        last = loss;
        window_loss += loss;
        window_n += 1;
        if window_n == LOSS_WINDOW.min(max_iter) {
            running = window_loss / window_n as f64;
            if initial.is_nan() {
                initial = running;
            }
            window_loss = 0.0;
            window_n = 0;
            if !running.is_finite() || running > 10.0 * initial.max(1e-12) {
                return Err(Error::Diverged {
                    iteration: iter,
                    msg: format!(
                        "running loss {running:.4} exceeds 10x initial {initial:.4}; try a lower eta0"
                    ),
                });
            }
        }
        if cfg.log_every > 0 && iter % cfg.log_every == 0 {
            eprintln!(
                "iter {iter}/{max_iter} eta {eta:.6} loss {:.5}",
                if running.is_nan() { last } else { running }
            );
        }
    }

    let final_loss = if running.is_nan() { last } else { running };
    let Trainer { model, w_out, .. } = trainer;
    Ok(TrainOutcome {
        model,
        w_out: keep_w_out.then_some(w_out),
        iterations: max_iter,
        final_loss,
    })
}

/// Shared-state cell for lock-free parallel training. Workers update the
/// weights without mutual exclusion; with sparse updates the collision rate
/// is low and the noise is tolerated, but results are run-dependent.
struct Hogwild<T>(Arc<UnsafeCell<T>>);

impl<T> Clone for Hogwild<T> {
    fn clone(&self) -> Self {
        Hogwild(self.0.clone())
    }
}

unsafe impl<T> Send for Hogwild<T> {}
unsafe impl<T> Sync for Hogwild<T> {}

impl<T> Hogwild<T> {
    #[allow(clippy::mut_from_ref)]
    fn get_mut(&self) -> &mut T {
        unsafe { &mut *self.0.get() }
    }
}

fn train_parallel(
    g: &AttributedGraph,
    cfg: &TrainConfig,
    trainer: Trainer,
    pair_sampler: PairSampler,
    noise: NoiseDistribution,
    keep_w_out: bool,
) -> Result<TrainOutcome> {
    let max_iter = trainer.max_iterations;
    let shared = Hogwild(Arc::new(UnsafeCell::new(trainer)));
    let workers = cfg.threads;
    let per_worker = max_iter / workers as u64;

    std::thread::scope(|scope| -> Result<()> {
        let mut handles = Vec::new();
        for w in 0..workers {
            let shared = shared.clone();
            let pair_sampler = &pair_sampler;
            let noise = &noise;
            handles.push(scope.spawn(move || -> Result<()> {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0xb0b0 + w as u64 * 0x9e37));
                let mut scratch = StepScratch::default();
                let iters = if w == workers - 1 {
                    max_iter - per_worker * (workers as u64 - 1)
                } else {
                    per_worker
                };
                for i in 0..iters {
                    let trainer = shared.get_mut();
                    let eta = trainer.learning_rate(w as u64 * per_worker + i);
                    let (center, context) = pair_sampler.draw(&mut rng);
                    noise.draw_negatives(cfg.negatives, context, &mut rng, &mut scratch.negatives)?;
                    let negatives = std::mem::take(&mut scratch.negatives);
                    trainer.sgd_step(g.attributes_of(center), context, &negatives, eta, &mut scratch)?;
                    scratch.negatives = negatives;
                }
                Ok(())
            }));
        }
        for h in handles {
            h.join().expect("worker panicked")?;
        }
        Ok(())
    })?;

    let trainer = Arc::try_unwrap(shared.0)
        .map_err(|_| Error::Config("trainer still shared".into()))?
        .into_inner();
    let final_loss = f64::NAN;
    let Trainer { model, w_out, .. } = trainer;
    Ok(TrainOutcome {
        model,
        w_out: keep_w_out.then_some(w_out),
        iterations: max_iter,
        final_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::IngestOptions;
    use rand::Rng;
    use crate::walker::{build_corpus, WalkConfig};

    fn small_graph() -> AttributedGraph {
        let edges = vec![
            ("a".into(), "b".into()),
            ("b".into(), "c".into()),
            ("c".into(), "d".into()),
            ("d".into(), "e".into()),
            ("e".into(), "f".into()),
            ("f".into(), "a".into()),
        ];
        let attrs: Vec<(String, crate::graph::SparseVec)> = ["a", "b", "c", "d", "e", "f"]
            .iter()
            .enumerate()
            .map(|(i, n)| {
                (
                    n.to_string(),
                    vec![(i as u32 % 4, 1.0), ((i as u32 + 1) % 4, 0.5)],
                )
            })
            .collect();
        AttributedGraph::from_parts(&edges, &attrs, 4, None, IngestOptions::default()).unwrap()
    }

    fn small_corpus(g: &AttributedGraph) -> ContextCorpus {
        build_corpus(
            g,
            &WalkConfig {
                walk_length: 20,
                walks_per_node: 4,
                window: 3,
                seed: 7,
            },
            1,
        )
        .unwrap()
    }

    #[test]
    fn zero_out_init_plateau() {
        let g = small_graph();
        let cfg = TrainConfig {
            mapping: MappingKind::Sigmoid,
            embed_dim: 4,
            negatives: 5,
            ..TrainConfig::default()
        };
        let trainer = Trainer::new(g.attr_dim(), g.num_nodes(), &cfg, 100).unwrap();
        let x = g.attributes_of(0);
        let loss = trainer.partial_objective(x, 1, &[2, 3, 4, 5, 0]).unwrap();
        let expect = 6.0 * std::f64::consts::LN_2;
        assert!((loss - expect).abs() < 1e-12, "loss={loss}");
    }

    #[test]
    fn first_step_moves_only_output_columns() {
        let g = small_graph();
        let cfg = TrainConfig {
            mapping: MappingKind::Sigmoid,
            embed_dim: 4,
            negatives: 2,
            ..TrainConfig::default()
        };
        let mut trainer = Trainer::new(g.attr_dim(), g.num_nodes(), &cfg, 100).unwrap();
        let win_before = trainer.model().weights().to_vec();
        let x = g.attributes_of(0).clone();
        let phi = trainer.model().embed(&x).unwrap();
        let eta = 0.025;
        let mut scratch = StepScratch::default();
        trainer.sgd_step(&x, 1, &[3, 4], eta, &mut scratch).unwrap();

        // W^in untouched: both gradient terms multiply zero output columns.
        assert_eq!(trainer.model().weights(), win_before.as_slice());

        let d = 4;
        // positive column moved by +0.5*eta*phi, negatives by -0.5*eta*phi
        for k in 0..d {
            let wpos = trainer.w_out()[d + k];
            assert!((wpos - 0.5 * eta * phi[k]).abs() < 1e-12);
            let wneg = trainer.w_out()[3 * d + k];
            assert!((wneg + 0.5 * eta * phi[k]).abs() < 1e-12);
        }
        // untouched columns stay zero
        for k in 0..d {
            assert_eq!(trainer.w_out()[2 * d + k], 0.0);
            assert_eq!(trainer.w_out()[5 * d + k], 0.0);
        }
    }

    #[test]
    fn partial_objective_matches_term_by_term_oracle() {
        let g = small_graph();
        let cfg = TrainConfig {
            mapping: MappingKind::Relu,
            embed_dim: 4,
            negatives: 2,
            ..TrainConfig::default()
        };
        let mut trainer = Trainer::new(g.attr_dim(), g.num_nodes(), &cfg, 100).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for v in trainer.w_out_mut().iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        let x = g.attributes_of(2).clone();
        let context = 4u32;
        let negs = [0u32, 5];

        // independent term-by-term evaluation
        let phi = trainer.model().embed(&x).unwrap();
        let d = 4;
        let score = |node: u32| -> f64 {
            (0..d)
                .map(|k| phi[k] * trainer.w_out()[node as usize * d + k])
                .sum()
        };
        let expect = -(sigmoid(score(context)).ln())
            - negs.iter().map(|&n| sigmoid(-score(n)).ln()).sum::<f64>();

        let got = trainer.partial_objective(&x, context, &negs).unwrap();
        assert!((got - expect).abs() < 1e-12);
        assert!(got.is_finite() && got >= 0.0);
    }

    #[test]
    fn saturated_loss_approaches_zero() {
        let g = small_graph();
        let cfg = TrainConfig {
            mapping: MappingKind::Linear,
            embed_dim: 2,
            negatives: 1,
            ..TrainConfig::default()
        };
        let mut trainer = Trainer::new(g.attr_dim(), g.num_nodes(), &cfg, 100).unwrap();
        // force phi = (1, 0) for node 0's attributes
        for w in trainer.model_mut().weights_mut().iter_mut() {
            *w = 0.0;
        }
        trainer.model_mut().weights_mut()[0] = 1.0;
        let x: crate::graph::SparseVec = vec![(0, 1.0)];
        let d = 2;
        trainer.w_out_mut()[d] = 50.0; // context column 1, large positive score
        trainer.w_out_mut()[2 * d] = -50.0; // negative column 2, large negative score
        let loss = trainer.partial_objective(&x, 1, &[2]).unwrap();
        assert!(loss < 1e-20, "loss={loss}");
    }

    #[test]
    fn full_gradient_matches_finite_differences() {
        let g = small_graph();
        let kinds = [
            MappingKind::Linear,
            MappingKind::Relu,
            MappingKind::Kernel,
            MappingKind::Sigmoid,
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for kind in kinds {
            let cfg = TrainConfig {
                mapping: kind,
                embed_dim: 4,
                negatives: 2,
                ..TrainConfig::default()
            };
            let mut trainer = Trainer::new(g.attr_dim(), g.num_nodes(), &cfg, 100).unwrap();
            for w in trainer.model_mut().weights_mut().iter_mut() {
                *w = rng.gen_range(-1.0..1.0);
            }
            for v in trainer.w_out_mut().iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
            let x = g.attributes_of(1).clone();
            let context = 3u32;
            let negs = [0u32, 5];

            // analytic step with eta=1 from a snapshot gives the gradient as
            // (before - after)
            let snapshot_win = trainer.model().weights().to_vec();
            let snapshot_wout = trainer.w_out().to_vec();
            let mut scratch = StepScratch::default();
            trainer.sgd_step(&x, context, &negs, 1.0, &mut scratch).unwrap();
            let grad_win: Vec<f64> = snapshot_win
                .iter()
                .zip(trainer.model().weights())
                .map(|(b, a)| b - a)
                .collect();
            let grad_wout: Vec<f64> = snapshot_wout
                .iter()
                .zip(trainer.w_out())
                .map(|(b, a)| b - a)
                .collect();
            trainer.model_mut().weights_mut().copy_from_slice(&snapshot_win);
            trainer.w_out_mut().copy_from_slice(&snapshot_wout);

            let h = 1e-6;
            for i in 0..snapshot_win.len() {
                trainer.model_mut().weights_mut()[i] = snapshot_win[i] + h;
                let fp = trainer.partial_objective(&x, context, &negs).unwrap();
                trainer.model_mut().weights_mut()[i] = snapshot_win[i] - h;
                let fm = trainer.partial_objective(&x, context, &negs).unwrap();
                trainer.model_mut().weights_mut()[i] = snapshot_win[i];
                let fd = (fp - fm) / (2.0 * h);
                let a = grad_win[i];
                let denom = a.abs().max(fd.abs()).max(1e-3);
                assert!((a - fd).abs() / denom < 1e-5, "{kind:?} win[{i}]: {a} vs {fd}");
            }
            for i in 0..snapshot_wout.len() {
                trainer.w_out_mut()[i] = snapshot_wout[i] + h;
                let fp = trainer.partial_objective(&x, context, &negs).unwrap();
                trainer.w_out_mut()[i] = snapshot_wout[i] - h;
                let fm = trainer.partial_objective(&x, context, &negs).unwrap();
                trainer.w_out_mut()[i] = snapshot_wout[i];
                let fd = (fp - fm) / (2.0 * h);
                let a = grad_wout[i];
                let denom = a.abs().max(fd.abs()).max(1e-3);
                assert!((a - fd).abs() / denom < 1e-5, "{kind:?} wout[{i}]: {a} vs {fd}");
            }
        }
    }

    #[test]
    fn step_touches_exactly_expected_columns() {
        let g = small_graph();
        let cfg = TrainConfig {
            mapping: MappingKind::Sigmoid,
            embed_dim: 4,
            negatives: 2,
            ..TrainConfig::default()
        };
        let mut trainer = Trainer::new(g.attr_dim(), g.num_nodes(), &cfg, 100).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for v in trainer.w_out_mut().iter_mut() {
            *v = rng.gen_range(-0.1..0.1);
        }
        let before = trainer.w_out().to_vec();
        let x = g.attributes_of(0).clone();
        let mut scratch = StepScratch::default();
        trainer.sgd_step(&x, 2, &[4, 4], 0.01, &mut scratch).unwrap();
        let d = 4;
        for node in 0..6usize {
            let changed = (0..d).any(|k| trainer.w_out()[node * d + k] != before[node * d + k]);
            assert_eq!(changed, node == 2 || node == 4, "node {node}");
        }
    }

    #[test]
    fn zero_iterations_returns_initial_model() {
        let g = small_graph();
        let corpus = small_corpus(&g);
        let cfg = TrainConfig {
            mapping: MappingKind::Sigmoid,
            embed_dim: 4,
            max_iterations: Some(0),
            seed: 3,
            ..TrainConfig::default()
        };
        let out = train(&g, &corpus, &cfg).unwrap();
        let mut expect = MappingModel::new(cfg.mapping, g.attr_dim(), 4, cfg.kernel_norm).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        expect.init_random(&mut rng);
        assert_eq!(out.model.weights(), expect.weights());
    }

    #[test]
    fn deterministic_mode_reproducible() {
        let g = small_graph();
        let corpus = small_corpus(&g);
        let cfg = TrainConfig {
            mapping: MappingKind::Kernel,
            embed_dim: 4,
            max_iterations: Some(2000),
            seed: 17,
            ..TrainConfig::default()
        };
        let a = train(&g, &corpus, &cfg).unwrap();
        let b = train(&g, &corpus, &cfg).unwrap();
        assert_eq!(a.model.weights(), b.model.weights());
        assert_eq!(a.final_loss, b.final_loss);
    }

    #[test]
    fn learning_reduces_loss_below_plateau() {
        let g = small_graph();
        let corpus = small_corpus(&g);
        let cfg = TrainConfig {
            mapping: MappingKind::Sigmoid,
            embed_dim: 8,
            max_iterations: Some(20_000),
            seed: 2,
            ..TrainConfig::default()
        };
        let out = train(&g, &corpus, &cfg).unwrap();
        let plateau = 6.0 * std::f64::consts::LN_2;
        assert!(out.final_loss < plateau, "final {} vs {plateau}", out.final_loss);
    }

    #[test]
    fn parallel_mode_runs() {
        let g = small_graph();
        let corpus = small_corpus(&g);
        let cfg = TrainConfig {
            mapping: MappingKind::Sigmoid,
            embed_dim: 4,
            max_iterations: Some(5000),
            threads: 4,
            seed: 2,
            ..TrainConfig::default()
        };
        let out = train(&g, &corpus, &cfg).unwrap();
        assert!(out.model.weights().iter().all(|w| w.is_finite()));
    }

    #[test]
    fn empty_corpus_rejected() {
        let g = AttributedGraph::from_parts(
            &[],
            &[("z".into(), vec![])],
            1,
            None,
            IngestOptions::default(),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.bin");
        std::fs::write(&path, b"").unwrap();
        let corpus = ContextCorpus::load(&path, Some(1)).unwrap();
        assert!(matches!(
            train(&g, &corpus, &TrainConfig::default()),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn lr_schedule_nonincreasing_with_floor() {
        let g = small_graph();
        let cfg = TrainConfig {
            embed_dim: 4,
            max_iterations: Some(1000),
            ..TrainConfig::default()
        };
        let trainer = Trainer::new(g.attr_dim(), g.num_nodes(), &cfg, 100).unwrap();
        let mut prev = f64::INFINITY;
        for iter in 0..1000 {
            let eta = trainer.learning_rate(iter);
            assert!(eta <= prev && eta >= cfg.eta_min);
            prev = eta;
        }
        assert!((trainer.learning_rate(0) - 0.025).abs() < 1e-15);
    }
}
