//! Truncated random walks and their reduction to context co-occurrence counts.
//!
//! Walks start `walks_per_node` times from every node and move to a uniformly
//! random neighbor at each step, ending early at a node without neighbors.
//! The walks are reduced on the fly to the sparse count table
//! `n(center, context)`: within each walk, every ordered pair of positions at
//! distance at most `window` contributes one count.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::AttributedGraph;

/// Random-walk and windowing parameters.
#[derive(Debug, Clone, Copy)]
pub struct WalkConfig {
    /// Walk length l in nodes.
    pub walk_length: usize,
    /// Walks started per node (gamma).
    pub walks_per_node: usize,
    /// Context window t.
    pub window: usize,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            walk_length: 100,
            walks_per_node: 40,
            window: 10,
            seed: 1,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.walk_length < 2 {
            return Err(Error::Config("walk length must be >= 2".into()));
        }
        if self.walks_per_node < 1 {
            return Err(Error::Config("walks per node must be >= 1".into()));
        }
        if self.window < 1 || self.window >= self.walk_length {
            return Err(Error::Config(
                "window must satisfy 1 <= window < walk length".into(),
            ));
        }
        Ok(())
    }
}

/// Sparse co-occurrence counts extracted from walks.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextCorpus {
    /// `(center, context, count)` sorted by `(center, context)`; counts >= 1.
    pairs: Vec<(u32, u32, u32)>,
    total_pairs: u64,
    /// Per-node count of appearances as a context node.
    context_marginals: Vec<u64>,
    num_nodes: usize,
}

impl ContextCorpus {
    fn from_counts(counts: HashMap<(u32, u32), u32>, num_nodes: usize) -> Self {
        let mut pairs: Vec<(u32, u32, u32)> = counts
            .into_iter()
            .map(|((i, j), c)| (i, j, c))
            .collect();
        pairs.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let total_pairs = pairs.iter().map(|&(_, _, c)| c as u64).sum();
        let mut context_marginals = vec![0u64; num_nodes];
        for &(_, j, c) in &pairs {
            context_marginals[j as usize] += c as u64;
        }
        ContextCorpus {
            pairs,
            total_pairs,
            context_marginals,
            num_nodes,
        }
    }

    pub fn pairs(&self) -> &[(u32, u32, u32)] {
        &self.pairs
    }

    pub fn total_pairs(&self) -> u64 {
        self.total_pairs
    }

    pub fn context_marginals(&self) -> &[u64] {
        &self.context_marginals
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Count for one `(center, context)` pair, zero if absent.
    pub fn count(&self, center: u32, context: u32) -> u32 {
        self.pairs
            .binary_search_by_key(&(center, context), |&(i, j, _)| (i, j))
            .map(|k| self.pairs[k].2)
            .unwrap_or(0)
    }

    /// Binary serialization: little-endian `(u32, u32, u32)` triples.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w =
            BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
        for &(i, j, c) in &self.pairs {
            w.write_u32::<LittleEndian>(i).map_err(|e| Error::io(path, e))?;
            w.write_u32::<LittleEndian>(j).map_err(|e| Error::io(path, e))?;
            w.write_u32::<LittleEndian>(c).map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }

    /// Load triples written by [`ContextCorpus::save`]. `num_nodes` may be
    /// given when the corpus belongs to a known graph; otherwise it is
    /// inferred from the largest index present.
    pub fn load(path: &Path, num_nodes: Option<usize>) -> Result<Self> {
        let mut r =
            BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
        let mut counts = HashMap::new();
        let mut max_index = 0u32;
        loop {
            let i = match r.read_u32::<LittleEndian>() {
                Ok(v) => v,
                Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
                Err(e) => return Err(Error::io(path, e)),
            };
            let j = r.read_u32::<LittleEndian>().map_err(|e| Error::io(path, e))?;
            let c = r.read_u32::<LittleEndian>().map_err(|e| Error::io(path, e))?;
            max_index = max_index.max(i).max(j);
            *counts.entry((i, j)).or_insert(0) += c;
        }
        let inferred = if counts.is_empty() { 0 } else { max_index as usize + 1 };
        let n = num_nodes.unwrap_or(inferred).max(inferred);
        Ok(Self::from_counts(counts, n))
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Independent RNG stream for walk number `repeat` starting at `node`.
fn walk_rng(seed: u64, node: u32, repeat: usize) -> ChaCha8Rng {
    let mixed = splitmix64(seed ^ splitmix64((node as u64) << 20 | repeat as u64));
    ChaCha8Rng::seed_from_u64(mixed)
}

/// One truncated walk; stops early at a dead end.
fn walk_from(g: &AttributedGraph, start: u32, length: usize, rng: &mut impl Rng) -> Vec<u32> {
    let mut walk = Vec::with_capacity(length);
    walk.push(start);
    let mut current = start;
    for _ in 1..length {
        let neigh = g.neighbors(current);
        if neigh.is_empty() {
            break;
        }
        current = neigh[rng.gen_range(0..neigh.len())];
        walk.push(current);
    }
    walk
}

/// Stream every walk through `visit`, in deterministic order.
pub fn for_each_walk(
    g: &AttributedGraph,
    cfg: &WalkConfig,
    mut visit: impl FnMut(&[u32]),
) -> Result<()> {
    cfg.validate()?;
    for repeat in 0..cfg.walks_per_node {
        for node in 0..g.num_nodes() as u32 {
            let mut rng = walk_rng(cfg.seed, node, repeat);
            let walk = walk_from(g, node, cfg.walk_length, &mut rng);
            visit(&walk);
        }
    }
    Ok(())
}

fn accumulate_walk(counts: &mut HashMap<(u32, u32), u32>, walk: &[u32], window: usize) {
    for i in 0..walk.len() {
        let lo = i.saturating_sub(window);
        let hi = (i + window).min(walk.len() - 1);
        for j in lo..=hi {
            if j != i {
                *counts.entry((walk[i], walk[j])).or_insert(0) += 1;
            }
        }
    }
}

/// Reduce a set of walks to co-occurrence counts.
pub fn count_contexts<'a>(
    walks: impl IntoIterator<Item = &'a [u32]>,
    window: usize,
    num_nodes: usize,
) -> ContextCorpus {
    let mut counts = HashMap::new();
    for walk in walks {
        accumulate_walk(&mut counts, walk, window);
    }
    ContextCorpus::from_counts(counts, num_nodes)
}

/// Generate walks and reduce them to a corpus without materializing the walk
/// set. With `threads > 1` start nodes are partitioned across workers and the
/// partial tables merged; results are identical to the sequential mode because
/// each walk owns an RNG stream derived from `(seed, node, repeat)`.
pub fn build_corpus(g: &AttributedGraph, cfg: &WalkConfig, threads: usize) -> Result<ContextCorpus> {
    cfg.validate()?;
    let n = g.num_nodes();
    if threads <= 1 {
        let mut counts = HashMap::new();
        for repeat in 0..cfg.walks_per_node {
            for node in 0..n as u32 {
                let mut rng = walk_rng(cfg.seed, node, repeat);
                let walk = walk_from(g, node, cfg.walk_length, &mut rng);
                accumulate_walk(&mut counts, &walk, cfg.window);
            }
        }
        return Ok(ContextCorpus::from_counts(counts, n));
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let counts = pool.install(|| {
        (0..n as u32)
            .into_par_iter()
            .fold(HashMap::new, |mut local, node| {
                for repeat in 0..cfg.walks_per_node {
                    let mut rng = walk_rng(cfg.seed, node, repeat);
                    let walk = walk_from(g, node, cfg.walk_length, &mut rng);
                    accumulate_walk(&mut local, &walk, cfg.window);
                }
                local
            })
            .reduce(HashMap::new, |mut a, b| {
                for (k, v) in b {
                    *a.entry(k).or_insert(0) += v;
                }
                a
            })
    });
    Ok(ContextCorpus::from_counts(counts, n))
}

/// Dump walks as text, one walk per line of space-separated external ids.
pub fn dump_walks(g: &AttributedGraph, cfg: &WalkConfig, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    let mut err = None;
    for_each_walk(g, cfg, |walk| {
        if err.is_some() {
            return;
        }
        let line = walk
            .iter()
            .map(|&v| g.node_name(v))
            .collect::<Vec<_>>()
            .join(" ");
        if let Err(e) = writeln!(w, "{line}") {
            err = Some(Error::io(path, e));
        }
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// Read a walk dump back as dense-index walks.
pub fn read_walks(g: &AttributedGraph, path: &Path) -> Result<Vec<Vec<u32>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut walks = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let walk: Result<Vec<u32>> = line
            .split_whitespace()
            .map(|name| {
                g.node_index(name).ok_or_else(|| {
                    Error::parse(path, lineno + 1, format!("unknown node id {name}"))
                })
            })
            .collect();
        walks.push(walk?);
    }
    Ok(walks)
}
