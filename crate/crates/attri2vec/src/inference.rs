//! Out-of-sample embedding and embedding persistence.
//!
//! Because the embedding is a pure function of a node's attributes, any node
//! can be embedded after training without touching the graph. Embedding files
//! use the word2vec text convention: a `count dim` header, then one
//! `externalid v1 ... vd` line per node.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, SparseVec};
use crate::mapping::MappingModel;

/// Dense embeddings keyed by external node id, in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    dim: usize,
    ids: Vec<String>,
    vectors: Vec<Vec<f64>>,
    index: HashMap<String, usize>,
}

impl EmbeddingSet {
    pub fn new(dim: usize) -> Self {
        EmbeddingSet {
            dim,
            ids: Vec::new(),
            vectors: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn insert(&mut self, id: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: vector.len(),
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("non-finite embedding value".into()));
        }
        let id = id.into();
        match self.index.get(&id) {
            Some(&i) => self.vectors[i] = vector,
            None => {
                self.index.insert(id.clone(), self.ids.len());
                self.ids.push(id);
                self.vectors.push(vector);
            }
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.index.get(id).map(|&i| self.vectors[i].as_slice())
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.ids
            .iter()
            .zip(&self.vectors)
            .map(|(id, v)| (id.as_str(), v.as_slice()))
    }

    /// Word2vec-style text file; values are written with f32 precision.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w =
            BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
        writeln!(w, "{} {}", self.len(), self.dim).map_err(|e| Error::io(path, e))?;
        for (id, vec) in self.iter() {
            write!(w, "{id}").map_err(|e| Error::io(path, e))?;
            for &v in vec {
                write!(w, " {}", v as f32).map_err(|e| Error::io(path, e))?;
            }
            writeln!(w).map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines().enumerate();
        let (count, dim) = match lines.next() {
            Some((_, line)) => {
                let line = line.map_err(|e| Error::io(path, e))?;
                let mut it = line.split_whitespace();
                match (
                    it.next().and_then(|s| s.parse::<usize>().ok()),
                    it.next().and_then(|s| s.parse::<usize>().ok()),
                ) {
                    (Some(c), Some(d)) => (c, d),
                    _ => return Err(Error::parse(path, 1, "expected header: count dim")),
                }
            }
            None => return Err(Error::parse(path, 0, "empty embedding file")),
        };
        let mut set = EmbeddingSet::new(dim);
        for (lineno, line) in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let id = it.next().unwrap();
            let vec: std::result::Result<Vec<f64>, _> =
                it.map(|t| t.parse::<f64>()).collect();
            let vec = vec.map_err(|e| {
                Error::parse(path, lineno + 1, format!("bad embedding value: {e}"))
            })?;
            if vec.len() != dim {
                return Err(Error::parse(
                    path,
                    lineno + 1,
                    format!("expected {dim} values, got {}", vec.len()),
                ));
            }
            set.insert(id, vec)?;
        }
        if set.len() != count {
            return Err(Error::parse(
                path,
                0,
                format!("header declared {count} rows, found {}", set.len()),
            ));
        }
        Ok(set)
    }
}

/// Embed a batch of attribute vectors through a trained model; no graph
/// access, so ids may be entirely new nodes.
pub fn infer(model: &MappingModel, attrs: &[(String, SparseVec)]) -> Result<EmbeddingSet> {
    let vectors: Result<Vec<Vec<f64>>> = attrs
        .par_iter()
        .map(|(_, x)| model.embed(x))
        .collect();
    let vectors = vectors?;
    let mut set = EmbeddingSet::new(model.embed_dim());
    for ((id, _), vec) in attrs.iter().zip(vectors) {
        set.insert(id.clone(), vec)?;
    }
    Ok(set)
}

/// Embed every node of a graph.
pub fn embed_graph(model: &MappingModel, g: &AttributedGraph) -> Result<EmbeddingSet> {
    if model.attr_dim() != g.attr_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.attr_dim(),
            got: g.attr_dim(),
        });
    }
    let n = g.num_nodes();
    let vectors: Result<Vec<Vec<f64>>> = (0..n as u32)
        .into_par_iter()
        .map(|v| model.embed(g.attributes_of(v)))
        .collect();
    let vectors = vectors?;
    let mut set = EmbeddingSet::new(model.embed_dim());
    for (v, vec) in vectors.into_iter().enumerate() {
        set.insert(g.node_name(v as u32), vec)?;
    }
    Ok(set)
}
