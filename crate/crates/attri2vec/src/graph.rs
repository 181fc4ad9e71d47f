//! In-memory attributed graph model and file ingestion.
//!
//! A graph is a node set with undirected adjacency, a sparse per-node
//! attribute matrix and optional class labels. External node ids (arbitrary
//! strings) are mapped to dense indices `0..|V|` at load time.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sparse attribute vector: sorted `(feature_index, value)` pairs.
pub type SparseVec = Vec<(u32, f64)>;

/// Per-node class labels with contiguous class ids.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet {
    /// Class id per dense node index; `None` for unlabeled nodes.
    pub classes: Vec<Option<u32>>,
    pub num_classes: usize,
    /// Class id to original label string.
    pub class_names: Vec<String>,
}

/// Options controlling ingestion.
#[derive(Debug, Clone, Copy, Default)]
pub struct IngestOptions {
    /// L2-normalize each node's attribute vector after loading.
    pub l2_normalize: bool,
}

/// Undirected attributed graph, immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributedGraph {
    num_nodes: usize,
    /// Per-node sorted, deduplicated neighbor lists; symmetric.
    adjacency: Vec<Vec<u32>>,
    /// Per-node sparse attribute vectors, indices sorted ascending.
    attributes: Vec<SparseVec>,
    /// Attribute dimensionality m.
    attr_dim: usize,
    labels: Option<LabelSet>,
    node_names: Vec<String>,
    name_index: HashMap<String, u32>,
}

/// Summary emitted as JSON by the CLI.
#[derive(Debug, Serialize, Deserialize)]
pub struct GraphSummary {
    pub num_nodes: usize,
    pub num_edges: usize,
    pub attr_dim: usize,
    pub attr_nnz: usize,
    pub num_classes: Option<usize>,
}

struct GraphBuilder {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl GraphBuilder {
    fn new() -> Self {
        GraphBuilder {
            names: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn intern(&mut self, name: &str) -> u32 {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.names.len() as u32;
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), i);
        i
    }
}

impl AttributedGraph {
    /// Build a graph directly from edge pairs and sparse attributes.
    ///
    /// Edges are given on external ids; duplicates, reversed duplicates and
    /// self-loops are merged/dropped. Nodes present only in `attributes` are
    /// kept as isolated nodes.
    pub fn from_parts(
        edges: &[(String, String)],
        attributes: &[(String, SparseVec)],
        attr_dim: usize,
        labels: Option<&[(String, String)]>,
        options: IngestOptions,
    ) -> Result<Self> {
        let mut builder = GraphBuilder::new();
        let mut edge_idx = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            let i = builder.intern(a);
            let j = builder.intern(b);
            edge_idx.push((i, j));
        }
        let mut attr_map: HashMap<u32, SparseVec> = HashMap::new();
        for (name, vec) in attributes {
            let i = builder.intern(name);
            for &(idx, val) in vec {
                if (idx as usize) >= attr_dim {
                    return Err(Error::Config(format!(
                        "attribute index {idx} out of range for node {name} (m={attr_dim})"
                    )));
                }
                if !val.is_finite() {
                    return Err(Error::Config(format!(
                        "non-finite attribute value for node {name}"
                    )));
                }
            }
            let mut v = vec.clone();
            v.sort_unstable_by_key(|&(idx, _)| idx);
            attr_map.insert(i, v);
        }

        let n = builder.names.len();
        let mut adjacency = vec![Vec::new(); n];
        for (i, j) in edge_idx {
            if i == j {
                continue;
            }
            adjacency[i as usize].push(j);
            adjacency[j as usize].push(i);
        }
        for list in adjacency.iter_mut() {
            list.sort_unstable();
            list.dedup();
        }

        let mut attrs = vec![Vec::new(); n];
        for (i, v) in attr_map {
            attrs[i as usize] = v;
        }
        if options.l2_normalize {
            for v in attrs.iter_mut() {
                let norm = v.iter().map(|&(_, x)| x * x).sum::<f64>().sqrt();
                if norm > 0.0 {
                    for (_, x) in v.iter_mut() {
                        *x /= norm;
                    }
                }
            }
        }

        let labels = match labels {
            None => None,
            Some(pairs) => {
                let mut class_names = Vec::new();
                let mut class_index: HashMap<&str, u32> = HashMap::new();
                let mut classes = vec![None; n];
                for (node, class) in pairs {
                    let i = *builder.index.get(node.as_str()).ok_or_else(|| {
                        Error::Config(format!("label references unknown node id {node}"))
                    })?;
                    let c = *class_index.entry(class.as_str()).or_insert_with(|| {
                        class_names.push(class.clone());
                        (class_names.len() - 1) as u32
                    });
                    classes[i as usize] = Some(c);
                }
                Some(LabelSet {
                    classes,
                    num_classes: class_names.len(),
                    class_names,
                })
            }
        };

        Ok(AttributedGraph {
            num_nodes: n,
            adjacency,
            attributes: attrs,
            attr_dim,
            labels,
            node_names: builder.names,
            name_index: builder.index,
        })
    }

    /// Load a graph from an edge list file, a sparse attribute file and an
    /// optional label TSV.
    pub fn load(
        edge_path: &Path,
        attr_path: &Path,
        label_path: Option<&Path>,
        options: IngestOptions,
    ) -> Result<Self> {
        let edges = read_edge_file(edge_path)?;
        let (attr_dim, attributes) = read_attr_file(attr_path)?;
        let labels = match label_path {
            Some(p) => Some(read_label_file(p)?),
            None => None,
        };
        Self::from_parts(&edges, &attributes, attr_dim, labels.as_deref(), options)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().map(|a| a.len()).sum::<usize>() / 2
    }

    pub fn attr_dim(&self) -> usize {
        self.attr_dim
    }

    pub fn attr_nnz(&self) -> usize {
        self.attributes.iter().map(|a| a.len()).sum()
    }

    pub fn neighbors(&self, node: u32) -> &[u32] {
        &self.adjacency[node as usize]
    }

    pub fn degree(&self, node: u32) -> usize {
        self.adjacency[node as usize].len()
    }

    pub fn attributes_of(&self, node: u32) -> &SparseVec {
        &self.attributes[node as usize]
    }

    pub fn labels(&self) -> Option<&LabelSet> {
        self.labels.as_ref()
    }

    pub fn node_name(&self, node: u32) -> &str {
        &self.node_names[node as usize]
    }

    pub fn node_index(&self, name: &str) -> Option<u32> {
        self.name_index.get(name).copied()
    }

    pub fn summary(&self) -> GraphSummary {
        GraphSummary {
            num_nodes: self.num_nodes,
            num_edges: self.num_edges(),
            attr_dim: self.attr_dim,
            attr_nnz: self.attr_nnz(),
            num_classes: self.labels.as_ref().map(|l| l.num_classes),
        }
    }

    /// Histogram of node degrees; counts sum to `|V|`.
    pub fn degree_histogram(&self) -> BTreeMap<usize, usize> {
        let mut hist = BTreeMap::new();
        for a in &self.adjacency {
            *hist.entry(a.len()).or_insert(0) += 1;
        }
        hist
    }

    /// All undirected edges as `(i, j)` with `i < j`.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(self.num_edges());
        for (i, neigh) in self.adjacency.iter().enumerate() {
            for &j in neigh {
                if (i as u32) < j {
                    out.push((i as u32, j));
                }
            }
        }
        out
    }

    pub fn has_edge(&self, i: u32, j: u32) -> bool {
        self.adjacency[i as usize].binary_search(&j).is_ok()
    }

    /// Write the graph back out in the ingestion formats. Loading the result
    /// reproduces this graph exactly.
    pub fn save(
        &self,
        edge_path: &Path,
        attr_path: &Path,
        label_path: Option<&Path>,
    ) -> Result<()> {
        let mut ef = BufWriter::new(
            File::create(edge_path).map_err(|e| Error::io(edge_path, e))?,
        );
        for (i, j) in self.edges() {
            writeln!(ef, "{} {}", self.node_names[i as usize], self.node_names[j as usize])
                .map_err(|e| Error::io(edge_path, e))?;
        }
        drop(ef);

        let mut af = BufWriter::new(
            File::create(attr_path).map_err(|e| Error::io(attr_path, e))?,
        );
        writeln!(af, "m={}", self.attr_dim).map_err(|e| Error::io(attr_path, e))?;
        for (i, attrs) in self.attributes.iter().enumerate() {
            write!(af, "{}", self.node_names[i]).map_err(|e| Error::io(attr_path, e))?;
            for &(idx, val) in attrs {
                write!(af, " {idx}:{val}").map_err(|e| Error::io(attr_path, e))?;
            }
            writeln!(af).map_err(|e| Error::io(attr_path, e))?;
        }
        drop(af);

        if let (Some(path), Some(labels)) = (label_path, &self.labels) {
            let mut lf =
                BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
            for (i, class) in labels.classes.iter().enumerate() {
                if let Some(c) = class {
                    writeln!(lf, "{}\t{}", self.node_names[i], labels.class_names[*c as usize])
                        .map_err(|e| Error::io(path, e))?;
                }
            }
        }
        Ok(())
    }
}

fn read_edge_file(path: &Path) -> Result<Vec<(String, String)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut edges = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let (a, b) = match (tokens.next(), tokens.next(), tokens.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(Error::parse(
                    path,
                    lineno + 1,
                    "expected exactly two node ids",
                ))
            }
        };
        edges.push((a.to_string(), b.to_string()));
    }
    Ok(edges)
}

/// Sparse attribute file: header `m=<dim>`, then one `nodeid idx:val ...`
/// line per node. A line with only a node id declares a zero attribute vector.
fn read_attr_file(path: &Path) -> Result<(usize, Vec<(String, SparseVec)>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();

    let attr_dim = loop {
        let (lineno, line) = match lines.next() {
            Some((n, l)) => (n, l.map_err(|e| Error::io(path, e))?),
            None => return Err(Error::parse(path, 0, "missing m=<dim> header")),
        };
        let trimmed = line.split('#').next().unwrap_or("").trim();
        if trimmed.is_empty() {
            continue;
        }
        let dim = trimmed
            .strip_prefix("m=")
            .and_then(|s| s.trim().parse::<usize>().ok())
            .ok_or_else(|| Error::parse(path, lineno + 1, "expected header m=<dim>"))?;
        break dim;
    };

    let mut out = Vec::new();
    for (lineno, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let node = tokens.next().unwrap().to_string();
        let mut vec = SparseVec::new();
        for tok in tokens {
            let (idx, val) = tok.split_once(':').ok_or_else(|| {
                Error::parse(path, lineno + 1, format!("expected idx:val, got {tok}"))
            })?;
            let idx: u32 = idx.parse().map_err(|_| {
                Error::parse(path, lineno + 1, format!("bad feature index {idx}"))
            })?;
            let val: f64 = val.parse().map_err(|_| {
                Error::parse(path, lineno + 1, format!("bad feature value {val}"))
            })?;
            if (idx as usize) >= attr_dim {
                return Err(Error::parse(
                    path,
                    lineno + 1,
                    format!("feature index {idx} >= m={attr_dim}"),
                ));
            }
            if !val.is_finite() {
                return Err(Error::parse(path, lineno + 1, "non-finite feature value"));
            }
            vec.push((idx, val));
        }
        out.push((node, vec));
    }
    Ok((attr_dim, out))
}

fn read_label_file(path: &Path) -> Result<Vec<(String, String)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (node, class) = line
            .split_once('\t')
            .or_else(|| line.split_once(' '))
            .ok_or_else(|| Error::parse(path, lineno + 1, "expected nodeid<TAB>class"))?;
        out.push((node.trim().to_string(), class.trim().to_string()));
    }
    Ok(out)
}
