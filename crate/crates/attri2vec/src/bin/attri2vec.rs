//! Command-line front end: walk generation, training, out-of-sample
//! inference and evaluation, with per-run manifests for exact replay.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use attri2vec::evalkit::{self, EdgeFeatureOp, NmiNorm};
use attri2vec::graph::{AttributedGraph, IngestOptions};
use attri2vec::inference::{embed_graph, infer, EmbeddingSet};
use attri2vec::mapping::{KernelNorm, MappingKind, MappingModel, ModelMetadata};
use attri2vec::trainer::{train_with_wout, TrainConfig};
use attri2vec::walker::{build_corpus, dump_walks, ContextCorpus, WalkConfig};
use attri2vec::Error;

#[derive(Parser)]
#[command(name = "attri2vec", version, about = "Attributed network embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone)]
enum Command {
    /// Print a JSON summary of a graph (|V|, |E|, m, nnz, classes)
    Summary(GraphArgs),
    /// Generate random walks and write the context corpus
    Walk(WalkArgs),
    /// Train a mapping model and write model + embeddings
    Train(TrainArgs),
    /// Embed nodes from an attribute file through a trained model
    Infer(InferArgs),
    /// Evaluate embeddings
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Re-run a recorded manifest after verifying its input hashes
    Replay(ReplayArgs),
}

#[derive(Args, Clone)]
struct GraphArgs {
    /// Edge list file (whitespace-separated pairs, # comments)
    #[arg(long)]
    edges: PathBuf,
    /// Sparse attribute file (header m=<dim>, then "nodeid idx:val ...")
    #[arg(long)]
    attrs: PathBuf,
    /// Label TSV ("nodeid<TAB>class")
    #[arg(long)]
    labels: Option<PathBuf>,
    /// L2-normalize attribute vectors per node
    #[arg(long)]
    normalize: bool,
}

impl GraphArgs {
    fn load(&self) -> Result<AttributedGraph, Error> {
        AttributedGraph::load(
            &self.edges,
            &self.attrs,
            self.labels.as_deref(),
            IngestOptions {
                l2_normalize: self.normalize,
            },
        )
    }

    fn input_paths(&self) -> Vec<&Path> {
        let mut v = vec![self.edges.as_path(), self.attrs.as_path()];
        if let Some(l) = &self.labels {
            v.push(l.as_path());
        }
        v
    }
}

#[derive(Args, Clone)]
struct WalkParams {
    /// Walk length l
    #[arg(long, default_value_t = 100)]
    walk_length: usize,
    /// Walks per node (gamma)
    #[arg(long, default_value_t = 40)]
    walks_per_node: usize,
    /// Context window t
    #[arg(long, default_value_t = 10)]
    window: usize,
}

#[derive(Args, Clone)]
struct WalkArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    walk: WalkParams,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads (env ATTRI2VEC_THREADS overrides the default of 1)
    #[arg(long)]
    threads: Option<usize>,
    /// Output corpus path (binary u32 triples)
    #[arg(long)]
    out: PathBuf,
    /// Also dump the raw walks as text
    #[arg(long)]
    walk_dump: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct TrainArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    walk: WalkParams,
    /// Reuse a previously written corpus instead of walking
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Mapping kind: linear | relu | kernel | sigmoid
    #[arg(long, default_value = "kernel")]
    mapping: MappingKind,
    /// Embedding dimension d
    #[arg(long, default_value_t = 128)]
    dim: usize,
    /// Negative samples per pair (K)
    #[arg(long, default_value_t = 5)]
    negatives: usize,
    #[arg(long, default_value_t = 0.025)]
    eta0: f64,
    #[arg(long, default_value_t = 2.5e-6)]
    eta_min: f64,
    /// Iteration budget; default min(1e8, 200 * total pairs)
    #[arg(long)]
    max_iters: Option<u64>,
    /// Noise distribution exponent
    #[arg(long, default_value_t = 0.75)]
    alpha: f64,
    /// Kernel scale: input-dim (1/sqrt(m)) or output-dim (1/sqrt(d/2))
    #[arg(long, default_value = "input-dim")]
    kernel_norm: String,
    /// Global gradient-norm clip
    #[arg(long)]
    grad_clip: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
    /// Progress line interval (iterations)
    #[arg(long, default_value_t = 0)]
    log_every: u64,
    /// Output model file
    #[arg(long)]
    model_out: PathBuf,
    /// Output embedding text file
    #[arg(long)]
    embeddings_out: Option<PathBuf>,
    /// Persist the output weight matrix for warm restarts
    #[arg(long)]
    save_wout: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct InferArgs {
    /// Trained model file
    #[arg(long)]
    model: PathBuf,
    /// Sparse attribute file for the nodes to embed
    #[arg(long)]
    attrs: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand, Clone)]
enum EvalCommand {
    /// Node classification: averaged Micro-/Macro-F1 over random splits
    Classify(ClassifyArgs),
    /// K-means clustering: accuracy, F-value, NMI
    Cluster(ClusterArgs),
    /// Link prediction AUC from edge features
    Linkpred(LinkpredArgs),
}

#[derive(Args, Clone)]
struct EvalCommon {
    /// Embedding text file
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write the report JSON here (also printed as a table)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct ClassifyArgs {
    #[command(flatten)]
    common: EvalCommon,
    /// Label TSV
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    train_ratio: f64,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
}

#[derive(Args, Clone)]
struct ClusterArgs {
    #[command(flatten)]
    common: EvalCommon,
    #[arg(long)]
    labels: PathBuf,
    /// Number of clusters; defaults to the number of classes
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 20)]
    repeats: usize,
    /// NMI normalization: arithmetic | geometric
    #[arg(long, default_value = "arithmetic")]
    nmi_norm: String,
}

#[derive(Args, Clone)]
struct LinkpredArgs {
    #[command(flatten)]
    common: EvalCommon,
    /// Training edge list (in-sample edges)
    #[arg(long)]
    train_edges: PathBuf,
    /// Held-out edge list to score
    #[arg(long)]
    test_edges: PathBuf,
    /// Edge operator: average | hadamard | weighted-l1 | weighted-l2
    #[arg(long, default_value = "weighted-l2")]
    op: EdgeFeatureOp,
    /// Negatives sampled per positive edge
    #[arg(long, default_value_t = 1.0)]
    neg_ratio: f64,
}

#[derive(Args, Clone)]
struct ReplayArgs {
    #[arg(long)]
    manifest: PathBuf,
}

/// Everything needed to reproduce a run byte-for-byte in deterministic mode.
#[derive(Serialize, Deserialize)]
struct Manifest {
    argv: Vec<String>,
    seed: u64,
    input_hashes: BTreeMap<String, String>,
    outputs: Vec<String>,
}

fn sha256_file(path: &Path) -> Result<String, Error> {
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(format!("{:x}", Sha256::digest(&data)))
}

fn write_manifest(
    primary_output: &Path,
    seed: u64,
    inputs: &[&Path],
    outputs: &[&Path],
) -> Result<(), Error> {
    let mut input_hashes = BTreeMap::new();
    for p in inputs {
        input_hashes.insert(p.display().to_string(), sha256_file(p)?);
    }
    let manifest = Manifest {
        argv: std::env::args().skip(1).collect(),
        seed,
        input_hashes,
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
    };
    let path = primary_output.with_extension("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest).unwrap())
        .map_err(|e| Error::io(&path, e))
}

fn default_threads(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("ATTRI2VEC_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or(1)
}

fn parse_kernel_norm(s: &str) -> Result<KernelNorm, Error> {
    match s {
        "input-dim" => Ok(KernelNorm::InputDim),
        "output-dim" => Ok(KernelNorm::OutputDim),
        other => Err(Error::Config(format!("unknown kernel normalization {other}"))),
    }
}

fn read_label_pairs(path: &Path) -> Result<Vec<(String, String)>, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
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

fn read_edge_pairs(path: &Path) -> Result<Vec<(String, String)>, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        match (it.next(), it.next(), it.next()) {
            (Some(a), Some(b), None) => out.push((a.to_string(), b.to_string())),
            _ => return Err(Error::parse(path, lineno + 1, "expected two node ids")),
        }
    }
    Ok(out)
}

/// Read a sparse attribute file as (id, vector) pairs plus dimension.
fn read_attr_pairs(
    path: &Path,
) -> Result<(usize, Vec<(String, attri2vec::graph::SparseVec)>), Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let dim = loop {
        match lines.next() {
            Some((lineno, line)) => {
                let t = line.split('#').next().unwrap_or("").trim();
                if t.is_empty() {
                    continue;
                }
                break t
                    .strip_prefix("m=")
                    .and_then(|s| s.trim().parse::<usize>().ok())
                    .ok_or_else(|| Error::parse(path, lineno + 1, "expected header m=<dim>"))?;
            }
            None => return Err(Error::parse(path, 0, "missing m=<dim> header")),
        }
    };
    let mut out = Vec::new();
    for (lineno, line) in lines {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let id = it.next().unwrap().to_string();
        let mut vec = Vec::new();
        for tok in it {
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| Error::parse(path, lineno + 1, format!("expected idx:val, got {tok}")))?;
            let i: u32 = i
                .parse()
                .map_err(|_| Error::parse(path, lineno + 1, format!("bad index {i}")))?;
            let v: f64 = v
                .parse()
                .map_err(|_| Error::parse(path, lineno + 1, format!("bad value {v}")))?;
            if i as usize >= dim {
                return Err(Error::parse(path, lineno + 1, format!("index {i} >= m={dim}")));
            }
            vec.push((i, v));
        }
        vec.sort_unstable_by_key(|&(i, _)| i);
        out.push((id, vec));
    }
    Ok((dim, out))
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Summary(args) => {
            let g = args.load()?;
            println!("{}", serde_json::to_string_pretty(&g.summary()).unwrap());
            Ok(())
        }
        Command::Walk(args) => cmd_walk(args),
        Command::Train(args) => cmd_train(args),
        Command::Infer(args) => cmd_infer(args),
        Command::Eval(cmd) => cmd_eval(cmd),
        Command::Replay(args) => cmd_replay(args),
    }
}

fn cmd_walk(args: WalkArgs) -> Result<(), Error> {
    let g = args.graph.load()?;
    let cfg = WalkConfig {
        walk_length: args.walk.walk_length,
        walks_per_node: args.walk.walks_per_node,
        window: args.walk.window,
        seed: args.seed,
    };
    let corpus = build_corpus(&g, &cfg, default_threads(args.threads))?;
    corpus.save(&args.out)?;
    let mut outputs = vec![args.out.as_path()];
    if let Some(dump) = &args.walk_dump {
        dump_walks(&g, &cfg, dump)?;
        outputs.push(dump.as_path());
    }
    write_manifest(&args.out, args.seed, &args.graph.input_paths(), &outputs)?;
    eprintln!(
        "corpus: {} pairs, {} total counts",
        corpus.pairs().len(),
        corpus.total_pairs()
    );
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<(), Error> {
    let g = args.graph.load()?;
    let corpus = match &args.corpus {
        Some(path) => ContextCorpus::load(path, Some(g.num_nodes()))?,
        None => {
            let cfg = WalkConfig {
                walk_length: args.walk.walk_length,
                walks_per_node: args.walk.walks_per_node,
                window: args.walk.window,
                seed: args.seed,
            };
            build_corpus(&g, &cfg, default_threads(args.threads))?
        }
    };

    let cfg = TrainConfig {
        mapping: args.mapping,
        embed_dim: args.dim,
        kernel_norm: parse_kernel_norm(&args.kernel_norm)?,
        negatives: args.negatives,
        eta0: args.eta0,
        eta_min: args.eta_min,
        max_iterations: args.max_iters,
        noise_alpha: args.alpha,
        grad_clip: args.grad_clip,
        seed: args.seed,
        threads: default_threads(args.threads),
        log_every: args.log_every,
    };
    let outcome = train_with_wout(&g, &corpus, &cfg, args.save_wout.is_some())?;

    outcome.model.save(&args.model_out)?;
    let meta = ModelMetadata {
        mapping: args.mapping,
        attr_dim: outcome.model.attr_dim(),
        embed_dim: outcome.model.embed_dim(),
        kernel_norm: outcome.model.kernel_norm(),
        iterations: outcome.iterations,
        final_loss: outcome.final_loss.is_finite().then_some(outcome.final_loss),
        seed: args.seed,
    };
    let meta_path = args.model_out.with_extension("meta.json");
    fs::write(&meta_path, serde_json::to_string_pretty(&meta).unwrap())
        .map_err(|e| Error::io(&meta_path, e))?;

    let mut outputs = vec![args.model_out.as_path(), meta_path.as_path()];
    if let Some(emb_path) = &args.embeddings_out {
        let set = embed_graph(&outcome.model, &g)?;
        set.save(emb_path)?;
        outputs.push(emb_path.as_path());
    }
    if let (Some(path), Some(w_out)) = (&args.save_wout, &outcome.w_out) {
        save_wout(path, outcome.model.embed_dim(), w_out)?;
        outputs.push(path.as_path());
    }
    let mut inputs = args.graph.input_paths();
    if let Some(c) = &args.corpus {
        inputs.push(c.as_path());
    }
    write_manifest(&args.model_out, args.seed, &inputs, &outputs)?;
    Ok(())
}

fn save_wout(path: &Path, dim: usize, w_out: &[f64]) -> Result<(), Error> {
    use byteorder::{LittleEndian, WriteBytesExt};
    let mut f = std::io::BufWriter::new(
        std::fs::File::create(path).map_err(|e| Error::io(path, e))?,
    );
    f.write_u32::<LittleEndian>(dim as u32)
        .map_err(|e| Error::io(path, e))?;
    f.write_u32::<LittleEndian>((w_out.len() / dim) as u32)
        .map_err(|e| Error::io(path, e))?;
    for &v in w_out {
        f.write_f32::<LittleEndian>(v as f32)
            .map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

fn cmd_infer(args: InferArgs) -> Result<(), Error> {
    let model = MappingModel::load(&args.model)?;
    let (dim, attrs) = read_attr_pairs(&args.attrs)?;
    if dim != model.attr_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.attr_dim(),
            got: dim,
        });
    }
    let set = infer(&model, &attrs)?;
    set.save(&args.out)?;
    write_manifest(
        &args.out,
        0,
        &[args.model.as_path(), args.attrs.as_path()],
        &[args.out.as_path()],
    )?;
    Ok(())
}

/// Align embeddings with labels by external id; label classes are made
/// contiguous in first-seen order.
fn aligned_features(
    set: &EmbeddingSet,
    labels: &[(String, String)],
) -> Result<(Vec<Vec<f64>>, Vec<u32>, usize), Error> {
    let mut class_ids: BTreeMap<&str, u32> = BTreeMap::new();
    for (_, c) in labels {
        let next = class_ids.len() as u32;
        class_ids.entry(c.as_str()).or_insert(next);
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (node, class) in labels {
        let vec = set.get(node).ok_or_else(|| {
            Error::Eval(format!("labeled node {node} has no embedding"))
        })?;
        x.push(vec.to_vec());
        y.push(class_ids[class.as_str()]);
    }
    Ok((x, y, class_ids.len()))
}

fn emit_report(report: &evalkit::EvalReport, out: Option<&Path>) -> Result<(), Error> {
    print!("{}", report.render_table());
    if let Some(path) = out {
        fs::write(path, report.to_json()).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

fn cmd_eval(cmd: EvalCommand) -> Result<(), Error> {
    match cmd {
        EvalCommand::Classify(args) => {
            let set = EmbeddingSet::load(&args.common.embeddings)?;
            let labels = read_label_pairs(&args.labels)?;
            let (x, y, num_classes) = aligned_features(&set, &labels)?;
            let report = evalkit::classify(
                &x,
                &y,
                num_classes,
                args.train_ratio,
                args.repeats,
                args.common.seed,
            )?;
            emit_report(&report, args.common.out.as_deref())
        }
        EvalCommand::Cluster(args) => {
            let set = EmbeddingSet::load(&args.common.embeddings)?;
            let labels = read_label_pairs(&args.labels)?;
            let (x, y, num_classes) = aligned_features(&set, &labels)?;
            let norm = match args.nmi_norm.as_str() {
                "arithmetic" => NmiNorm::Arithmetic,
                "geometric" => NmiNorm::Geometric,
                other => {
                    return Err(Error::Config(format!("unknown NMI normalization {other}")))
                }
            };
            let report = evalkit::cluster(
                &x,
                &y,
                args.k.unwrap_or(num_classes),
                args.repeats,
                args.common.seed,
                norm,
            )?;
            emit_report(&report, args.common.out.as_deref())
        }
        EvalCommand::Linkpred(args) => {
            let set = EmbeddingSet::load(&args.common.embeddings)?;
            // dense index per embedded node
            let ids = set.ids().to_vec();
            let index: BTreeMap<&str, u32> = ids
                .iter()
                .enumerate()
                .map(|(i, id)| (id.as_str(), i as u32))
                .collect();
            let vectors: Vec<Vec<f64>> =
                ids.iter().map(|id| set.get(id).unwrap().to_vec()).collect();
            let to_idx = |pairs: Vec<(String, String)>, path: &Path| -> Result<Vec<(u32, u32)>, Error> {
                pairs
                    .into_iter()
                    .map(|(a, b)| {
                        let ia = index.get(a.as_str()).copied().ok_or_else(|| {
                            Error::Eval(format!("{}: node {a} has no embedding", path.display()))
                        })?;
                        let ib = index.get(b.as_str()).copied().ok_or_else(|| {
                            Error::Eval(format!("{}: node {b} has no embedding", path.display()))
                        })?;
                        Ok((ia, ib))
                    })
                    .collect()
            };
            let train = to_idx(read_edge_pairs(&args.train_edges)?, &args.train_edges)?;
            let test = to_idx(read_edge_pairs(&args.test_edges)?, &args.test_edges)?;
            let train_nodes: Vec<u32> = train
                .iter()
                .flat_map(|&(a, b)| [a, b])
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .collect();
            let all_nodes: Vec<u32> = (0..vectors.len() as u32).collect();
            let report = evalkit::link_predict(
                &train,
                &test,
                &vectors,
                &train_nodes,
                &all_nodes,
                args.op,
                args.neg_ratio,
                args.common.seed,
            )?;
            emit_report(&report, args.common.out.as_deref())
        }
    }
}

fn cmd_replay(args: ReplayArgs) -> Result<(), Error> {
    let text = fs::read_to_string(&args.manifest).map_err(|e| Error::io(&args.manifest, e))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("bad manifest: {e}")))?;
    for (path, recorded) in &manifest.input_hashes {
        let current = sha256_file(Path::new(path))?;
        if &current != recorded {
            return Err(Error::Config(format!(
                "input {path} changed since the manifest was written"
            )));
        }
    }
    let argv = std::iter::once("attri2vec".to_string()).chain(manifest.argv.clone());
    let cli = Cli::try_parse_from(argv)
        .map_err(|e| Error::Config(format!("manifest argv does not parse: {e}")))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(Error::Config("manifest records a replay command".into()));
    }
    run(cli.command)
}

fn error_category(err: &Error) -> (&'static str, u8) {
    match err {
        Error::Config(_) | Error::DimensionMismatch { .. } | Error::InvalidWeights(_) => {
            ("config", 2)
        }
        Error::Io { .. } | Error::Parse { .. } => ("io", 3),
        Error::Diverged { .. } => ("numeric", 4),
        _ => ("error", 1),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (category, code) = error_category(&err);
            eprintln!("attri2vec: {category}: {err}");
            ExitCode::from(code)
        }
    }
}
