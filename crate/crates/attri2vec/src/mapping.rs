//! Attribute-to-embedding transformations and their gradients.
//!
//! All four mappings share the input weight matrix `W^in`. Linear, ReLU and
//! sigmoid use one raw column per output dimension; the approximated kernel
//! mapping uses `d/2` raw columns, each expanded into a cosine and a sine
//! output. Gradients with respect to `W^in` factor as an outer product of a
//! per-column coefficient vector with the sparse input, so updates touch only
//! attribute-supported rows.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SparseVec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MappingKind {
    Linear,
    Relu,
    Kernel,
    Sigmoid,
}

impl MappingKind {
    pub fn name(&self) -> &'static str {
        match self {
            MappingKind::Linear => "linear",
            MappingKind::Relu => "relu",
            MappingKind::Kernel => "kernel",
            MappingKind::Sigmoid => "sigmoid",
        }
    }

    fn code(&self) -> u8 {
        match self {
            MappingKind::Linear => 0,
            MappingKind::Relu => 1,
            MappingKind::Kernel => 2,
            MappingKind::Sigmoid => 3,
        }
    }

    fn from_code(c: u8) -> Result<Self> {
        Ok(match c {
            0 => MappingKind::Linear,
            1 => MappingKind::Relu,
            2 => MappingKind::Kernel,
            3 => MappingKind::Sigmoid,
            _ => return Err(Error::Config(format!("unknown mapping code {c}"))),
        })
    }
}

impl std::str::FromStr for MappingKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "linear" => MappingKind::Linear,
            "relu" => MappingKind::Relu,
            "kernel" => MappingKind::Kernel,
            "sigmoid" => MappingKind::Sigmoid,
            other => return Err(Error::Config(format!("unknown mapping kind {other}"))),
        })
    }
}

/// Scale applied to the kernel mapping's cosine/sine outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelNorm {
    /// `1/sqrt(m)`, scaling by the attribute dimension.
    InputDim,
    /// `1/sqrt(d/2)`, scaling by the number of frequencies.
    OutputDim,
}

impl Default for KernelNorm {
    fn default() -> Self {
        KernelNorm::InputDim
    }
}

const MODEL_MAGIC: &[u8; 4] = b"A2VM";

/// A mapping kind plus its trained `W^in` weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingModel {
    kind: MappingKind,
    attr_dim: usize,
    embed_dim: usize,
    kernel_norm: KernelNorm,
    /// Row-major `attr_dim x raw_cols`.
    weights: Vec<f64>,
}

impl MappingModel {
    pub fn new(
        kind: MappingKind,
        attr_dim: usize,
        embed_dim: usize,
        kernel_norm: KernelNorm,
    ) -> Result<Self> {
        if attr_dim == 0 || embed_dim == 0 {
            return Err(Error::Config("dimensions must be positive".into()));
        }
        if kind == MappingKind::Kernel && embed_dim % 2 != 0 {
            return Err(Error::Config(
                "kernel mapping requires an even embedding dimension".into(),
            ));
        }
        let raw_cols = match kind {
            MappingKind::Kernel => embed_dim / 2,
            _ => embed_dim,
        };
        Ok(MappingModel {
            kind,
            attr_dim,
            embed_dim,
            kernel_norm,
            weights: vec![0.0; attr_dim * raw_cols],
        })
    }

    /// Initialize weights i.i.d. uniform on `[-0.5/d, 0.5/d]`.
    pub fn init_random(&mut self, rng: &mut impl Rng) {
        let half = 0.5 / self.embed_dim as f64;
        for w in self.weights.iter_mut() {
            *w = rng.gen_range(-half..half);
        }
    }

    pub fn kind(&self) -> MappingKind {
        self.kind
    }

    pub fn attr_dim(&self) -> usize {
        self.attr_dim
    }

    pub fn embed_dim(&self) -> usize {
        self.embed_dim
    }

    pub fn kernel_norm(&self) -> KernelNorm {
        self.kernel_norm
    }

    /// Number of raw weight columns (`d`, or `d/2` for the kernel mapping).
    pub fn raw_cols(&self) -> usize {
        match self.kind {
            MappingKind::Kernel => self.embed_dim / 2,
            _ => self.embed_dim,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    fn kernel_scale(&self) -> f64 {
        match self.kernel_norm {
            KernelNorm::InputDim => 1.0 / (self.attr_dim as f64).sqrt(),
            KernelNorm::OutputDim => 1.0 / (self.embed_dim as f64 / 2.0).sqrt(),
        }
    }

    fn check_input(&self, x: &SparseVec) -> Result<()> {
        for &(idx, val) in x {
            if idx as usize >= self.attr_dim {
                return Err(Error::DimensionMismatch {
                    expected: self.attr_dim,
                    got: idx as usize + 1,
                });
            }
            if !val.is_finite() {
                return Err(Error::Config("non-finite attribute value".into()));
            }
        }
        Ok(())
    }

    /// Raw pre-activations `z_k = w_k . x` per raw column. O(nnz(x) * cols).
    pub fn raw_activations(&self, x: &SparseVec) -> Vec<f64> {
        let cols = self.raw_cols();
        let mut z = vec![0.0; cols];
        for &(row, val) in x {
            let base = row as usize * cols;
            let wrow = &self.weights[base..base + cols];
            for (zk, &w) in z.iter_mut().zip(wrow) {
                *zk += val * w;
            }
        }
        z
    }

    /// The embedding `f(x)`.
    pub fn embed(&self, x: &SparseVec) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let z = self.raw_activations(x);
        Ok(self.activate(&z))
    }

    /// Apply the nonlinearity to raw activations.
    pub fn activate(&self, z: &[f64]) -> Vec<f64> {
        match self.kind {
            MappingKind::Linear => z.to_vec(),
            MappingKind::Relu => z.iter().map(|&v| v.max(0.0)).collect(),
            MappingKind::Sigmoid => z.iter().map(|&v| sigmoid(v)).collect(),
            MappingKind::Kernel => {
                let scale = self.kernel_scale();
                let half = z.len();
                let mut out = vec![0.0; 2 * half];
                for (k, &v) in z.iter().enumerate() {
                    out[k] = scale * v.cos();
                    out[k + half] = scale * v.sin();
                }
                out
            }
        }
    }

    /// Per-raw-column coefficients `c` such that the gradient of
    /// `upstream . f(x)` with respect to `W^in` is the outer product
    /// `x c^T` (rows indexed by `nnz(x)`).
    pub fn gradient_coefficients(&self, z: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        if upstream.len() != self.embed_dim {
            return Err(Error::DimensionMismatch {
                expected: self.embed_dim,
                got: upstream.len(),
            });
        }
        let cols = self.raw_cols();
        let mut coeff = vec![0.0; cols];
        match self.kind {
            MappingKind::Linear => coeff.copy_from_slice(upstream),
            MappingKind::Relu => {
                // subgradient 0 at the kink
                for k in 0..cols {
                    coeff[k] = if z[k] > 0.0 { upstream[k] } else { 0.0 };
                }
            }
            MappingKind::Sigmoid => {
                for k in 0..cols {
                    let s = sigmoid(z[k]);
                    coeff[k] = upstream[k] * s * (1.0 - s);
                }
            }
            MappingKind::Kernel => {
                let scale = self.kernel_scale();
                for k in 0..cols {
                    coeff[k] = scale * (-z[k].sin() * upstream[k] + z[k].cos() * upstream[k + cols]);
                }
            }
        }
        Ok(coeff)
    }

    /// The gradient of `upstream . f(x)` as explicit `(row, per-column values)`
    /// entries, nonzero only on attribute-supported rows.
    pub fn gradient_rows(&self, x: &SparseVec, upstream: &[f64]) -> Result<Vec<(u32, Vec<f64>)>> {
        self.check_input(x)?;
        let z = self.raw_activations(x);
        let coeff = self.gradient_coefficients(&z, upstream)?;
        Ok(x.iter()
            .map(|&(row, val)| (row, coeff.iter().map(|&c| c * val).collect()))
            .collect())
    }

    /// `W^in[row][col] += scale * coeff[col] * x[row]` over supported rows.
    pub fn apply_update(&mut self, x: &SparseVec, coeff: &[f64], scale: f64) {
        let cols = self.raw_cols();
        for &(row, val) in x {
            let base = row as usize * cols;
            let wrow = &mut self.weights[base..base + cols];
            for (w, &c) in wrow.iter_mut().zip(coeff) {
                *w += scale * c * val;
            }
        }
    }

    /// Binary model file: magic, kind, normalization flag, `m`, `d`, then the
    /// raw weight matrix row-major as little-endian f32.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w =
            BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
        w.write_all(MODEL_MAGIC).map_err(|e| Error::io(path, e))?;
        w.write_u8(self.kind.code()).map_err(|e| Error::io(path, e))?;
        let norm = match self.kernel_norm {
            KernelNorm::InputDim => 0u8,
            KernelNorm::OutputDim => 1u8,
        };
        w.write_u8(norm).map_err(|e| Error::io(path, e))?;
        w.write_u32::<LittleEndian>(self.attr_dim as u32)
            .map_err(|e| Error::io(path, e))?;
        w.write_u32::<LittleEndian>(self.embed_dim as u32)
            .map_err(|e| Error::io(path, e))?;
        for &v in &self.weights {
            w.write_f32::<LittleEndian>(v as f32)
                .map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r =
            BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
        if &magic != MODEL_MAGIC {
            return Err(Error::Config(format!(
                "{}: not a model file (bad magic)",
                path.display()
            )));
        }
        let kind = MappingKind::from_code(r.read_u8().map_err(|e| Error::io(path, e))?)?;
        let norm = match r.read_u8().map_err(|e| Error::io(path, e))? {
            0 => KernelNorm::InputDim,
            1 => KernelNorm::OutputDim,
            other => {
                return Err(Error::Config(format!(
                    "unknown kernel normalization flag {other}"
                )))
            }
        };
        let m = r.read_u32::<LittleEndian>().map_err(|e| Error::io(path, e))? as usize;
        let d = r.read_u32::<LittleEndian>().map_err(|e| Error::io(path, e))? as usize;
        let mut model = MappingModel::new(kind, m, d, norm)?;
        for w in model.weights.iter_mut() {
            *w = r.read_f32::<LittleEndian>().map_err(|e| Error::io(path, e))? as f64;
        }
        Ok(model)
    }
}

/// Training metadata written next to the model file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub mapping: MappingKind,
    pub attr_dim: usize,
    pub embed_dim: usize,
    pub kernel_norm: KernelNorm,
    pub iterations: u64,
    pub final_loss: Option<f64>,
    pub seed: u64,
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
