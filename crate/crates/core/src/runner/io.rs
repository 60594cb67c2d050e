//! Embedding file and label sidecar formats.
//!
//! Embedding file layout (all little-endian):
//!
//! ```text
//! offset  size          field
//! 0       4             magic "ECLP"
//! 4       4             version (u32) = 1
//! 8       4             count (u32)
//! 12      4             dim (u32)
//! 16      count*dim*4   payload, f32 row-major
//! ```
//!
//! Rows need not be normalized on disk; ingestion normalizes them and
//! rejects zero rows.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Embedding, NodeKind};

pub const MAGIC: [u8; 4] = *b"ECLP";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 16;

fn ingest<T>(offset: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Ingest { offset: offset as u64, message: message.into() })
}

/// Raw contents of an embedding file.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingFile {
    dim: usize,
    data: Vec<f32>,
}

impl EmbeddingFile {
    pub fn new(dim: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::Config(format!("{} values do not split into rows of {dim}", data.len())));
        }
        if u32::try_from(dim).is_err() || u32::try_from(data.len() / dim).is_err() {
            return Err(Error::Config("embedding file exceeds u32 header fields".into()));
        }
        Ok(Self { dim, data })
    }

    /// Builds a file from equal-length rows.
    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(1);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: r.len() });
            }
            data.extend_from_slice(r);
        }
        Self::new(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.data.len() * 4);
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.count() as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return ingest(bytes.len(), format!("truncated header ({} of {HEADER_LEN} bytes)", bytes.len()));
        }
        if bytes[0..4] != MAGIC {
            return ingest(0, "bad magic, expected \"ECLP\"");
        }
        let word = |at: usize| u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]]);
        let version = word(4);
        if version != VERSION {
            return ingest(4, format!("unsupported version {version}"));
        }
        let count = word(8) as usize;
        let dim = word(12) as usize;
        if dim == 0 {
            return ingest(12, "dimension is zero");
        }
        let expected = count
            .checked_mul(dim)
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| Error::Ingest { offset: 8, message: "payload size overflows".into() })?;
        let payload = &bytes[HEADER_LEN..];
        if payload.len() != expected {
            let at = HEADER_LEN + payload.len().min(expected);
            return ingest(at, format!("payload is {} bytes, header implies {expected}", payload.len()));
        }
        let mut data = Vec::with_capacity(count * dim);
        for (i, chunk) in payload.chunks_exact(4).enumerate() {
            let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
            if !v.is_finite() {
                return ingest(HEADER_LEN + 4 * i, "non-finite value");
            }
            data.push(v);
        }
        Ok(Self { dim, data })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    /// Normalizes every row into an [`Embedding`]. `class_ids` must be given
    /// (one per row) for prototype and few-shot files. Zero rows are reported
    /// with the byte offset of the row.
    pub fn to_embeddings(&self, kind: NodeKind, class_ids: Option<&[usize]>) -> Result<Vec<Embedding>> {
        if let Some(ids) = class_ids {
            if ids.len() != self.count() {
                return Err(Error::Config(format!("{} class ids for {} rows", ids.len(), self.count())));
            }
        }
        (0..self.count())
            .map(|i| {
                let class = class_ids.map(|ids| ids[i]);
                Embedding::from_f32(self.row(i), kind, class).or_else(|e| match e {
                    Error::ZeroVector => ingest(HEADER_LEN + i * self.dim * 4, format!("row {i} is a zero vector")),
                    other => Err(other),
                })
            })
            .collect()
    }
}

/// Few-shot class assignment: either one class id per few-shot row, or one
/// list of row indices per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FewshotIndices {
    PerRow(Vec<usize>),
    PerClass(Vec<Vec<usize>>),
}

/// Class names, optional ground truth for the test stream, and the few-shot
/// class assignment.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LabelSidecar {
    pub class_names: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fewshot_indices: Option<FewshotIndices>,
}

impl LabelSidecar {
    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.class_names.is_empty() {
            return Err(Error::Config("sidecar lists no classes".into()));
        }
        let mut names: Vec<&str> = self.class_names.iter().map(String::as_str).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("duplicate class name {:?}", w[0])));
        }
        let classes = self.num_classes();
        if let Some(&class) = self.labels.iter().flatten().find(|&&l| l >= classes) {
            return Err(Error::InvalidLabel { class, classes });
        }
        Ok(())
    }

    /// Class id of each of the `rows` few-shot rows.
    pub fn fewshot_labels(&self, rows: usize) -> Result<Vec<usize>> {
        let classes = self.num_classes();
        let labels = match &self.fewshot_indices {
            None => return Err(Error::Config("few-shot file given but sidecar has no fewshot_indices".into())),
            Some(FewshotIndices::PerRow(ids)) => {
                if ids.len() != rows {
                    return Err(Error::Config(format!("fewshot_indices has {} entries for {rows} rows", ids.len())));
                }
                ids.clone()
            }
            Some(FewshotIndices::PerClass(groups)) => {
                if groups.len() > classes {
                    return Err(Error::InvalidLabel { class: groups.len() - 1, classes });
                }
                let mut out = vec![usize::MAX; rows];
                for (class, group) in groups.iter().enumerate() {
                    for &r in group {
                        if r >= rows || out[r] != usize::MAX {
                            return Err(Error::Config(format!("few-shot row {r} missing or assigned twice")));
                        }
                        out[r] = class;
                    }
                }
                if let Some(r) = out.iter().position(|&c| c == usize::MAX) {
                    return Err(Error::Config(format!("few-shot row {r} has no class")));
                }
                out
            }
        };
        if let Some(&class) = labels.iter().find(|&&c| c >= classes) {
            return Err(Error::InvalidLabel { class, classes });
        }
        Ok(labels)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let sidecar: Self = serde_json::from_slice(&fs::read(path)?)?;
        sidecar.validate()?;
        Ok(sidecar)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }
}
