//! Policy checkpoints (`MDCK`) and portable tensor files (`MDTS`).
//!
//! Both share one layout: 4-byte magic, version u32, header length u64, JSON
//! header, then a block of little-endian `f64`s whose length the header fixes.

use std::path::Path;

use demoforge_core::il::{ExpertDataset, Sample, SourceKind};
use demoforge_core::md::TaskId;
use demoforge_core::nn::{GaussianPolicy, Mlp};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"MDCK";
pub const TENSOR_MAGIC: &[u8; 4] = b"MDTS";
const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum FileError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad file: {0}")]
    Format(String),
    #[error("truncated file: {0}")]
    Truncated(String),
}

fn encode<H: Serialize>(
    magic: &[u8; 4],
    header: &H,
    data: impl IntoIterator<Item = f64>,
) -> Vec<u8> {
    let h = serde_json::to_vec(header).expect("headers serialize");
    let mut out = Vec::with_capacity(16 + h.len());
    out.extend_from_slice(magic);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(h.len() as u64).to_le_bytes());
    out.extend_from_slice(&h);
    for x in data {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

fn decode<H: DeserializeOwned>(magic: &[u8; 4], bytes: &[u8]) -> Result<(H, Vec<f64>), FileError> {
    if bytes.len() < 16 || &bytes[..4] != magic {
        return Err(FileError::Format(format!(
            "expected magic {}",
            String::from_utf8_lossy(magic)
        )));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(FileError::Format(format!("unsupported version {version}")));
    }
    let len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let body = bytes
        .get(16..16 + len)
        .ok_or_else(|| FileError::Truncated("header".into()))?;
    let header =
        serde_json::from_slice(body).map_err(|e| FileError::Format(format!("header: {e}")))?;
    let rest = &bytes[16 + len..];
    if !rest.len().is_multiple_of(8) {
        return Err(FileError::Truncated(format!(
            "{} stray bytes after the last float",
            rest.len() % 8
        )));
    }
    let data = rest
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((header, data))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub kind: String,
    /// Mean-network layer sizes.
    pub sizes: Vec<usize>,
    pub action_scale: f64,
    pub task: TaskId,
    /// Training algorithm that produced the parameters.
    pub algorithm: String,
    pub seed: u64,
    /// Mean-network parameters followed by `log_std`.
    pub n_params: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub policy: GaussianPolicy,
}

impl Checkpoint {
    pub fn new(policy: GaussianPolicy, task: TaskId, algorithm: &str, seed: u64) -> Self {
        let header = CheckpointHeader {
            kind: "gaussian_policy".into(),
            sizes: policy.mean.sizes().to_vec(),
            action_scale: policy.action_scale,
            task,
            algorithm: algorithm.into(),
            seed,
            n_params: policy.n_params(),
        };
        Checkpoint { header, policy }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        encode(CHECKPOINT_MAGIC, &self.header, self.policy.params())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FileError> {
        let (header, params): (CheckpointHeader, _) = decode(CHECKPOINT_MAGIC, bytes)?;
        if header.kind != "gaussian_policy" {
            return Err(FileError::Format(format!(
                "unknown checkpoint kind `{}`",
                header.kind
            )));
        }
        if params.len() != header.n_params {
            return Err(FileError::Truncated(format!(
                "expected {} parameters, found {}",
                header.n_params,
                params.len()
            )));
        }
        let mean = Mlp::zeros(&header.sizes).map_err(|e| FileError::Format(e.to_string()))?;
        let act_dim = mean.output_dim();
        let mut policy = GaussianPolicy::from_parts(mean, vec![0.0; act_dim], header.action_scale)
            .map_err(|e| FileError::Format(e.to_string()))?;
        policy
            .set_params(&params)
            .map_err(|e| FileError::Format(e.to_string()))?;
        Ok(Checkpoint { header, policy })
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<(), FileError> {
        Ok(std::fs::write(path, self.to_bytes())?)
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self, FileError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockInfo {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorHeader {
    pub blocks: Vec<BlockInfo>,
    #[serde(default)]
    pub meta: serde_json::Value,
}

/// Named row-major `f64` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorFile {
    pub meta: serde_json::Value,
    pub blocks: Vec<(BlockInfo, Vec<f64>)>,
}

impl TensorFile {
    pub fn block(&self, name: &str) -> Option<(&BlockInfo, &[f64])> {
        self.blocks
            .iter()
            .find(|(b, _)| b.name == name)
            .map(|(b, d)| (b, d.as_slice()))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = TensorHeader {
            blocks: self.blocks.iter().map(|(b, _)| b.clone()).collect(),
            meta: self.meta.clone(),
        };
        encode(
            TENSOR_MAGIC,
            &header,
            self.blocks.iter().flat_map(|(_, d)| d.iter().copied()),
        )
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FileError> {
        let (header, data): (TensorHeader, Vec<f64>) = decode(TENSOR_MAGIC, bytes)?;
        let expected: usize = header.blocks.iter().map(|b| b.rows * b.cols).sum();
        if expected != data.len() {
            return Err(FileError::Truncated(format!(
                "expected {expected} floats, found {}",
                data.len()
            )));
        }
        let mut off = 0;
        let blocks = header
            .blocks
            .into_iter()
            .map(|b| {
                let n = b.rows * b.cols;
                let d = data[off..off + n].to_vec();
                off += n;
                (b, d)
            })
            .collect();
        Ok(TensorFile {
            meta: header.meta,
            blocks,
        })
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<(), FileError> {
        Ok(std::fs::write(path, self.to_bytes())?)
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self, FileError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

/// Blocks `observations`, `actions`, `trajectory` and `kind` (0 scripted, 1 human).
pub fn dataset_to_tensors(data: &ExpertDataset, task: TaskId) -> TensorFile {
    let (obs_dim, act_dim) = data.dims().unwrap_or((0, 0));
    let n = data.len();
    let block = |name: &str, cols: usize| BlockInfo {
        name: name.into(),
        rows: n,
        cols,
    };
    let s = &data.samples;
    TensorFile {
        meta: serde_json::json!({ "task": task }),
        blocks: vec![
            (
                block("observations", obs_dim),
                s.iter().flat_map(|x| x.obs.iter().copied()).collect(),
            ),
            (
                block("actions", act_dim),
                s.iter().flat_map(|x| x.action.iter().copied()).collect(),
            ),
            (
                block("trajectory", 1),
                s.iter().map(|x| x.trajectory as f64).collect(),
            ),
            (
                block("kind", 1),
                s.iter()
                    .map(|x| {
                        if x.kind == SourceKind::Human {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect(),
            ),
        ],
    }
}

pub fn dataset_from_tensors(t: &TensorFile) -> Result<ExpertDataset, FileError> {
    let get = |name: &str| {
        t.block(name)
            .ok_or_else(|| FileError::Format(format!("missing block `{name}`")))
    };
    let (ob, obs) = get("observations")?;
    let (ab, acts) = get("actions")?;
    let (tb, traj) = get("trajectory")?;
    let kinds = t.block("kind").map(|(_, d)| d);
    if ab.rows != ob.rows || tb.rows != ob.rows {
        return Err(FileError::Format(
            "blocks disagree on the number of samples".into(),
        ));
    }
    let samples = (0..ob.rows)
        .map(|k| Sample {
            obs: obs[k * ob.cols..(k + 1) * ob.cols].to_vec(),
            action: acts[k * ab.cols..(k + 1) * ab.cols].to_vec(),
            trajectory: traj[k] as usize,
            kind: match kinds.map(|d| d[k]) {
                Some(1.0) => SourceKind::Human,
                _ => SourceKind::Scripted,
            },
        })
        .collect();
    Ok(ExpertDataset { samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let mut p = GaussianPolicy::new(&[9, 8, 3], -0.7, 1000.0, 4).unwrap();
        p.set_log_std(&[-1.0, 0.5, -4.9]);
        let ck = Checkpoint::new(p, TaskId::Nanotube, "bc", 4);
        let back = Checkpoint::from_bytes(&ck.to_bytes()).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.to_bytes(), ck.to_bytes());
    }

    #[test]
    fn checkpoint_rejects_wrong_magic_and_truncation() {
        let ck = Checkpoint::new(
            GaussianPolicy::new(&[2, 3], 0.0, 1.0, 0).unwrap(),
            TaskId::Nanotube,
            "bc",
            0,
        );
        let bytes = ck.to_bytes();
        assert!(matches!(
            Checkpoint::from_bytes(&bytes[..bytes.len() - 8]),
            Err(FileError::Truncated(_))
        ));
        assert!(matches!(
            Checkpoint::from_bytes(&bytes[..bytes.len() - 3]),
            Err(FileError::Truncated(_))
        ));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(
            Checkpoint::from_bytes(&bad),
            Err(FileError::Format(_))
        ));
    }

    #[test]
    fn dataset_tensor_round_trip() {
        let mut data = ExpertDataset::default();
        for t in 0..3 {
            for k in 0..4 {
                data.samples.push(Sample {
                    obs: vec![t as f64, k as f64, 0.1],
                    action: vec![1.0 / 3.0, -2.0, 5e-300],
                    trajectory: t,
                    kind: if t == 2 {
                        SourceKind::Human
                    } else {
                        SourceKind::Scripted
                    },
                });
            }
        }
        let t = dataset_to_tensors(&data, TaskId::Nanotube);
        let back = dataset_from_tensors(&TensorFile::from_bytes(&t.to_bytes()).unwrap()).unwrap();
        assert_eq!(back, data);
    }
}
