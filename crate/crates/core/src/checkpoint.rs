//! Parameter checkpoints.
//!
//! Byte layout (all integers little-endian):
//!
//! ```text
//! magic        8 bytes   "BAGCNCK\0"
//! version      u32       currently 1
//! header_len   u64
//! header       header_len bytes of UTF-8 JSON (model kind, config, graph name)
//! count        u32       number of arrays
//! per array:
//!   name_len   u32
//!   name       name_len bytes of UTF-8
//!   rows       u64
//!   cols       u64
//!   data       rows * cols f64 values, row-major
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baseline::{BaselineConfig, BaselineParams};
use crate::error::{Error, Result};
use crate::model::{ModelConfig, ModelParams, ParamSet, RunningStats};
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 8] = b"BAGCNCK\0";
pub const VERSION: u32 = 1;

/// What a checkpoint holds, echoed into its JSON header.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum CheckpointHeader {
    Bagcn { config: ModelConfig, graph: String },
    Baseline { config: BaselineConfig, graph: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub arrays: Vec<(String, Tensor)>,
}

impl Checkpoint {
    pub fn from_model(config: &ModelConfig, graph: &str, params: &ModelParams) -> Self {
        let mut arrays: Vec<(String, Tensor)> = params.tensors().into_iter().map(|(n, t)| (n.to_string(), t.clone())).collect();
        for (prefix, rs) in [("running_c", &params.running_c), ("running_ego", &params.running_ego)] {
            let d = rs.mean.len();
            arrays.push((format!("{prefix}_mean"), Tensor::from_vec(1, d, rs.mean.clone()).expect("length matches")));
            arrays.push((format!("{prefix}_var"), Tensor::from_vec(1, d, rs.var.clone()).expect("length matches")));
        }
        Checkpoint {
            header: CheckpointHeader::Bagcn {
                config: config.clone(),
                graph: graph.to_string(),
            },
            arrays,
        }
    }

    pub fn from_baseline(config: &BaselineConfig, graph: &str, params: &BaselineParams) -> Self {
        Checkpoint {
            header: CheckpointHeader::Baseline {
                config: config.clone(),
                graph: graph.to_string(),
            },
            arrays: params.tensors().into_iter().map(|(n, t)| (n.to_string(), t.clone())).collect(),
        }
    }

    fn take(&self, name: &str) -> Result<Tensor> {
        self.arrays
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t.clone())
            .ok_or_else(|| Error::Checkpoint(format!("missing array {name:?}")))
    }

    /// Rebuilds main-model parameters. Shapes are checked against the
    /// config; feature and class counts come from the stored arrays.
    pub fn model_params(&self) -> Result<(ModelConfig, ModelParams)> {
        let CheckpointHeader::Bagcn { config, .. } = &self.header else {
            return Err(Error::Checkpoint("checkpoint holds a baseline, not the main model".into()));
        };
        let w1 = self.take("w1")?;
        let mut p = ModelParams::init(w1.rows(), config.hidden_dim, self.take("wc")?.cols(), config.seed);
        for (name, t) in p.tensors_mut() {
            *t = self.take(name)?;
        }
        let stats = |prefix: &str| -> Result<RunningStats> {
            Ok(RunningStats {
                mean: self.take(&format!("{prefix}_mean"))?.into_data(),
                var: self.take(&format!("{prefix}_var"))?.into_data(),
            })
        };
        p.running_c = stats("running_c")?;
        p.running_ego = stats("running_ego")?;
        p.validate(w1.rows(), config.hidden_dim, p.wc.cols())
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        if p.running_c.mean.len() != config.hidden_dim || p.running_ego.var.len() != config.hidden_dim {
            return Err(Error::Checkpoint("running statistics have the wrong width".into()));
        }
        Ok((config.clone(), p))
    }

    pub fn baseline_params(&self) -> Result<(BaselineConfig, BaselineParams)> {
        let CheckpointHeader::Baseline { config, .. } = &self.header else {
            return Err(Error::Checkpoint("checkpoint holds the main model, not a baseline".into()));
        };
        let p = BaselineParams {
            w0: self.take("w0")?,
            b0: self.take("b0")?,
            w1: self.take("w1")?,
            b1: self.take("b1")?,
        };
        Ok((config.clone(), p))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&self.header).expect("header serializes");
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        out.extend_from_slice(&(self.arrays.len() as u32).to_le_bytes());
        for (name, t) in &self.arrays {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(t.rows() as u64).to_le_bytes());
            out.extend_from_slice(&(t.cols() as u64).to_le_bytes());
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = bytes;
        let mut magic = [0u8; 8];
        read_exact(&mut r, &mut magic, "magic")?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint("bad magic; not a checkpoint file".into()));
        }
        let version = u32::from_le_bytes(read_array(&mut r, "version")?);
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let header_len = read_len(&mut r, "header length")?;
        let header_bytes = read_vec(&mut r, header_len, "header")?;
        let header: CheckpointHeader =
            serde_json::from_slice(&header_bytes).map_err(|e| Error::Checkpoint(format!("header: {e}")))?;
        let count = u32::from_le_bytes(read_array(&mut r, "array count")?) as usize;
        let mut arrays = Vec::with_capacity(count.min(64));
        for _ in 0..count {
            let name_len = u32::from_le_bytes(read_array(&mut r, "name length")?) as usize;
            let name = String::from_utf8(read_vec(&mut r, name_len, "name")?)
                .map_err(|_| Error::Checkpoint("array name is not UTF-8".into()))?;
            let rows = read_len(&mut r, "rows")?;
            let cols = read_len(&mut r, "cols")?;
            let len = rows
                .checked_mul(cols)
                .filter(|&l| l.saturating_mul(8) <= r.len())
                .ok_or_else(|| Error::Checkpoint(format!("array {name:?} truncated")))?;
            let mut data = Vec::with_capacity(len);
            for _ in 0..len {
                data.push(f64::from_le_bytes(read_array(&mut r, "data")?));
            }
            arrays.push((name, Tensor::from_vec(rows, cols, data)?));
        }
        if !r.is_empty() {
            return Err(Error::Checkpoint(format!("{} trailing bytes", r.len())));
        }
        Ok(Checkpoint { header, arrays })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

fn read_exact(r: &mut &[u8], buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|_| Error::Checkpoint(format!("truncated at {what}")))
}

fn read_array<const N: usize>(r: &mut &[u8], what: &str) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    read_exact(r, &mut buf, what)?;
    Ok(buf)
}

fn read_len(r: &mut &[u8], what: &str) -> Result<usize> {
    usize::try_from(u64::from_le_bytes(read_array(r, what)?)).map_err(|_| Error::Checkpoint(format!("{what} overflows")))
}

fn read_vec(r: &mut &[u8], len: usize, what: &str) -> Result<Vec<u8>> {
    if len > r.len() {
        return Err(Error::Checkpoint(format!("truncated at {what}")));
    }
    let (head, tail) = r.split_at(len);
    *r = tail;
    Ok(head.to_vec())
}

/// Writes a dense matrix as `rows: u64, cols: u64, data: f64...` (LE).
pub fn save_matrix(t: &Tensor, path: impl AsRef<Path>) -> Result<()> {
    let mut out = Vec::with_capacity(16 + 8 * t.len());
    out.extend_from_slice(&(t.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(t.cols() as u64).to_le_bytes());
    for v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<Tensor> {
    let bytes = fs::read(path)?;
    let mut r = bytes.as_slice();
    let rows = read_len(&mut r, "rows")?;
    let cols = read_len(&mut r, "cols")?;
    if rows.checked_mul(cols).and_then(|l| l.checked_mul(8)) != Some(r.len()) {
        return Err(Error::Checkpoint("matrix size does not match its header".into()));
    }
    let data = r.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Tensor::from_vec(rows, cols, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::BaselineKind;

    fn model_ckpt() -> Checkpoint {
        let config = ModelConfig {
            hidden_dim: 4,
            ..Default::default()
        };
        let mut p = ModelParams::init(3, 4, 2, 9);
        p.running_c.mean[1] = 0.25;
        p.running_ego.var[3] = 7.5;
        Checkpoint::from_model(&config, "tiny", &p)
    }

    #[test]
    fn model_round_trip() {
        let ck = model_ckpt();
        let back = Checkpoint::from_bytes(&ck.to_bytes()).unwrap();
        assert_eq!(back, ck);
        let (config, p) = back.model_params().unwrap();
        assert_eq!(config.hidden_dim, 4);
        assert_eq!(p.running_c.mean[1], 0.25);
        assert_eq!(p.running_ego.var[3], 7.5);
        assert!(back.baseline_params().is_err());
    }

    #[test]
    fn baseline_round_trip() {
        let config = BaselineConfig::new(BaselineKind::Gcn2);
        let p = BaselineParams::init(BaselineKind::Gcn2, 3, 4, 2, 1);
        let ck = Checkpoint::from_baseline(&config, "g", &p);
        let (_, back) = Checkpoint::from_bytes(&ck.to_bytes()).unwrap().baseline_params().unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn layout_starts_with_magic_and_version() {
        let bytes = model_ckpt().to_bytes();
        assert_eq!(&bytes[..8], MAGIC);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 1);
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        let bytes = model_ckpt().to_bytes();
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 3]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(Checkpoint::from_bytes(&bad).is_err());
        let mut extra = bytes;
        extra.push(0);
        assert!(Checkpoint::from_bytes(&extra).is_err());
    }

    #[test]
    fn matrix_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let t = Tensor::from_rows(&[[1.0, -2.5], [0.125, 3.0]]);
        let path = dir.path().join("m.bin");
        save_matrix(&t, &path).unwrap();
        assert_eq!(load_matrix(&path).unwrap(), t);
    }
}
