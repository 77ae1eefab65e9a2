use super::arch::ArchSpec;
use super::model::ParamSet;
use super::tensor::Tensor;
use crate::error::{Error, Result};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"EOCPRUN1";

/// JSON header stored ahead of the flat little-endian f64 payload.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct CheckpointHeader {
    pub arch: ArchSpec,
    pub sigma_w: f64,
    pub sigma_b: f64,
    pub seed: u64,
    /// Weight shapes then bias shapes, in layer order; payload follows the
    /// same order.
    pub weight_shapes: Vec<Vec<usize>>,
    pub bias_shapes: Vec<Vec<usize>>,
}

fn fmt_err(offset: u64, msg: impl Into<String>) -> Error {
    Error::Format {
        offset,
        msg: msg.into(),
    }
}

pub fn save_checkpoint(path: &Path, arch: &ArchSpec, params: &ParamSet) -> Result<()> {
    let header = CheckpointHeader {
        arch: arch.clone(),
        sigma_w: params.sigma_w,
        sigma_b: params.sigma_b,
        seed: params.seed,
        weight_shapes: params.weights.iter().map(|t| t.shape.clone()).collect(),
        bias_shapes: params.biases.iter().map(|t| t.shape.clone()).collect(),
    };
    let hjson = serde_json::to_vec(&header)?;
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::io::BufWriter::new(std::fs::File::create(&tmp)?);
        f.write_all(MAGIC)?;
        f.write_all(&(hjson.len() as u64).to_le_bytes())?;
        f.write_all(&hjson)?;
        for t in params.weights.iter().chain(&params.biases) {
            for v in &t.data {
                f.write_all(&v.to_le_bytes())?;
            }
        }
        f.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(CheckpointHeader, ParamSet)> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    f.read_exact(&mut magic)
        .map_err(|_| fmt_err(0, "file too short for magic"))?;
    if &magic != MAGIC {
        return Err(fmt_err(0, "bad magic (not a checkpoint file)"));
    }
    let mut lenb = [0u8; 8];
    f.read_exact(&mut lenb)
        .map_err(|_| fmt_err(8, "file too short for header length"))?;
    let hlen = u64::from_le_bytes(lenb);
    if hlen > 16 * 1024 * 1024 {
        return Err(fmt_err(8, format!("implausible header length {hlen}")));
    }
    let mut hjson = vec![0u8; hlen as usize];
    f.read_exact(&mut hjson)
        .map_err(|_| fmt_err(16, "file too short for header"))?;
    let header: CheckpointHeader =
        serde_json::from_slice(&hjson).map_err(|e| fmt_err(16, format!("header: {e}")))?;
    let mut offset = 16 + hlen;
    let mut read_tensor = |shape: &[usize]| -> Result<Tensor> {
        let numel: usize = shape.iter().product();
        let mut data = Vec::with_capacity(numel);
        let mut buf = [0u8; 8];
        for _ in 0..numel {
            f.read_exact(&mut buf)
                .map_err(|_| fmt_err(offset, "payload truncated"))?;
            let v = f64::from_le_bytes(buf);
            if !v.is_finite() {
                return Err(fmt_err(offset, format!("non-finite value {v}")));
            }
            data.push(v);
            offset += 8;
        }
        Tensor::from_vec(shape, data)
    };
    let mut weights = Vec::with_capacity(header.weight_shapes.len());
    for s in &header.weight_shapes {
        weights.push(read_tensor(s)?);
    }
    let mut biases = Vec::with_capacity(header.bias_shapes.len());
    for s in &header.bias_shapes {
        biases.push(read_tensor(s)?);
    }
    let params = ParamSet {
        weights,
        biases,
        sigma_w: header.sigma_w,
        sigma_b: header.sigma_b,
        seed: header.seed,
    };
    // Shapes must match the declared architecture.
    let layers = header.arch.layers()?;
    if layers.len() != params.weights.len() {
        return Err(fmt_err(16, "layer count does not match architecture"));
    }
    for (l, w) in layers.iter().zip(&params.weights) {
        if w.shape != l.op.weight_shape() {
            return Err(fmt_err(16, "weight shape does not match architecture"));
        }
    }
    Ok((header, params))
}
