//! Dataset ingestion: MNIST IDX files and a synthetic Gaussian-blob
//! substitute for fast deterministic runs.

use crate::error::{Error, Result};
use crate::nnet::{Batch, Tensor};
use crate::rng::{fill_normal, stream_rng};
use std::path::Path;

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn fmt_err(offset: u64, msg: impl Into<String>) -> Error {
    Error::Format {
        offset,
        msg: msg.into(),
    }
}

fn be_u32(bytes: &[u8], offset: usize, what: &str) -> Result<u32> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(fmt_err(offset as u64, format!("truncated {what}")));
    }
    Ok(u32::from_be_bytes(bytes[offset..end].try_into().unwrap()))
}

/// Parsed IDX payload: big-endian dimensions plus the raw u8 body.
#[derive(Debug, Clone)]
pub struct IdxFile {
    pub magic: u32,
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

/// Parse an uncompressed IDX buffer (magic, big-endian dims, u8 payload).
pub fn parse_idx(bytes: &[u8]) -> Result<IdxFile> {
    let magic = be_u32(bytes, 0, "magic")?;
    if magic != IDX_IMAGES_MAGIC && magic != IDX_LABELS_MAGIC {
        return Err(fmt_err(0, format!("bad magic {magic:#010x}")));
    }
    let ndims = (magic & 0xff) as usize;
    let mut dims = Vec::with_capacity(ndims);
    for d in 0..ndims {
        dims.push(be_u32(bytes, 4 + 4 * d, "dimension")? as usize);
    }
    let body_at = 4 + 4 * ndims;
    let numel: usize = dims.iter().product();
    if bytes.len() < body_at + numel {
        return Err(fmt_err(
            bytes.len() as u64,
            format!("payload truncated: need {} bytes, have {}", body_at + numel, bytes.len()),
        ));
    }
    Ok(IdxFile {
        magic,
        dims,
        data: bytes[body_at..body_at + numel].to_vec(),
    })
}

fn load_idx_pair(images_path: &Path, labels_path: &Path) -> Result<Batch> {
    let images = parse_idx(&std::fs::read(images_path)?)?;
    if images.magic != IDX_IMAGES_MAGIC {
        return Err(fmt_err(0, format!("{}: expected image magic", images_path.display())));
    }
    let labels = parse_idx(&std::fs::read(labels_path)?)?;
    if labels.magic != IDX_LABELS_MAGIC {
        return Err(fmt_err(0, format!("{}: expected label magic", labels_path.display())));
    }
    let [count, rows, cols] = images.dims[..] else {
        return Err(fmt_err(4, "image file must have 3 dimensions".to_string()));
    };
    if labels.dims != [count] {
        return Err(fmt_err(4, "label count does not match image count".to_string()));
    }
    let dim = rows * cols;
    let data = images.data.iter().map(|&b| b as f64 / 255.0).collect();
    Ok(Batch {
        inputs: Tensor::from_vec(&[count, dim], data)?,
        labels: labels.data.iter().map(|&b| b as usize).collect(),
    })
}

/// File names of the four standard MNIST IDX files, relative to the data dir.
pub const MNIST_FILES: [&str; 4] = [
    "train-images-idx3-ubyte",
    "train-labels-idx1-ubyte",
    "t10k-images-idx3-ubyte",
    "t10k-labels-idx1-ubyte",
];

/// Load the 60000/10000 MNIST split from uncompressed IDX files in `dir`.
/// Pixels are scaled to [0,1], images flattened to 784-vectors.
pub fn load_mnist(dir: &Path) -> Result<(Batch, Batch)> {
    let train = load_idx_pair(&dir.join(MNIST_FILES[0]), &dir.join(MNIST_FILES[1]))?;
    let test = load_idx_pair(&dir.join(MNIST_FILES[2]), &dir.join(MNIST_FILES[3]))?;
    Ok((train, test))
}

/// Deterministic Gaussian class blobs: class k gets a mean at `margin`
/// times a random unit direction, unit isotropic noise around it. Labels
/// cycle k = i mod classes so every class is populated.
pub fn synthetic_data(
    classes: usize,
    dim: usize,
    count: usize,
    margin: f64,
    seed: u64,
) -> Result<Batch> {
    if classes == 0 || dim == 0 {
        return Err(crate::error::invalid("classes and dim must be positive"));
    }
    if !margin.is_finite() || margin < 0.0 {
        return Err(crate::error::invalid("margin must be finite and >= 0"));
    }
    let mut means = vec![0.0f64; classes * dim];
    fill_normal(&mut stream_rng(seed, 0x0b1a), &mut means, 0.0, 1.0);
    for k in 0..classes {
        let row = &mut means[k * dim..(k + 1) * dim];
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        for v in row.iter_mut() {
            *v *= margin / norm;
        }
    }
    let mut inputs = Tensor::zeros(&[count, dim]);
    fill_normal(&mut stream_rng(seed, 0x0b1b), &mut inputs.data, 0.0, 1.0);
    let mut labels = Vec::with_capacity(count);
    for i in 0..count {
        let k = i % classes;
        for j in 0..dim {
            inputs.data[i * dim + j] += means[k * dim + j];
        }
        labels.push(k);
    }
    Ok(Batch { inputs, labels })
}

/// Train/test pair with independent noise draws but shared class means.
pub fn synthetic_split(
    classes: usize,
    dim: usize,
    train: usize,
    test: usize,
    margin: f64,
    seed: u64,
) -> Result<(Batch, Batch)> {
    // Same seed → same means stream; distinct noise comes from count offsets.
    let mut all = synthetic_data(classes, dim, train + test, margin, seed)?;
    let dimsz = dim;
    let test_inputs = all.inputs.data.split_off(train * dimsz);
    let test_labels = all.labels.split_off(train);
    all.inputs.shape = vec![train, dimsz];
    Ok((
        Batch {
            inputs: all.inputs,
            labels: all.labels,
        },
        Batch {
            inputs: Tensor::from_vec(&[test, dimsz], test_inputs)?,
            labels: test_labels,
        },
    ))
}

/// Nearest-class-mean probe accuracy; a quick linear-separability check.
pub fn nearest_mean_accuracy(train: &Batch, test: &Batch, classes: usize) -> f64 {
    let dim = train.inputs.numel() / train.len().max(1);
    let mut means = vec![0.0; classes * dim];
    let mut counts = vec![0usize; classes];
    for (i, &k) in train.labels.iter().enumerate() {
        counts[k] += 1;
        for j in 0..dim {
            means[k * dim + j] += train.inputs.data[i * dim + j];
        }
    }
    for k in 0..classes {
        if counts[k] > 0 {
            for j in 0..dim {
                means[k * dim + j] /= counts[k] as f64;
            }
        }
    }
    let mut hits = 0usize;
    for (i, &k) in test.labels.iter().enumerate() {
        let x = &test.inputs.data[i * dim..(i + 1) * dim];
        let best = (0..classes)
            .min_by(|&a, &b| {
                let da: f64 = x
                    .iter()
                    .zip(&means[a * dim..(a + 1) * dim])
                    .map(|(xi, mi)| (xi - mi) * (xi - mi))
                    .sum();
                let db: f64 = x
                    .iter()
                    .zip(&means[b * dim..(b + 1) * dim])
                    .map(|(xi, mi)| (xi - mi) * (xi - mi))
                    .sum();
                da.partial_cmp(&db).unwrap()
            })
            .unwrap();
        if best == k {
            hits += 1;
        }
    }
    hits as f64 / test.len().max(1) as f64
}
