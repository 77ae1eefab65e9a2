//! Experiment configuration (JSON) and run records.

use crate::error::{invalid, Result};
use crate::gaussfield::{eoc_solve, ActivationKind, EdgePoint};
use crate::nnet::{ArchKind, ArchSpec};
use crate::pruning::{PruneCriterion, PruneReport};
use std::path::PathBuf;

/// Architecture block of a config file; lowered to [`ArchSpec`] once the
/// dataset fixes `input_dim`/`classes`.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ArchConfig {
    pub kind: ArchKind,
    pub act: ActivationKind,
    pub depth: usize,
    pub width: usize,
    #[serde(default)]
    pub channels: usize,
    #[serde(default)]
    pub kernel_radius: usize,
    #[serde(default)]
    pub spatial: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Eoc,
    Ordered,
    Chaotic,
}

/// Initialization: either explicit (σ_w, σ_b), or a phase keyword resolved
/// against the EOC at the given σ_b. The default offsets are σ_w_EOC × 0.7
/// (ordered) and × 1.3 (chaotic); `offset` overrides the multiplier.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(untagged)]
pub enum InitConfig {
    Explicit { sigma_w: f64, sigma_b: f64 },
    Phase {
        phase: Phase,
        sigma_b: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        offset: Option<f64>,
    },
}

/// Resolved initialization: the operating point plus, when it exists, the
/// fixed-point diagnostics at that point (absent e.g. for chaotic ReLU,
/// whose variance map has no finite fixed point).
#[derive(Debug, Clone)]
pub struct ResolvedInit {
    pub sigma_w: f64,
    pub sigma_b: f64,
    pub edge: Option<EdgePoint>,
}

impl InitConfig {
    pub fn resolve(&self, act: ActivationKind) -> Result<ResolvedInit> {
        match *self {
            InitConfig::Explicit { sigma_w, sigma_b } => Ok(ResolvedInit {
                sigma_w,
                sigma_b,
                edge: EdgePoint::resolve(act, sigma_b, sigma_w).ok(),
            }),
            InitConfig::Phase { phase, sigma_b, offset } => {
                let edge = eoc_solve(act, sigma_b)?;
                let mult = offset.unwrap_or(match phase {
                    Phase::Eoc => 1.0,
                    Phase::Ordered => 0.7,
                    Phase::Chaotic => 1.3,
                });
                if !(mult.is_finite() && mult > 0.0) {
                    return Err(invalid("phase offset must be a positive multiplier"));
                }
                Ok(ResolvedInit {
                    sigma_w: edge.sigma_w * mult,
                    sigma_b,
                    edge: Some(edge),
                })
            }
        }
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct PruneConfig {
    pub criterion: PruneCriterion,
    pub sparsity: f64,
    #[serde(default)]
    pub rescale: bool,
    #[serde(default)]
    pub stable: bool,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch: usize,
    pub iterations: usize,
    /// Record the train loss every this many iterations (and at the end).
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

fn default_record_every() -> usize {
    100
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DatasetConfig {
    Mnist {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dir: Option<PathBuf>,
    },
    Synthetic {
        classes: usize,
        dim: usize,
        train: usize,
        test: usize,
        margin: f64,
    },
}

impl DatasetConfig {
    pub fn input_dim(&self) -> usize {
        match *self {
            DatasetConfig::Mnist { .. } => 784,
            DatasetConfig::Synthetic { dim, .. } => dim,
        }
    }

    pub fn classes(&self) -> usize {
        match *self {
            DatasetConfig::Mnist { .. } => 10,
            DatasetConfig::Synthetic { classes, .. } => classes,
        }
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SweepGrid {
    pub depths: Vec<usize>,
    pub sparsities: Vec<f64>,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ExperimentConfig {
    pub arch: ArchConfig,
    pub init: InitConfig,
    pub pruning: PruneConfig,
    pub training: TrainConfig,
    pub dataset: DatasetConfig,
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepGrid>,
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<ExperimentConfig> {
        ExperimentConfig::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.pruning.sparsity) {
            return Err(invalid("sparsity must be in [0, 1)"));
        }
        if self.training.lr <= 0.0 || self.training.batch == 0 {
            return Err(invalid("lr must be positive and batch nonzero"));
        }
        if self.arch.depth == 0 || self.arch.width == 0 {
            return Err(invalid("depth and width must be positive"));
        }
        match self.arch.kind {
            ArchKind::Cnn1d | ArchKind::ResnetCnn1d => {
                if self.arch.channels == 0 || self.arch.spatial == 0 {
                    return Err(invalid("CNN archs need channels and spatial"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Lower the arch block to a concrete [`ArchSpec`] for this dataset,
    /// at the given depth (sweeps override `arch.depth`).
    pub fn arch_spec(&self, depth: usize) -> Result<ArchSpec> {
        let a = &self.arch;
        let classes = self.dataset.classes();
        let spec = match a.kind {
            ArchKind::Ffnn => {
                ArchSpec::ffnn(a.act, self.dataset.input_dim(), a.width, depth, classes)
            }
            ArchKind::ResnetFfnn => ArchSpec::resnet_ffnn(
                a.act,
                self.dataset.input_dim(),
                a.width,
                depth,
                classes,
                self.pruning.stable,
            ),
            ArchKind::Cnn1d => {
                let in_ch = self.dataset.input_dim() / a.spatial.max(1);
                if in_ch * a.spatial != self.dataset.input_dim() {
                    return Err(invalid("spatial must divide the input dimension"));
                }
                ArchSpec::cnn1d(a.act, in_ch, a.channels, a.spatial, a.kernel_radius, depth, classes)
            }
            ArchKind::ResnetCnn1d => {
                let in_ch = self.dataset.input_dim() / a.spatial.max(1);
                if in_ch * a.spatial != self.dataset.input_dim() {
                    return Err(invalid("spatial must divide the input dimension"));
                }
                ArchSpec::resnet_cnn1d(
                    a.act,
                    in_ch,
                    a.channels,
                    a.spatial,
                    a.kernel_radius,
                    depth,
                    classes,
                    self.pruning.stable,
                )
            }
        };
        Ok(spec)
    }

    /// Stable content hash (FNV-1a over canonical JSON); keys sweep cells
    /// and names output files.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        format!("{:016x}", fnv1a(&json))
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Failed,
}

/// Everything one training run produces, keyed by the config hash.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub depth: usize,
    pub sparsity: f64,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// (iteration, train loss) samples.
    pub losses: Vec<(usize, f64)>,
    pub test_accuracy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prune_report: Option<PruneReport>,
    pub wall_secs: f64,
}
