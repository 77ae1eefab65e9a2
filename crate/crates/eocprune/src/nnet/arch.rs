use crate::error::{invalid, Result};
use crate::gaussfield::ActivationKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchKind {
    Ffnn,
    Cnn1d,
    ResnetFfnn,
    ResnetCnn1d,
}

/// Architecture description. `depth` counts square hidden layers (FFNN/CNN)
/// or residual blocks (ResNets); a linear classification head is always
/// appended and ResNets get a non-residual embedding layer in front.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ArchSpec {
    pub kind: ArchKind,
    pub act: ActivationKind,
    /// FFNN variants: input feature count d. CNN variants: ignored
    /// (input is in_channels × spatial).
    pub input_dim: usize,
    pub classes: usize,
    pub depth: usize,
    /// Hidden width for FFNN variants.
    pub width: usize,
    /// Channel count for CNN variants.
    pub channels: usize,
    pub in_channels: usize,
    /// Kernel radius k; window size 2k+1.
    pub kernel_radius: usize,
    /// Spatial length N for CNN variants (circular).
    pub spatial: usize,
    /// ResNets only: scale residual branches by 1/√L.
    pub stable: bool,
}

/// One weight layer of the lowered network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum LayerOp {
    /// Weights [out, inp].
    Dense { out: usize, inp: usize },
    /// Weights [c_out, c_in, 2k+1], circular over length n.
    Conv {
        c_out: usize,
        c_in: usize,
        k: usize,
        n: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Layer {
    pub op: LayerOp,
    pub residual: bool,
    /// Multiplier on the layer output before the residual add (1/√L for
    /// stable ResNet branches, 1 otherwise).
    pub branch_scale: f64,
}

impl LayerOp {
    pub fn weight_shape(&self) -> Vec<usize> {
        match *self {
            LayerOp::Dense { out, inp } => vec![out, inp],
            LayerOp::Conv { c_out, c_in, k, .. } => vec![c_out, c_in, 2 * k + 1],
        }
    }

    pub fn bias_len(&self) -> usize {
        match *self {
            LayerOp::Dense { out, .. } => out,
            LayerOp::Conv { c_out, .. } => c_out,
        }
    }

    pub fn out_rows(&self) -> usize {
        self.bias_len()
    }

    /// Fan-in v_l: N_{l−1} for dense, n_{l−1}(2k+1) for conv.
    pub fn fan_in(&self) -> usize {
        match *self {
            LayerOp::Dense { inp, .. } => inp,
            LayerOp::Conv { c_in, k, .. } => c_in * (2 * k + 1),
        }
    }

    /// Weight count M_l.
    pub fn weight_count(&self) -> usize {
        self.weight_shape().iter().product()
    }
}

impl ArchSpec {
    pub fn ffnn(act: ActivationKind, input_dim: usize, width: usize, depth: usize, classes: usize) -> ArchSpec {
        ArchSpec {
            kind: ArchKind::Ffnn,
            act,
            input_dim,
            classes,
            depth,
            width,
            channels: 0,
            in_channels: 0,
            kernel_radius: 0,
            spatial: 0,
            stable: false,
        }
    }

    pub fn cnn1d(
        act: ActivationKind,
        in_channels: usize,
        channels: usize,
        spatial: usize,
        kernel_radius: usize,
        depth: usize,
        classes: usize,
    ) -> ArchSpec {
        ArchSpec {
            kind: ArchKind::Cnn1d,
            act,
            input_dim: in_channels * spatial,
            classes,
            depth,
            width: 0,
            channels,
            in_channels,
            kernel_radius,
            spatial,
            stable: false,
        }
    }

    pub fn resnet_ffnn(
        act: ActivationKind,
        input_dim: usize,
        width: usize,
        blocks: usize,
        classes: usize,
        stable: bool,
    ) -> ArchSpec {
        ArchSpec {
            stable,
            kind: ArchKind::ResnetFfnn,
            ..ArchSpec::ffnn(act, input_dim, width, blocks, classes)
        }
    }

    pub fn resnet_cnn1d(
        act: ActivationKind,
        in_channels: usize,
        channels: usize,
        spatial: usize,
        kernel_radius: usize,
        blocks: usize,
        classes: usize,
        stable: bool,
    ) -> ArchSpec {
        ArchSpec {
            stable,
            kind: ArchKind::ResnetCnn1d,
            ..ArchSpec::cnn1d(act, in_channels, channels, spatial, kernel_radius, blocks, classes)
        }
    }

    fn is_cnn(&self) -> bool {
        matches!(self.kind, ArchKind::Cnn1d | ArchKind::ResnetCnn1d)
    }

    pub fn is_resnet(&self) -> bool {
        matches!(self.kind, ArchKind::ResnetFfnn | ArchKind::ResnetCnn1d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 || self.classes == 0 {
            return Err(invalid("depth and classes must be >= 1"));
        }
        if self.is_cnn() {
            if self.channels == 0 || self.in_channels == 0 || self.spatial == 0 {
                return Err(invalid("cnn needs channels, in_channels, spatial >= 1"));
            }
            if 2 * self.kernel_radius + 1 > self.spatial {
                return Err(invalid("kernel 2k+1 must not exceed spatial size"));
            }
        } else if self.width == 0 || self.input_dim == 0 {
            return Err(invalid("ffnn needs width and input_dim >= 1"));
        }
        Ok(())
    }

    /// Expand into the concrete weight-layer list (embedding where needed,
    /// `depth` body layers, linear head).
    pub fn layers(&self) -> Result<Vec<Layer>> {
        self.validate()?;
        let mut out = Vec::new();
        let plain = |op| Layer {
            op,
            residual: false,
            branch_scale: 1.0,
        };
        let branch_scale = if self.stable {
            1.0 / (self.depth as f64).sqrt()
        } else {
            1.0
        };
        let body = |op| Layer {
            op,
            residual: true,
            branch_scale,
        };
        match self.kind {
            ArchKind::Ffnn => {
                let mut inp = self.input_dim;
                for _ in 0..self.depth {
                    out.push(plain(LayerOp::Dense {
                        out: self.width,
                        inp,
                    }));
                    inp = self.width;
                }
                out.push(plain(LayerOp::Dense {
                    out: self.classes,
                    inp,
                }));
            }
            ArchKind::Cnn1d => {
                let mut c_in = self.in_channels;
                for _ in 0..self.depth {
                    out.push(plain(LayerOp::Conv {
                        c_out: self.channels,
                        c_in,
                        k: self.kernel_radius,
                        n: self.spatial,
                    }));
                    c_in = self.channels;
                }
                out.push(plain(LayerOp::Dense {
                    out: self.classes,
                    inp: self.channels * self.spatial,
                }));
            }
            ArchKind::ResnetFfnn => {
                out.push(plain(LayerOp::Dense {
                    out: self.width,
                    inp: self.input_dim,
                }));
                for _ in 0..self.depth {
                    out.push(body(LayerOp::Dense {
                        out: self.width,
                        inp: self.width,
                    }));
                }
                out.push(plain(LayerOp::Dense {
                    out: self.classes,
                    inp: self.width,
                }));
            }
            ArchKind::ResnetCnn1d => {
                out.push(plain(LayerOp::Conv {
                    c_out: self.channels,
                    c_in: self.in_channels,
                    k: self.kernel_radius,
                    n: self.spatial,
                }));
                for _ in 0..self.depth {
                    out.push(body(LayerOp::Conv {
                        c_out: self.channels,
                        c_in: self.channels,
                        k: self.kernel_radius,
                        n: self.spatial,
                    }));
                }
                out.push(plain(LayerOp::Dense {
                    out: self.classes,
                    inp: self.channels * self.spatial,
                }));
            }
        }
        Ok(out)
    }

    /// Total prunable weight count ΣM_l.
    pub fn total_weights(&self) -> Result<usize> {
        Ok(self.layers()?.iter().map(|l| l.op.weight_count()).sum())
    }
}
