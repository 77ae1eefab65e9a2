//! Minimal dense f64 network engine: fully connected and circular 1-D
//! convolutional layers, plain and residual (with optional 1/√L branch
//! scaling), reverse-mode gradients, SGD, and binary checkpoints.

mod arch;
mod checkpoint;
mod model;
mod tensor;

pub use arch::{ArchKind, ArchSpec, Layer, LayerOp};
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointHeader};
pub use model::{
    forward, grad_check, init_params, loss_and_grads, sgd_step, Batch, ForwardPass, Gradients,
    ParamSet,
};
pub use tensor::Tensor;
