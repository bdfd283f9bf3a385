//! Trainable scale-space networks over semifield algebras.
//!
//! A network is a 3×3 stem (1 → C channels), N layers — each an ordered menu
//! of convection and depthwise scale-space sublayers followed by a per-pixel
//! affine mix — and a 1×1 logistic head. Every sublayer carries a hand-derived
//! backward pass; training uses soft-Dice loss under Adam with decoupled
//! weight decay.

mod gradcheck;
mod loss;
mod mixing;
mod network;
mod optim;
mod stack;
mod sublayer;
mod synth;
mod train;

pub use gradcheck::{check_gradient, check_sublayer_case, CaseReport, FdReport, GradCase};
pub use loss::{dice_coefficient, soft_dice_loss, soft_dice_loss_and_grad, DICE_THRESHOLD};
pub use mixing::{
    affine_backward, affine_forward, head_backward, head_forward, logistic, stem_backward,
    stem_forward,
};
pub use network::{
    LayerTree, NetTape, Network, NetworkConfig, OptimizerConfig, ParamRole, ParamTree,
    SublayerKind,
};
pub use optim::{adam_decoupled_step, learning_rate, AdamState, MAX_METRIC_CONDITION};
pub use stack::FeatureStack;
pub use sublayer::{
    convect_field, convection_backward, convection_forward, ScaleSpaceOp, ScaleSpaceTape,
    ROOT_INPUT_FLOOR,
};
pub use synth::{
    generate_synthetic_vessels, generate_with_curve_count, mask_fraction, Sample,
    MASK_FRACTION_RANGE,
};
pub use train::{
    evaluate_dice, load_checkpoint, save_checkpoint, train, TrainOptions, TrainState,
    CHECKPOINT_MAGIC,
};

use thiserror::Error;

/// Errors from network construction, forward/backward passes, and training.
#[derive(Debug, Error)]
pub enum NetError {
    #[error("feature stack has no channels")]
    EmptyStack,
    #[error("stack channels have mismatched dimensions")]
    ChannelShapeMismatch,
    #[error("{what}: expected {expected} values, got {got}")]
    ParameterShape {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid network config: {0}")]
    InvalidConfig(String),
    #[error("training requires a nonempty dataset")]
    EmptyDataset,
    #[error("checkpoint magic mismatch: expected {expected:?}, got {got:?}")]
    BadCheckpoint { expected: &'static str, got: String },
    #[error(transparent)]
    Kernel(#[from] semifield_core::KernelError),
    #[error(transparent)]
    Grid(#[from] semifield_core::GridError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
