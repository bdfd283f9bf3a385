//! Bias-corrected Adam with decoupled weight decay and a linear learning-rate
//! warm-down. Decay touches mixing weights only (see [`ParamRole::decayed`]);
//! metrics are condition-clamped by the caller after each step.

use crate::network::{Network, OptimizerConfig, ParamRole, ParamTree, SublayerKind};

/// Largest metric condition number allowed after an optimizer step.
pub const MAX_METRIC_CONDITION: f64 = 1e6;

/// First and second Adam moments, shaped like the parameters.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AdamState {
    pub m: ParamTree,
    pub v: ParamTree,
    /// Completed steps; bias correction uses `step + 1` during an update.
    pub step: usize,
}

impl AdamState {
    pub fn new(params: &ParamTree) -> Self {
        AdamState { m: params.zeros_like(), v: params.zeros_like(), step: 0 }
    }
}

/// Learning rate for 0-based batch index `b`: linear from `lr_init` to
/// `lr_final` across `warmdown_batches`, constant afterwards.
pub fn learning_rate(cfg: &OptimizerConfig, batch: usize) -> f64 {
    if batch >= cfg.warmdown_batches {
        return cfg.lr_final;
    }
    let frac = batch as f64 / cfg.warmdown_batches as f64;
    cfg.lr_init + (cfg.lr_final - cfg.lr_init) * frac
}

/// One optimizer step: Adam update from `grads`, decoupled decay on the
/// decayed roles, then metric condition clamping.
pub fn adam_decoupled_step(
    network: &mut Network,
    state: &mut AdamState,
    grads: &ParamTree,
    lr: f64,
) {
    let cfg = network.config.optimizer;
    state.step += 1;
    let t = state.step as f64;
    let bc1 = 1.0 - cfg.beta1.powf(t);
    let bc2 = 1.0 - cfg.beta2.powf(t);
    let menu = network.config.menu.clone();

    let update = |role: ParamRole, p: &mut [f64], m: &mut [f64], v: &mut [f64], g: &[f64]| {
        for i in 0..p.len() {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            let mhat = m[i] / bc1;
            let vhat = v[i] / bc2;
            p[i] -= lr * mhat / (vhat.sqrt() + cfg.eps);
            if role.decayed() {
                p[i] -= lr * cfg.weight_decay * p[i];
            }
        }
    };

    let params = &mut network.params;
    update(
        ParamRole::StemWeight,
        &mut params.stem,
        &mut state.m.stem,
        &mut state.v.stem,
        &grads.stem,
    );
    for (li, layer) in params.layers.iter_mut().enumerate() {
        for (si, entry) in menu.iter().enumerate() {
            let role = match entry {
                SublayerKind::Convection => ParamRole::ConvectionV,
                _ => ParamRole::MetricH,
            };
            update(
                role,
                &mut layer.sublayers[si],
                &mut state.m.layers[li].sublayers[si],
                &mut state.v.layers[li].sublayers[si],
                &grads.layers[li].sublayers[si],
            );
        }
        update(
            ParamRole::AffineWeight,
            &mut layer.affine_w,
            &mut state.m.layers[li].affine_w,
            &mut state.v.layers[li].affine_w,
            &grads.layers[li].affine_w,
        );
        update(
            ParamRole::AffineBias,
            &mut layer.affine_b,
            &mut state.m.layers[li].affine_b,
            &mut state.v.layers[li].affine_b,
            &grads.layers[li].affine_b,
        );
    }
    update(
        ParamRole::HeadWeight,
        &mut params.head,
        &mut state.m.head,
        &mut state.v.head,
        &grads.head,
    );

    network.clamp_metric_conditions(MAX_METRIC_CONDITION);
}
