//! Network assembly: a 3×3 stem lifts the image to C channels, N layers each
//! apply their sublayer menu in order followed by a per-pixel affine mix, and
//! a 1×1 head plus logistic squashing produces a soft segmentation.
//!
//! Parameter count, closed form (uniform menu, convection = 2C, scale-space
//! sublayer = 4C):
//!   P = 9C + N·(C² + C + Σ_menu cost) + C

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use semifield_core::{Grid2, Mat2, SemifieldKind};
use serde::{Deserialize, Serialize};

use crate::mixing;
use crate::stack::FeatureStack;
use crate::sublayer::{self, ScaleSpaceOp, ScaleSpaceTape};
use crate::NetError;

/// One entry of a layer's sublayer menu, applied in listed order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum SublayerKind {
    /// Bilinear shift by a trainable per-channel vector.
    Convection,
    /// Morphological dilation sublayer (max-plus).
    TropicalMax {
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
    /// Morphological erosion sublayer (min-plus).
    TropicalMin {
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
    /// Smooth-maximum diffusion sublayer.
    Log { mu: f64 },
    /// Root-power diffusion sublayer.
    Root { p: f64 },
    /// Gaussian diffusion sublayer.
    Linear,
}

fn default_alpha() -> f64 {
    2.0
}

impl SublayerKind {
    /// Trainable parameters this sublayer adds per layer at C channels.
    pub fn param_cost(&self, c: usize) -> usize {
        match self {
            SublayerKind::Convection => 2 * c,
            _ => 4 * c,
        }
    }

    fn scale_space_op(&self) -> Option<ScaleSpaceOp> {
        match *self {
            SublayerKind::Convection => None,
            SublayerKind::TropicalMax { alpha } => {
                Some(ScaleSpaceOp::new(SemifieldKind::TropicalMax, alpha))
            }
            SublayerKind::TropicalMin { alpha } => {
                Some(ScaleSpaceOp::new(SemifieldKind::TropicalMin, alpha))
            }
            SublayerKind::Log { mu } => Some(ScaleSpaceOp::new(SemifieldKind::Log { mu }, 2.0)),
            SublayerKind::Root { p } => Some(ScaleSpaceOp::new(SemifieldKind::Root { p }, 2.0)),
            SublayerKind::Linear => Some(ScaleSpaceOp::new(SemifieldKind::Linear, 2.0)),
        }
    }
}

/// Optimizer settings: bias-corrected Adam with decoupled weight decay and a
/// linear learning-rate warm-down.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub lr_init: f64,
    pub lr_final: f64,
    pub warmdown_batches: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            lr_init: 0.01,
            lr_final: 0.001,
            warmdown_batches: 1000,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

/// Full architecture + training hyperparameters; serializable as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub layers: usize,
    pub channels: usize,
    /// Sublayer menu applied, in order, inside every layer.
    pub menu: Vec<SublayerKind>,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_batch_size() -> usize {
    8
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<(), NetError> {
        if self.layers == 0 || self.channels == 0 {
            return Err(NetError::InvalidConfig(
                "layers and channels must be at least 1".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(NetError::InvalidConfig("batch_size must be at least 1".into()));
        }
        for entry in &self.menu {
            match *entry {
                SublayerKind::TropicalMax { alpha } | SublayerKind::TropicalMin { alpha } => {
                    if !(alpha.is_finite() && alpha > 1.0) {
                        return Err(NetError::InvalidConfig(format!(
                            "tropical sublayer exponent must be finite and > 1, got {alpha}"
                        )));
                    }
                }
                SublayerKind::Log { mu } => {
                    if !(mu.is_finite() && mu != 0.0) {
                        return Err(NetError::InvalidConfig(format!(
                            "log sublayer parameter must be finite and nonzero, got {mu}"
                        )));
                    }
                }
                SublayerKind::Root { p } => {
                    if !(p.is_finite() && p > 0.0) {
                        return Err(NetError::InvalidConfig(format!(
                            "root sublayer power must be finite and positive, got {p}"
                        )));
                    }
                }
                SublayerKind::Convection | SublayerKind::Linear => {}
            }
        }
        Ok(())
    }

    /// Closed-form trainable-parameter count for this configuration.
    pub fn param_count(&self) -> usize {
        let c = self.channels;
        let menu: usize = self.menu.iter().map(|m| m.param_cost(c)).sum();
        9 * c + self.layers * (c * c + c + menu) + c
    }
}

/// All trainable parameters, shaped like the architecture. The same tree type
/// stores gradients and Adam moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamTree {
    /// 3×3 stem weights, 9 per channel.
    pub stem: Vec<f64>,
    pub layers: Vec<LayerTree>,
    /// 1×1 head weights, one per channel.
    pub head: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerTree {
    /// Aligned with the config menu: 2C values (convection) or 4C (metrics).
    pub sublayers: Vec<Vec<f64>>,
    /// C×C mixing weights, out-major.
    pub affine_w: Vec<f64>,
    /// C mixing biases.
    pub affine_b: Vec<f64>,
}

/// Role of a parameter tensor; drives weight decay and post-step projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamRole {
    StemWeight,
    ConvectionV,
    MetricH,
    AffineWeight,
    AffineBias,
    HeadWeight,
}

impl ParamRole {
    /// Decoupled weight decay applies to mixing weights only: decaying the
    /// metrics widens kernels without bound, and biases are conventionally
    /// exempt.
    pub fn decayed(&self) -> bool {
        matches!(
            self,
            ParamRole::StemWeight | ParamRole::AffineWeight | ParamRole::HeadWeight
        )
    }
}

impl ParamTree {
    /// Same shape, all zeros.
    pub fn zeros_like(&self) -> ParamTree {
        ParamTree {
            stem: vec![0.0; self.stem.len()],
            layers: self
                .layers
                .iter()
                .map(|l| LayerTree {
                    sublayers: l.sublayers.iter().map(|s| vec![0.0; s.len()]).collect(),
                    affine_w: vec![0.0; l.affine_w.len()],
                    affine_b: vec![0.0; l.affine_b.len()],
                })
                .collect(),
            head: vec![0.0; self.head.len()],
        }
    }

    pub fn param_count(&self) -> usize {
        let mut n = self.stem.len() + self.head.len();
        for l in &self.layers {
            n += l.affine_w.len() + l.affine_b.len();
            n += l.sublayers.iter().map(Vec::len).sum::<usize>();
        }
        n
    }

    /// Visits every tensor with its role, in a fixed architecture order.
    pub fn for_each_tensor(&self, menu: &[SublayerKind], mut f: impl FnMut(ParamRole, &[f64])) {
        f(ParamRole::StemWeight, &self.stem);
        for layer in &self.layers {
            for (entry, tensor) in menu.iter().zip(&layer.sublayers) {
                let role = match entry {
                    SublayerKind::Convection => ParamRole::ConvectionV,
                    _ => ParamRole::MetricH,
                };
                f(role, tensor);
            }
            f(ParamRole::AffineWeight, &layer.affine_w);
            f(ParamRole::AffineBias, &layer.affine_b);
        }
        f(ParamRole::HeadWeight, &self.head);
    }

    /// Flattens to a single vector in the [`Self::for_each_tensor`] order.
    pub fn flatten(&self, menu: &[SublayerKind]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        self.for_each_tensor(menu, |_, t| out.extend_from_slice(t));
        out
    }

    /// Inverse of [`Self::flatten`]; panics if the length disagrees.
    pub fn unflatten_into(&mut self, flat: &[f64]) {
        let mut pos = 0;
        let mut take = |t: &mut Vec<f64>| {
            let n = t.len();
            t.copy_from_slice(&flat[pos..pos + n]);
            pos += n;
        };
        take(&mut self.stem);
        for layer in &mut self.layers {
            for s in &mut layer.sublayers {
                take(s);
            }
            take(&mut layer.affine_w);
            take(&mut layer.affine_b);
        }
        take(&mut self.head);
        assert_eq!(pos, flat.len(), "flat parameter vector length mismatch");
    }
}

/// A built network: configuration plus current parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub config: NetworkConfig,
    pub params: ParamTree,
}

/// Saved activations from one forward pass, consumed by [`Network::backward`].
pub struct NetTape {
    image: Grid2,
    /// Per layer: input to each sublayer (in menu order), scale-space tapes
    /// where applicable, and the affine input.
    layers: Vec<LayerTape>,
    head_input: FeatureStack,
    prediction: Grid2,
}

struct LayerTape {
    sublayer_inputs: Vec<FeatureStack>,
    scale_tapes: Vec<Option<ScaleSpaceTape>>,
    affine_input: FeatureStack,
}

impl NetTape {
    pub fn prediction(&self) -> &Grid2 {
        &self.prediction
    }
}

impl Network {
    /// Builds a network with randomly initialized parameters:
    /// near-isotropic unit-scale metrics `diag(u,u) + skew`, u ~ U[0.7, 1.3],
    /// convection vectors ~ U[−1,1]², fan-in-scaled uniform mixing weights.
    pub fn build(config: NetworkConfig) -> Result<Network, NetError> {
        config.validate()?;
        let c = config.channels;
        let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
        let fan = |rng: &mut ChaCha12Rng, n: usize, fan_in: usize| -> Vec<f64> {
            let bound = 1.0 / (fan_in as f64).sqrt();
            (0..n).map(|_| rng.random_range(-bound..bound)).collect()
        };
        let stem = fan(&mut rng, 9 * c, 9);
        let mut layers = Vec::with_capacity(config.layers);
        for _ in 0..config.layers {
            let mut sublayers = Vec::with_capacity(config.menu.len());
            for entry in &config.menu {
                match entry {
                    SublayerKind::Convection => {
                        let v = (0..2 * c).map(|_| rng.random_range(-1.0..1.0)).collect();
                        sublayers.push(v);
                    }
                    _ => {
                        let mut hvals = Vec::with_capacity(4 * c);
                        for _ in 0..c {
                            let u: f64 = rng.random_range(0.7..1.3);
                            let s1: f64 = rng.random_range(-0.1..0.1);
                            let s2: f64 = rng.random_range(-0.1..0.1);
                            hvals.extend_from_slice(&[u, s1, s2, u]);
                        }
                        sublayers.push(hvals);
                    }
                }
            }
            layers.push(LayerTree {
                sublayers,
                affine_w: fan(&mut rng, c * c, c),
                affine_b: fan(&mut rng, c, c),
            });
        }
        let head = fan(&mut rng, c, c);
        let params = ParamTree { stem, layers, head };
        debug_assert_eq!(params.param_count(), config.param_count());
        Ok(Network { config, params })
    }

    pub fn param_count(&self) -> usize {
        self.config.param_count()
    }

    /// Inference: image in, soft segmentation in (0,1) out.
    pub fn forward(&self, image: &Grid2) -> Result<Grid2, NetError> {
        Ok(self.forward_train(image)?.prediction.clone())
    }

    /// Forward pass that records the activations needed by [`Self::backward`].
    pub fn forward_train(&self, image: &Grid2) -> Result<NetTape, NetError> {
        let c = self.config.channels;
        let mut stack = mixing::stem_forward(&self.params.stem, image, c)?;
        let mut layer_tapes = Vec::with_capacity(self.config.layers);
        for layer in &self.params.layers {
            let mut sublayer_inputs = Vec::with_capacity(self.config.menu.len());
            let mut scale_tapes = Vec::with_capacity(self.config.menu.len());
            for (entry, tensor) in self.config.menu.iter().zip(&layer.sublayers) {
                sublayer_inputs.push(stack.clone());
                match entry.scale_space_op() {
                    None => {
                        stack = sublayer::convection_forward(tensor, &stack)?;
                        scale_tapes.push(None);
                    }
                    Some(op) => {
                        let (out, tape) = op.forward(tensor, &stack)?;
                        stack = out;
                        scale_tapes.push(Some(tape));
                    }
                }
            }
            let affine_input = stack.clone();
            stack = mixing::affine_forward(&layer.affine_w, &layer.affine_b, &stack)?;
            layer_tapes.push(LayerTape { sublayer_inputs, scale_tapes, affine_input });
        }
        let z = mixing::head_forward(&self.params.head, &stack)?;
        let prediction = mixing::logistic(&z);
        Ok(NetTape {
            image: image.clone(),
            layers: layer_tapes,
            head_input: stack,
            prediction,
        })
    }

    /// Backpropagates ∂L/∂prediction through the tape, accumulating parameter
    /// gradients into `grads` (shaped like the parameters).
    pub fn backward(&self, tape: &NetTape, dpred: &Grid2, grads: &mut ParamTree) {
        // Through the logistic: dz = dpred · p·(1−p).
        let p = &tape.prediction;
        let dz = Grid2::from_fn(p.width(), p.height(), |x, y| {
            let v = p.get(x, y);
            dpred.get(x, y) * v * (1.0 - v)
        });
        let (dhead, mut dstack) = mixing::head_backward(&self.params.head, &tape.head_input, &dz);
        add_assign(&mut grads.head, &dhead);
        for (li, layer) in self.params.layers.iter().enumerate().rev() {
            let ltape = &tape.layers[li];
            let (dw, db, dinp) =
                mixing::affine_backward(&layer.affine_w, &ltape.affine_input, &dstack);
            add_assign(&mut grads.layers[li].affine_w, &dw);
            add_assign(&mut grads.layers[li].affine_b, &db);
            dstack = dinp;
            for si in (0..self.config.menu.len()).rev() {
                let entry = self.config.menu[si];
                let tensor = &layer.sublayers[si];
                match entry.scale_space_op() {
                    None => {
                        let (dv, dinp) = sublayer::convection_backward(
                            tensor,
                            &ltape.sublayer_inputs[si],
                            &dstack,
                        );
                        add_assign(&mut grads.layers[li].sublayers[si], &dv);
                        dstack = dinp;
                    }
                    Some(op) => {
                        let stape = ltape.scale_tapes[si].as_ref().expect("scale tape saved");
                        let (dh, dinp) = op.backward(stape, &dstack);
                        add_assign(&mut grads.layers[li].sublayers[si], &dh);
                        dstack = dinp;
                    }
                }
            }
        }
        let dstem = mixing::stem_backward(&tape.image, &dstack);
        add_assign(&mut grads.stem, &dstem);
    }

    /// Clamps every metric matrix to condition number ≤ `max_cond` by raising
    /// its small singular value; applied after each optimizer step.
    pub fn clamp_metric_conditions(&mut self, max_cond: f64) {
        for layer in &mut self.params.layers {
            for (entry, tensor) in self.config.menu.iter().zip(&mut layer.sublayers) {
                if matches!(entry, SublayerKind::Convection) {
                    continue;
                }
                for ch in 0..tensor.len() / 4 {
                    let h = Mat2::new(
                        tensor[4 * ch],
                        tensor[4 * ch + 1],
                        tensor[4 * ch + 2],
                        tensor[4 * ch + 3],
                    );
                    if !h.is_finite() || h.condition_number() > max_cond {
                        let clamped = h.clamped_condition(max_cond);
                        tensor[4 * ch] = clamped.m[0][0];
                        tensor[4 * ch + 1] = clamped.m[0][1];
                        tensor[4 * ch + 2] = clamped.m[1][0];
                        tensor[4 * ch + 3] = clamped.m[1][1];
                    }
                }
            }
        }
    }
}

fn add_assign(dst: &mut [f64], src: &[f64]) {
    debug_assert_eq!(dst.len(), src.len());
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}
