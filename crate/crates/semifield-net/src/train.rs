//! Training loop: batched soft-Dice descent with periodic hard-Dice
//! evaluation, best-state tracking, early stopping, CSV logging, and a
//! versioned JSON checkpoint format.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::loss::{dice_coefficient, soft_dice_loss_and_grad};
use crate::network::{Network, NetworkConfig, ParamTree};
use crate::optim::{adam_decoupled_step, learning_rate, AdamState};
use crate::synth::Sample;
use crate::NetError;

/// Magic header of the checkpoint JSON; bump when the layout changes.
pub const CHECKPOINT_MAGIC: &str = "SFPDE1";

/// Knobs of one training run (architecture/optimizer live in NetworkConfig).
#[derive(Debug, Clone)]
pub struct TrainOptions {
    /// Hard ceiling on optimizer steps.
    pub max_batches: usize,
    /// Stop after this many batches without test-Dice improvement.
    pub patience: usize,
    /// Evaluate on the test set every this many batches.
    pub eval_every: usize,
    /// Stop as soon as the best test Dice reaches this value.
    pub target_dice: Option<f64>,
    /// Append `batch,lr,train_loss,test_dice` rows here when set.
    pub log_path: Option<std::path::PathBuf>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            max_batches: 20_000,
            patience: 2_000,
            eval_every: 100,
            target_dice: None,
            log_path: None,
        }
    }
}

/// Everything a run produces: final and best parameters, moments, counters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainState {
    pub config: NetworkConfig,
    pub params: ParamTree,
    pub adam: AdamState,
    pub batch: usize,
    pub best_dice: f64,
    pub best_params: ParamTree,
    /// Mean soft-Dice loss of every optimized batch, in order.
    #[serde(default)]
    pub loss_history: Vec<f64>,
}

/// Versioned JSON wrapper so stale checkpoints fail loudly.
#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    magic: String,
    state: TrainState,
}

pub fn save_checkpoint(state: &TrainState, path: &Path) -> Result<(), NetError> {
    let file = CheckpointFile { magic: CHECKPOINT_MAGIC.to_string(), state: state.clone() };
    let json = serde_json::to_string(&file)?;
    fs::write(path, json)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<TrainState, NetError> {
    let text = fs::read_to_string(path)?;
    let file: CheckpointFile = serde_json::from_str(&text)?;
    if file.magic != CHECKPOINT_MAGIC {
        return Err(NetError::BadCheckpoint {
            expected: CHECKPOINT_MAGIC,
            got: file.magic,
        });
    }
    Ok(file.state)
}

/// Mean hard Dice of `network` over a sample set.
pub fn evaluate_dice(network: &Network, set: &[Sample]) -> Result<f64, NetError> {
    if set.is_empty() {
        return Err(NetError::EmptyDataset);
    }
    // Parallel per sample; the final sum runs in sample order.
    let dices: Vec<f64> = set
        .par_iter()
        .map(|sample| {
            let pred = network.forward(&sample.image)?;
            dice_coefficient(&pred, &sample.mask)
        })
        .collect::<Result<_, NetError>>()?;
    Ok(dices.iter().sum::<f64>() / set.len() as f64)
}

/// Trains `network` in place and returns the run's state. Deterministic for
/// fixed (config, seed, dataset): item order, gradient accumulation, and the
/// optimizer all run in a fixed sequential order.
pub fn train(
    network: &mut Network,
    train_set: &[Sample],
    test_set: &[Sample],
    opts: &TrainOptions,
) -> Result<TrainState, NetError> {
    if train_set.is_empty() || test_set.is_empty() {
        return Err(NetError::EmptyDataset);
    }
    let config = network.config.clone();
    let batch_size = config.batch_size;
    let mut adam = AdamState::new(&network.params);
    let mut order_rng = ChaCha12Rng::seed_from_u64(config.seed ^ 0x5EED_5EED_5EED_5EED);
    let mut order: Vec<usize> = Vec::new();

    let mut log = match &opts.log_path {
        Some(p) => {
            let mut f = fs::File::create(p)?;
            writeln!(f, "batch,lr,train_loss,test_dice")?;
            Some(f)
        }
        None => None,
    };

    let mut best_dice = f64::NEG_INFINITY;
    let mut best_params = network.params.clone();
    let mut best_at = 0usize;
    let mut batch = 0usize;
    let mut loss_window = 0.0;
    let mut loss_count = 0usize;
    let mut loss_history = Vec::new();

    'outer: while batch < opts.max_batches {
        // Fixed-seed reshuffle whenever the epoch runs dry.
        if order.len() < batch_size {
            let mut epoch: Vec<usize> = (0..train_set.len()).collect();
            epoch.shuffle(&mut order_rng);
            order.extend(epoch);
        }
        let lr = learning_rate(&config.optimizer, batch);
        let mut grads = network.params.zeros_like();
        let mut batch_loss = 0.0;
        for _ in 0..batch_size {
            let idx = order.remove(0);
            let sample = &train_set[idx];
            let tape = network.forward_train(&sample.image)?;
            let (loss, dpred) = soft_dice_loss_and_grad(tape.prediction(), &sample.mask)?;
            batch_loss += loss;
            network.backward(&tape, &dpred, &mut grads);
        }
        scale(&mut grads, 1.0 / batch_size as f64);
        batch_loss /= batch_size as f64;
        adam_decoupled_step(network, &mut adam, &grads, lr);
        batch += 1;
        loss_window += batch_loss;
        loss_count += 1;
        loss_history.push(batch_loss);

        if batch % opts.eval_every == 0 {
            let dice = evaluate_dice(network, test_set)?;
            if dice > best_dice {
                best_dice = dice;
                best_params = network.params.clone();
                best_at = batch;
            }
            if let Some(f) = log.as_mut() {
                writeln!(
                    f,
                    "{},{},{},{}",
                    batch,
                    lr,
                    loss_window / loss_count.max(1) as f64,
                    dice
                )?;
            }
            loss_window = 0.0;
            loss_count = 0;
            if let Some(target) = opts.target_dice {
                if best_dice >= target {
                    break 'outer;
                }
            }
            if batch - best_at >= opts.patience {
                break 'outer;
            }
        }
    }

    Ok(TrainState {
        config,
        params: network.params.clone(),
        adam,
        batch,
        best_dice,
        best_params,
        loss_history,
    })
}

fn scale(tree: &mut ParamTree, s: f64) {
    let each = |v: &mut Vec<f64>| v.iter_mut().for_each(|x| *x *= s);
    each(&mut tree.stem);
    for layer in &mut tree.layers {
        for sub in &mut layer.sublayers {
            each(sub);
        }
        each(&mut layer.affine_w);
        each(&mut layer.affine_b);
    }
    each(&mut tree.head);
}
