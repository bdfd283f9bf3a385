//! Temporary calibration driver for the two training benchmarks: `time`/`c8`
//! run the segmentation config, `c9` runs the data-efficiency sweep.

use std::time::Instant;

use semifield_net::{
    evaluate_dice, generate_synthetic_vessels, train, Network, NetworkConfig, OptimizerConfig,
    Sample, SublayerKind, TrainOptions,
};

fn c8(mode: &str) {
    let t0 = Instant::now();
    let all = generate_synthetic_vessels(7, 2200, 64);
    let (train_set, test_set) = all.split_at(2000);
    println!("data generated in {:?}", t0.elapsed());

    let cfg = NetworkConfig {
        layers: 4,
        channels: 12,
        menu: vec![
            SublayerKind::Convection,
            SublayerKind::TropicalMax { alpha: 2.0 },
            SublayerKind::TropicalMin { alpha: 2.0 },
        ],
        optimizer: OptimizerConfig::default(),
        batch_size: 8,
        seed: 7,
    };
    let mut net = Network::build(cfg).unwrap();
    println!("params: {}", net.param_count());

    let opts = match mode {
        "time" => TrainOptions {
            max_batches: 20,
            eval_every: 20,
            patience: usize::MAX / 2,
            ..TrainOptions::default()
        },
        _ => TrainOptions {
            max_batches: 3000,
            eval_every: 100,
            patience: usize::MAX / 2,
            target_dice: Some(0.85),
            log_path: Some("/tmp/c8.csv".into()),
            ..TrainOptions::default()
        },
    };
    let t1 = Instant::now();
    let state = train(&mut net, train_set, test_set, &opts).unwrap();
    println!(
        "batches {} best dice {:.4} train time {:?} total {:?}",
        state.batch,
        state.best_dice,
        t1.elapsed(),
        t0.elapsed()
    );
}

fn run_one(cfg: NetworkConfig, train_set: &[Sample], test_set: &[Sample], batches: usize) -> f64 {
    let mut net = Network::build(cfg).unwrap();
    let opts = TrainOptions {
        max_batches: batches,
        eval_every: 50,
        patience: usize::MAX / 2,
        target_dice: None,
        log_path: None,
    };
    let t = Instant::now();
    let state = train(&mut net, train_set, test_set, &opts).unwrap();
    // Also evaluate the final parameters in case the last eval wasn't best.
    let final_dice = evaluate_dice(&net, test_set).unwrap();
    let best = state.best_dice.max(final_dice);
    println!(
        "  seed {} n_train {:4} params {:4} best {:.4} ({:?})",
        net.config.seed,
        train_set.len(),
        net.param_count(),
        best,
        t.elapsed()
    );
    best
}

fn c9(batches: usize, size: usize) {
    let t0 = Instant::now();
    let pool = generate_synthetic_vessels(21, 600, size);
    let test = generate_synthetic_vessels(22, 100, size);
    println!("data generated in {:?}", t0.elapsed());

    let pde = |seed: u64| NetworkConfig {
        layers: 2,
        channels: 8,
        menu: vec![
            SublayerKind::Convection,
            SublayerKind::TropicalMax { alpha: 2.0 },
            SublayerKind::TropicalMin { alpha: 2.0 },
        ],
        optimizer: OptimizerConfig {
            warmdown_batches: batches,
            ..OptimizerConfig::default()
        },
        batch_size: 8,
        seed,
    };
    let affine = |seed: u64| NetworkConfig {
        menu: vec![],
        ..pde(seed)
    };

    let seeds = [11u64, 12, 13];
    for fraction in [30usize, 120, 600] {
        println!("pde fraction {fraction}:");
        let mut mean = 0.0;
        for &seed in &seeds {
            mean += run_one(pde(seed), &pool[..fraction], &test, batches);
        }
        println!("  mean {:.4}", mean / seeds.len() as f64);
    }
    println!("affine-only fraction 600:");
    let mut mean = 0.0;
    for &seed in &seeds {
        mean += run_one(affine(seed), &pool, &test, batches);
    }
    println!("  mean {:.4}", mean / seeds.len() as f64);
    println!("total {:?}", t0.elapsed());
}

fn main() {
    let mode = std::env::args().nth(1).unwrap_or_else(|| "time".into());
    match mode.as_str() {
        "c9" => {
            let batches = std::env::args()
                .nth(2)
                .and_then(|s| s.parse().ok())
                .unwrap_or(400);
            let size = std::env::args()
                .nth(3)
                .and_then(|s| s.parse().ok())
                .unwrap_or(48);
            c9(batches, size);
        }
        other => c8(other),
    }
}
