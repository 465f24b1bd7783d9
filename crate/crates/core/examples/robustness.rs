//! End to end: trains a plain and a mollified MLP on the oriented-texture
//! task and compares clean and corrupted error and calibration.
//!
//! ```text
//! cargo run --release --example robustness -- [epochs] [train size] [seed]
//! ```

use mollify::analysis::corruption_suite;
use mollify::metrics::{error_rate, Summary, DEFAULT_BINS};
use mollify::synthetic::{texture_dataset, TextureSpec};
use mollify::tensor::{compute_channel_stats, standardize, ChannelStats};
use mollify::trainer::{predict_batch, predict_images, train, TrainConfig};
use mollify::{rng, Dataset};

fn standardized(n: usize, seed: u64, stats: Option<&ChannelStats>) -> mollify::Result<(Dataset, ChannelStats)> {
    let raw = texture_dataset(n, &TextureSpec::default(), seed);
    let stats = match stats {
        Some(s) => s.clone(),
        None => compute_channel_stats(&raw.images)?,
    };
    let images = raw.images.iter().map(|i| standardize(i, &stats)).collect::<mollify::Result<Vec<_>>>()?;
    Ok((Dataset::new(images, raw.labels, raw.num_classes)?, stats))
}

fn main() -> mollify::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<u64>().ok());
    let epochs = args.next().flatten().unwrap_or(30) as usize;
    let n_train = args.next().flatten().unwrap_or(2048) as usize;
    let seed = args.next().flatten().unwrap_or(0);

    let (train_set, stats) = standardized(n_train, rng::mix(seed, 1), None)?;
    let (test_set, _) = standardized(1024, rng::mix(seed, 2), Some(&stats))?;
    let suite = corruption_suite(&test_set.images, rng::mix(seed, 3))?;
    println!("{} training images, {} test images, {} corrupted copies", train_set.len(), test_set.len(), suite.len());

    println!("\n{:<10} {:>11} {:>11} {:>11} {:>11}", "arm", "clean err", "corr err", "corr NLL", "corr ECE");
    for mollify in [false, true] {
        let cfg = TrainConfig {
            epochs,
            batch_size: 128,
            lr0: 0.05,
            hidden_units: 256,
            momentum: 0.9,
            seed,
            mollify,
            ..Default::default()
        };
        let (params, report) = train(&train_set, &cfg)?;
        let clean = predict_batch(&params, &test_set)?;
        let mut corrupted = Vec::new();
        for (tag, imgs) in &suite {
            corrupted.extend(predict_images(&params, imgs, &test_set.labels, tag)?);
        }
        let summary = Summary::of(&corrupted, DEFAULT_BINS)?;
        println!(
            "{:<10} {:>11.4} {:>11.4} {:>11.4} {:>11.4}   (final loss {:.4})",
            if mollify { "mollified" } else { "plain" },
            error_rate(&clean)?,
            summary.error,
            summary.nll,
            summary.ece,
            report.epochs.last().map_or(f64::NAN, |e| e.loss),
        );
    }
    Ok(())
}
