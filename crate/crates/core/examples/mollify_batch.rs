//! Mollifies a batch of images the way the trainer does and prints, for
//! each image, the drawn mode and temperature, the label decay attached to
//! it, the resulting smoothed label and how far the input moved.

use mollify::labels::{one_hot, smooth_label};
use mollify::mollifier::mollify_batch;
use mollify::synthetic::natural_images;
use mollify::tensor::{compute_channel_stats, standardize};
use mollify::{rng, Mode, ScheduleConfig};

fn main() -> mollify::Result<()> {
    let raw = natural_images(12, 16, 16, 3, 1);
    let stats = compute_channel_stats(&raw)?;
    let images = raw.iter().map(|i| standardize(i, &stats)).collect::<mollify::Result<Vec<_>>>()?;
    let cfg = ScheduleConfig::default();
    let mut r = rng::seeded(5);
    let batch = mollify_batch(&images, &cfg, &mut r)?;

    println!("{:>3} {:>6} {:>6} {:>7} {:>10}  smoothed label (class 0 of 4)", "i", "mode", "t", "γ", "rms Δx");
    let mut counts = [0usize; 3];
    for (i, (ex, clean)) in batch.iter().zip(&images).enumerate() {
        counts[ex.params.mode as usize] += 1;
        let rms = (ex.image.data().iter().zip(clean.data()).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
            / clean.len() as f64)
            .sqrt();
        let label = smooth_label(&one_hot(0, 4)?, ex.gamma)?;
        let shown: Vec<String> = label.probs().iter().map(|p| format!("{p:.3}")).collect();
        println!(
            "{i:>3} {:>6} {:>6.3} {:>7.4} {rms:>10.4}  [{}]",
            ex.params.mode.as_str(),
            ex.params.t,
            ex.gamma,
            shown.join(" ")
        );
    }
    println!(
        "\nmodes: {} {}, {} {}, {} {} (probabilities {:?})",
        counts[0],
        Mode::None.as_str(),
        counts[1],
        Mode::Noise.as_str(),
        counts[2],
        Mode::Blur.as_str(),
        cfg.mode_probs
    );

    let again = mollify_batch(&images, &cfg, &mut rng::seeded(5))?;
    println!("same seed reproduces the batch: {}", again == batch);
    Ok(())
}
