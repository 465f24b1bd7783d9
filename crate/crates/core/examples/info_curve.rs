//! Measures how much information blurring removes, using the PNG size of
//! the blurred image relative to the minimally blurred one.
//!
//! ```text
//! cargo run --release --example info_curve -- [images]
//! ```

use mollify::analysis::{info_curve, pearson};
use mollify::synthetic::natural_images;
use mollify::tensor::{compute_channel_stats, standardize};
use mollify::ScheduleConfig;

fn main() -> mollify::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(64);
    let raw = natural_images(n, 32, 32, 3, 8);
    let stats = compute_channel_stats(&raw)?;
    let images = raw.iter().map(|i| standardize(i, &stats)).collect::<mollify::Result<Vec<_>>>()?;
    let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let curve = info_curve(&images, &stats, &ScheduleConfig::default(), &grid)?;

    println!("{:>5} {:>8} {:>10}", "t", "σ_B", "size ratio");
    for p in &curve {
        let bar = "#".repeat((p.mean_ratio * 50.0).round() as usize);
        println!("{:>5.2} {:>8.3} {:>10.4} {bar}", p.t, p.sigma_b, p.mean_ratio);
    }
    let ratios: Vec<f64> = curve.iter().map(|p| p.mean_ratio).collect();
    println!("\nPearson r(t, ratio) = {:.4} over {n} images", pearson(&grid, &ratios));
    Ok(())
}
