//! Tabulates the noise, blur and label-decay schedules and shows how the
//! Beta temperature prior spreads draws over `[0, 1]`.
//!
//! ```text
//! cargo run --example schedules -- [width]
//! ```

use mollify::schedules::{alpha_sigma, dissipation_time, gamma_blur, gamma_noise, sample_temperature, snr};
use mollify::{rng, ScheduleConfig};

fn main() -> mollify::Result<()> {
    let width: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(32);
    let cfg = ScheduleConfig::default();

    println!("{:>5} {:>8} {:>8} {:>10} {:>9} {:>8} {:>9} {:>9}", "t", "alpha", "sigma", "snr", "γ_noise", "σ_B", "τ", "γ_blur");
    for step in 0..=10 {
        let t = step as f64 / 10.0;
        let (alpha, sigma) = alpha_sigma(t)?;
        let sigma_b = cfg.blur_sigma(t, width);
        println!(
            "{t:>5.2} {alpha:>8.4} {sigma:>8.4} {:>10.4} {:>9.4} {sigma_b:>8.3} {:>9.3} {:>9.4}",
            snr(t),
            gamma_noise(t, cfg.k_noise),
            dissipation_time(sigma_b),
            gamma_blur(t, cfg.k_blur),
        );
    }

    let mut r = rng::seeded(0);
    let draws: Vec<f64> = (0..20_000).map(|_| sample_temperature(&mut r, &cfg)).collect();
    let mut hist = [0usize; 10];
    for &t in &draws {
        hist[((t * 10.0) as usize).min(9)] += 1;
    }
    println!(
        "\ntemperature prior Beta({}, {}), {} draws",
        cfg.beta_alpha,
        cfg.beta_beta,
        draws.len()
    );
    for (i, &count) in hist.iter().enumerate() {
        let bar = "#".repeat(count * 200 / draws.len());
        println!("[{:.1}, {:.1}) {count:>6} {bar}", i as f64 / 10.0, (i + 1) as f64 / 10.0);
    }
    Ok(())
}
