//! Compares Monte-Carlo estimators of a log marginal likelihood when the
//! per-augmentation likelihoods are log-normal, so the exact answer is known.
//!
//! ```text
//! cargo run --example mc_estimators -- [mu] [s]
//! ```

use mollify::likelihood::{mc_log_marginal, McMethod, McSample};
use mollify::rng;
use rand::Rng;
use rand_distr::StandardNormal;

fn main() -> mollify::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<f64>().ok());
    let mu = args.next().flatten().unwrap_or(-2.0);
    let s = args.next().flatten().unwrap_or(1.0);
    // E[e^X] for X ~ N(mu, s²).
    let truth = mu + s * s / 2.0;
    let reps = 5_000;
    let mut r = rng::seeded(11);

    println!("log-likelihoods ~ N({mu}, {s}²); exact log marginal {truth:.4}\n");
    println!("{:>4} {:>12} {:>12} {:>12}", "K", "naive", "jensen", "corrected");
    for k in [2usize, 4, 8, 16, 64, 256] {
        let mut bias = [0.0; 3];
        for _ in 0..reps {
            let ll: Vec<f64> = (0..k).map(|_| mu + s * r.sample::<f64, _>(StandardNormal)).collect();
            let sample = McSample::new(ll)?;
            for (b, method) in bias.iter_mut().zip([McMethod::Naive, McMethod::Jensen, McMethod::Corrected]) {
                *b += mc_log_marginal(&sample, method)? - truth;
            }
        }
        let [naive, jensen, corrected] = bias.map(|b| b / reps as f64);
        println!("{k:>4} {naive:>+12.4} {jensen:>+12.4} {corrected:>+12.4}");
    }
    println!("\n(mean bias over {reps} repetitions)");
    Ok(())
}
