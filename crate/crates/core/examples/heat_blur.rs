//! Blurs a synthetic natural image with the DCT heat equation and shows
//! where the energy goes: low-frequency bands survive, high-frequency bands
//! are damped, and two short blurs compose into one long one.

use mollify::mollifier::{blur_image, blur_with_tau};
use mollify::schedules::dissipation_time;
use mollify::synthetic::natural_images;
use mollify::tensor::dct2d;
use mollify::{ImageTensor, ScheduleConfig};

/// Mean squared DCT coefficient in four radial bands.
fn band_energy(img: &ImageTensor) -> [f64; 4] {
    let grid = dct2d(img);
    let (h, w, c) = grid.shape();
    let r_max = (((h - 1) * (h - 1) + (w - 1) * (w - 1)) as f64).sqrt();
    let mut sums = [0.0; 4];
    let mut counts = [0usize; 4];
    for u in 0..h {
        for v in 0..w {
            let band = ((((u * u + v * v) as f64).sqrt() / r_max * 4.0) as usize).min(3);
            for ch in 0..c {
                sums[band] += grid.get(u, v, ch).powi(2);
                counts[band] += 1;
            }
        }
    }
    std::array::from_fn(|b| sums[b] / counts[b] as f64)
}

fn max_abs_diff(a: &ImageTensor, b: &ImageTensor) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn main() -> mollify::Result<()> {
    let img = natural_images(1, 32, 32, 3, 7).remove(0);
    let cfg = ScheduleConfig::default();

    println!("{:>5} {:>7} {:>12} {:>12} {:>12} {:>12}", "t", "σ_B", "band 0", "band 1", "band 2", "band 3");
    for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let blurred = blur_image(&img, t, &cfg)?;
        let e = band_energy(&blurred);
        println!(
            "{t:>5.2} {:>7.3} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
            cfg.blur_sigma(t, img.width()),
            e[0],
            e[1],
            e[2],
            e[3]
        );
    }

    let tau = dissipation_time(2.0);
    let once = blur_with_tau(&img, tau);
    let twice = blur_with_tau(&blur_with_tau(&img, tau / 3.0), 2.0 * tau / 3.0);
    println!("\nsemigroup: max |blur(τ) − blur(2τ/3)∘blur(τ/3)| = {:.2e}", max_abs_diff(&once, &twice));

    let mean = |x: &ImageTensor| x.data().iter().sum::<f64>() / x.len() as f64;
    println!("mean pixel before {:.6}, after heavy blur {:.6}", mean(&img), mean(&blur_image(&img, 1.0, &cfg)?));
    Ok(())
}
