//! Input mollification: variance-preserving noising, DCT heat blurring and
//! per-image mollification of a mini-batch.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::rng;
use crate::schedules::{self, ScheduleConfig};
use crate::tensor::{dct2d, idct2d, ImageTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    None,
    Noise,
    Blur,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::None => "none",
            Mode::Noise => "noise",
            Mode::Blur => "blur",
        }
    }
}

/// The auxiliary transformation variables drawn for one image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MollificationParams {
    pub mode: Mode,
    /// Temperature; always 0 for [`Mode::None`].
    pub t: f64,
    /// Seed of the Gaussian draw; only meaningful for [`Mode::Noise`].
    pub noise_seed: u64,
}

impl MollificationParams {
    pub const IDENTITY: Self = Self {
        mode: Mode::None,
        t: 0.0,
        noise_seed: 0,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct MollifiedExample {
    pub image: ImageTensor,
    /// Label decay matched to `params`.
    pub gamma: f64,
    pub params: MollificationParams,
}

/// `α_t·x + σ_t·ε` with `ε` i.i.d. standard normal drawn from `rng`.
pub fn noise_image<R: Rng + ?Sized>(img: &ImageTensor, t: f64, rng: &mut R) -> Result<ImageTensor> {
    let (alpha, sigma) = schedules::alpha_sigma(t)?;
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    Ok(img.map(|v| {
        let eps: f64 = rng.sample(StandardNormal);
        alpha * v + sigma * eps
    }))
}

/// Runs the heat equation for dissipation time `tau`: every DCT coefficient
/// at vertical frequency `h` and horizontal frequency `w` is multiplied by
/// `exp(−τ·π²(w²/W² + h²/H²))`. The DC term is left untouched.
pub fn blur_with_tau(img: &ImageTensor, tau: f64) -> ImageTensor {
    if tau == 0.0 {
        return img.clone();
    }
    let (height, width, channels) = img.shape();
    let mut grid = dct2d(img);
    let fy: Vec<f64> = (0..height)
        .map(|h| (h as f64 / height as f64).powi(2))
        .collect();
    let fx: Vec<f64> = (0..width)
        .map(|w| (w as f64 / width as f64).powi(2))
        .collect();
    let coeffs = grid.coefficients_mut();
    for (h, &ly) in fy.iter().enumerate() {
        for (w, &lx) in fx.iter().enumerate() {
            if h == 0 && w == 0 {
                continue;
            }
            let attenuation = (-tau * PI * PI * (lx + ly)).exp();
            let base = (h * width + w) * channels;
            for c in &mut coeffs[base..base + channels] {
                *c *= attenuation;
            }
        }
    }
    idct2d(&grid)
}

/// Blur at temperature `t`: heat dissipation for `σ_B(t)²/2`.
pub fn blur_image(img: &ImageTensor, t: f64, cfg: &ScheduleConfig) -> Result<ImageTensor> {
    schedules::alpha_sigma(t)?;
    let sigma_b = cfg.blur_sigma(t, img.width());
    Ok(blur_with_tau(img, schedules::dissipation_time(sigma_b)))
}

/// Label decay belonging to `(mode, t)` under `cfg`.
pub fn gamma_for(mode: Mode, t: f64, cfg: &ScheduleConfig) -> f64 {
    match mode {
        Mode::None => 0.0,
        Mode::Noise => schedules::gamma_noise(t, cfg.k_noise),
        Mode::Blur => schedules::gamma_blur(t, cfg.k_blur),
    }
}

/// Applies previously drawn parameters to an image.
pub fn apply(img: &ImageTensor, params: &MollificationParams, cfg: &ScheduleConfig) -> Result<MollifiedExample> {
    let image = match params.mode {
        Mode::None => img.clone(),
        Mode::Noise => noise_image(img, params.t, &mut rng::seeded(params.noise_seed))?,
        Mode::Blur => blur_image(img, params.t, cfg)?,
    };
    Ok(MollifiedExample {
        image,
        gamma: gamma_for(params.mode, params.t, cfg),
        params: *params,
    })
}

/// Draws mode and temperature for item `index` of a batch keyed by `key`.
pub fn draw_params(key: u64, index: u64, cfg: &ScheduleConfig) -> MollificationParams {
    let mut r = rng::stream(key, index);
    let u: f64 = r.random();
    let [p_none, p_noise, _] = cfg.mode_probs;
    let mode = if u < p_none {
        Mode::None
    } else if u < p_none + p_noise {
        Mode::Noise
    } else {
        Mode::Blur
    };
    if mode == Mode::None {
        return MollificationParams::IDENTITY;
    }
    MollificationParams {
        mode,
        t: schedules::sample_temperature(&mut r, cfg),
        noise_seed: rng::mix(key, index),
    }
}

/// Mollifies each image independently: picks none/noise/blur from
/// `mode_probs`, draws `t` from the Beta prior and attaches the matching
/// label decay.
///
/// One key is drawn from `rng` per batch; every image then uses its own
/// stream addressed by `(key, index)`, so results do not depend on the order
/// images are processed in.
pub fn mollify_batch<R: Rng + ?Sized>(
    imgs: &[ImageTensor],
    cfg: &ScheduleConfig,
    rng: &mut R,
) -> Result<Vec<MollifiedExample>> {
    cfg.validate()?;
    if imgs.is_empty() {
        return Ok(Vec::new());
    }
    let key = rng::next_key(rng);
    imgs.iter()
        .enumerate()
        .map(|(i, img)| apply(img, &draw_params(key, i as u64, cfg), cfg))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::SpectralGrid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_image(seed: u64, h: usize, w: usize, c: usize) -> ImageTensor {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        ImageTensor::from_fn(h, w, c, |_, _, _| r.sample(StandardNormal))
    }

    fn max_abs_diff(a: &ImageTensor, b: &ImageTensor) -> f64 {
        a.data()
            .iter()
            .zip(b.data())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn noise_t0_is_identity() {
        let img = random_image(1, 8, 8, 3);
        let out = noise_image(&img, 0.0, &mut rng::seeded(4)).unwrap();
        assert_eq!(out, img);
        assert!(noise_image(&img, 1.5, &mut rng::seeded(4)).is_err());
    }

    #[test]
    fn noise_t1_decorrelates() {
        let img = random_image(2, 64, 64, 1);
        let out = noise_image(&img, 1.0, &mut rng::seeded(5)).unwrap();
        let (x, y) = (img.data(), out.data());
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
        let r = cov / (vx * vy).sqrt();
        assert!(r.abs() < 0.05, "correlation {r}");
    }

    #[test]
    fn noise_preserves_second_moment() {
        let img = random_image(3, 256, 256, 1);
        let out = noise_image(&img, 0.5, &mut rng::seeded(6)).unwrap();
        let m2 = out.data().iter().map(|v| v * v).sum::<f64>() / out.len() as f64;
        assert!((m2 - 1.0).abs() < 0.05, "second moment {m2}");
    }

    #[test]
    fn blur_zero_tau_identity() {
        let img = random_image(4, 16, 16, 3);
        assert!(max_abs_diff(&blur_with_tau(&img, 0.0), &img) < 1e-6);
    }

    #[test]
    fn blur_semigroup() {
        let img = random_image(5, 16, 16, 3);
        let two_step = blur_with_tau(&blur_with_tau(&img, 0.7), 2.3);
        let one_step = blur_with_tau(&img, 3.0);
        assert!(max_abs_diff(&two_step, &one_step) < 1e-5);
    }

    #[test]
    fn blur_keeps_dc_and_kills_high_frequencies() {
        let img = random_image(6, 16, 16, 3);
        let cfg = ScheduleConfig::default();
        let out = blur_image(&img, 1.0, &cfg).unwrap();
        let (g_in, g_out) = (dct2d(&img), dct2d(&out));
        let non_dc = |g: &SpectralGrid| -> f64 {
            let mut e = 0.0;
            for h in 0..16 {
                for w in 0..16 {
                    if h + w > 0 {
                        for c in 0..3 {
                            e += g.get(h, w, c).powi(2);
                        }
                    }
                }
            }
            e
        };
        for c in 0..3 {
            assert!((g_in.get(0, 0, c) - g_out.get(0, 0, c)).abs() < 1e-9);
        }
        assert!(non_dc(&g_out) * 100.0 <= non_dc(&g_in));
        assert!(blur_image(&img, -0.1, &cfg).is_err());
    }

    #[test]
    fn blur_is_linear_and_contractive() {
        let x = random_image(7, 8, 12, 2);
        let y = random_image(8, 8, 12, 2);
        let (a, b) = (0.7, -1.9);
        let combo = x.with_data(x.data().iter().zip(y.data()).map(|(p, q)| a * p + b * q).collect());
        let lhs = blur_with_tau(&combo, 1.7);
        let (bx, by) = (blur_with_tau(&x, 1.7), blur_with_tau(&y, 1.7));
        let rhs = bx.with_data(bx.data().iter().zip(by.data()).map(|(p, q)| a * p + b * q).collect());
        assert!(max_abs_diff(&lhs, &rhs) < 1e-6);

        let (gx, gb) = (dct2d(&x), dct2d(&bx));
        for (c_in, c_out) in gx.coefficients().iter().zip(gb.coefficients()) {
            assert!(c_out.abs() <= c_in.abs() + 1e-12);
        }
    }

    #[test]
    fn forced_none_is_identity() {
        let cfg = ScheduleConfig {
            mode_probs: [1.0, 0.0, 0.0],
            ..Default::default()
        };
        let imgs: Vec<_> = (0..20).map(|i| random_image(i, 4, 4, 1)).collect();
        let out = mollify_batch(&imgs, &cfg, &mut rng::seeded(1)).unwrap();
        for (o, i) in out.iter().zip(&imgs) {
            assert_eq!(&o.image, i);
            assert_eq!(o.gamma, 0.0);
            assert_eq!(o.params.mode, Mode::None);
        }
        assert!(mollify_batch(&[], &cfg, &mut rng::seeded(1)).unwrap().is_empty());
    }

    #[test]
    fn mode_frequencies() {
        let cfg = ScheduleConfig::default();
        let key = 1234;
        let n = 30_000;
        let mut counts = [0usize; 3];
        for i in 0..n {
            match draw_params(key, i, &cfg).mode {
                Mode::None => counts[0] += 1,
                Mode::Noise => counts[1] += 1,
                Mode::Blur => counts[2] += 1,
            }
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 1.0 / 3.0).abs() < 0.01, "{counts:?}");
        }
    }

    #[test]
    fn batch_replay_and_gamma_consistency() {
        let cfg = ScheduleConfig::default();
        let imgs: Vec<_> = (0..30).map(|i| random_image(i, 8, 8, 1)).collect();
        let a = mollify_batch(&imgs, &cfg, &mut rng::seeded(77)).unwrap();
        let b = mollify_batch(&imgs, &cfg, &mut rng::seeded(77)).unwrap();
        assert_eq!(a, b);
        for ex in &a {
            assert_eq!(ex.gamma, gamma_for(ex.params.mode, ex.params.t, &cfg));
            if ex.params.mode == Mode::None {
                assert_eq!(ex.gamma, 0.0);
            }
        }
        // Re-applying recorded parameters reproduces each image exactly.
        for (ex, img) in a.iter().zip(&imgs) {
            assert_eq!(apply(img, &ex.params, &cfg).unwrap(), *ex);
        }
    }
}
