//! Procedural image generators used for desk-scale experiments: 1/f
//! ("natural statistics") textures and a seeded texture-orientation
//! classification dataset.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::rng;
use crate::tensor::{idct2d, Dataset, ImageTensor, SpectralGrid};

/// Zero-mean, unit-variance texture whose DCT amplitude falls off as
/// `1/f^exponent` in normalized radial frequency.
pub fn power_law_texture<R: Rng + ?Sized>(
    height: usize,
    width: usize,
    channels: usize,
    exponent: f64,
    rng: &mut R,
) -> ImageTensor {
    let mut coeffs = vec![0.0; height * width * channels];
    for h in 0..height {
        for w in 0..width {
            if h == 0 && w == 0 {
                continue;
            }
            let f = ((h as f64 / height as f64).powi(2) + (w as f64 / width as f64).powi(2)).sqrt();
            let amp = f.powf(-exponent);
            for c in 0..channels {
                let z: f64 = rng.sample(StandardNormal);
                coeffs[(h * width + w) * channels + c] = amp * z;
            }
        }
    }
    let img = idct2d(&SpectralGrid::new(height, width, channels, coeffs).expect("valid shape"));
    let n = img.len() as f64;
    let std = (img.data().iter().map(|v| v * v).sum::<f64>() / n).sqrt().max(1e-12);
    img.map(|v| v / std)
}

/// `n` pixel-space images in `[0, 1]` with a `1/f` spectrum, a random
/// brightness and contrast each.
pub fn natural_images(n: usize, height: usize, width: usize, channels: usize, seed: u64) -> Vec<ImageTensor> {
    (0..n)
        .map(|i| {
            let mut r = rng::stream(seed, i as u64);
            let tex = power_law_texture(height, width, channels, 1.0, &mut r);
            let mean = r.random_range(0.35..0.65);
            let contrast = r.random_range(0.12..0.22);
            tex.map(|v| (mean + contrast * v).clamp(0.0, 1.0))
        })
        .collect()
}

/// Settings of [`texture_dataset`]. Class `c` is a random-phase texture
/// oriented at `c·π/classes`, embedded in a `1/f` background.
#[derive(Debug, Clone, PartialEq)]
pub struct TextureSpec {
    pub classes: usize,
    pub height: usize,
    pub width: usize,
    /// Plane waves summed per texture.
    pub waves: usize,
    /// Standard deviation of each wave's orientation around the class
    /// orientation, radians.
    pub jitter: f64,
    /// Wave frequencies are uniform in this range, cycles per pixel.
    pub frequency: (f64, f64),
    /// Per-image texture amplitude is uniform in this range.
    pub amplitude: (f64, f64),
    /// Amplitude of the `1/f` background.
    pub background: f64,
    /// Amplitude of per-pixel white noise.
    pub white: f64,
}

impl Default for TextureSpec {
    fn default() -> Self {
        Self {
            classes: 4,
            height: 16,
            width: 16,
            waves: 12,
            jitter: 0.2,
            frequency: (0.03, 0.45),
            amplitude: (0.5, 1.0),
            background: 1.5,
            white: 0.05,
        }
    }
}

/// One oriented texture with unit expected second moment.
fn oriented_texture<R: Rng + ?Sized>(spec: &TextureSpec, orientation: f64, rng: &mut R) -> Vec<f64> {
    let waves: Vec<(f64, f64, f64, f64)> = (0..spec.waves)
        .map(|_| {
            let theta = orientation + spec.jitter * rng.sample::<f64, _>(StandardNormal);
            let freq = rng.random_range(spec.frequency.0..=spec.frequency.1);
            let phase = rng.random_range(0.0..TAU);
            let amp: f64 = rng.sample(StandardNormal);
            (TAU * freq * theta.cos(), TAU * freq * theta.sin(), phase, amp)
        })
        .collect();
    let norm = (2.0 / spec.waves.max(1) as f64).sqrt();
    (0..spec.height * spec.width)
        .map(|p| {
            let (y, x) = ((p / spec.width) as f64, (p % spec.width) as f64);
            norm * waves.iter().map(|&(kx, ky, ph, a)| a * (kx * x + ky * y + ph).cos()).sum::<f64>()
        })
        .collect()
}

/// Balanced single-channel texture-orientation dataset in pixel space
/// `[0, 1]`. Image `i` has class `i mod classes` and is generated from its
/// own stream of `seed`, so any prefix of the dataset is reproducible.
pub fn texture_dataset(n: usize, spec: &TextureSpec, seed: u64) -> Dataset {
    let mut images = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % spec.classes;
        let mut r = rng::stream(seed, i as u64);
        let orientation = class as f64 * PI / spec.classes as f64;
        let gain = r.random_range(spec.amplitude.0..=spec.amplitude.1);
        let texture = oriented_texture(spec, orientation, &mut r);
        let background = power_law_texture(spec.height, spec.width, 1, 1.0, &mut r);
        let data = texture
            .iter()
            .zip(background.data())
            .map(|(&t, &b)| {
                let white: f64 = r.sample(StandardNormal);
                let v = gain * t + spec.background * b + spec.white * white;
                (0.5 + 0.1 * v).clamp(0.0, 1.0)
            })
            .collect();
        images.push(ImageTensor::new(spec.height, spec.width, 1, data).expect("valid shape"));
        labels.push(class as u32);
    }
    Dataset::new(images, labels, spec.classes as u32).expect("consistent dataset")
}
