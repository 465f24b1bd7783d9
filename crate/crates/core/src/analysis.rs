//! Corruption suite, PNG information-vs-blur curve and spectral analysis of
//! corruptions.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mollifier::{blur_image, blur_with_tau};
use crate::schedules::{dissipation_time, ScheduleConfig};
use crate::tensor::{dct2d, destandardize, ChannelStats, ImageTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionKind {
    GaussNoise,
    GaussBlur,
    Contrast,
    Pixelate,
}

impl CorruptionKind {
    pub const ALL: [CorruptionKind; 4] = [
        CorruptionKind::GaussNoise,
        CorruptionKind::GaussBlur,
        CorruptionKind::Contrast,
        CorruptionKind::Pixelate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CorruptionKind::GaussNoise => "gauss_noise",
            CorruptionKind::GaussBlur => "gauss_blur",
            CorruptionKind::Contrast => "contrast",
            CorruptionKind::Pixelate => "pixelate",
        }
    }

    /// Tag used in prediction records, e.g. `gauss_blur-3`.
    pub fn tag(self, severity: u8) -> String {
        format!("{}-{severity}", self.name())
    }
}

impl std::str::FromStr for CorruptionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CorruptionKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown corruption {s:?}")))
    }
}

const NOISE_STD: [f64; 5] = [0.1, 0.2, 0.4, 0.6, 0.8];
const BLUR_SIGMA: [f64; 5] = [0.5, 1.0, 2.0, 4.0, 8.0];
const CONTRAST: [f64; 5] = [0.8, 0.6, 0.4, 0.3, 0.2];
const PIXEL_BLOCK: [usize; 5] = [2, 3, 4, 5, 6];

/// Applies one corruption at severity `1..=5`. Only `GaussNoise` draws from
/// `rng`.
pub fn corrupt<R: Rng + ?Sized>(img: &ImageTensor, kind: CorruptionKind, severity: u8, rng: &mut R) -> Result<ImageTensor> {
    if !(1..=5).contains(&severity) {
        return Err(Error::invalid(format!("severity {severity} outside 1..=5")));
    }
    let s = (severity - 1) as usize;
    Ok(match kind {
        CorruptionKind::GaussNoise => {
            let std = NOISE_STD[s];
            img.map(|v| v + std * rng.sample::<f64, _>(StandardNormal))
        }
        CorruptionKind::GaussBlur => {
            let sigma = BLUR_SIGMA[s].min(img.width() as f64);
            blur_with_tau(img, dissipation_time(sigma))
        }
        CorruptionKind::Contrast => contrast(img, CONTRAST[s]),
        CorruptionKind::Pixelate => pixelate(img, PIXEL_BLOCK[s]),
    })
}

/// Scales deviations from each channel's mean by `factor`.
fn contrast(img: &ImageTensor, factor: f64) -> ImageTensor {
    let c = img.channels();
    let pixels = (img.height() * img.width()) as f64;
    let means: Vec<f64> = (0..c)
        .map(|ch| img.channel(ch).iter().sum::<f64>() / pixels)
        .collect();
    let data = img
        .data()
        .iter()
        .enumerate()
        .map(|(i, &v)| means[i % c] + factor * (v - means[i % c]))
        .collect();
    img.with_data(data)
}

/// Block-averages with `block × block` tiles (the last row/column of tiles
/// may be smaller) and upsamples by nearest neighbour.
fn pixelate(img: &ImageTensor, block: usize) -> ImageTensor {
    let (height, width, channels) = img.shape();
    let mut out = img.clone();
    let mut data = out.clone().into_data();
    for by in (0..height).step_by(block) {
        for bx in (0..width).step_by(block) {
            let ys = by..(by + block).min(height);
            let xs = bx..(bx + block).min(width);
            let n = (ys.len() * xs.len()) as f64;
            for c in 0..channels {
                let mut sum = 0.0;
                for y in ys.clone() {
                    for x in xs.clone() {
                        sum += img.get(y, x, c);
                    }
                }
                for y in ys.clone() {
                    for x in xs.clone() {
                        data[img.index(y, x, c)] = sum / n;
                    }
                }
            }
        }
    }
    out = out.with_data(data);
    out
}

/// Corrupted copies of `images` for every kind and severity, tagged like
/// `gauss_noise-1`. Image `i` of a given kind/severity draws from its own
/// stream, so the suite is reproducible from `seed` alone.
pub fn corruption_suite(images: &[ImageTensor], seed: u64) -> Result<Vec<(String, Vec<ImageTensor>)>> {
    let mut out = Vec::with_capacity(20);
    for (k, kind) in CorruptionKind::ALL.into_iter().enumerate() {
        for severity in 1..=5u8 {
            let key = crate::rng::mix(seed, (k * 8 + severity as usize) as u64);
            let corrupted = images
                .iter()
                .enumerate()
                .map(|(i, img)| corrupt(img, kind, severity, &mut crate::rng::stream(key, i as u64)))
                .collect::<Result<Vec<_>>>()?;
            out.push((kind.tag(severity), corrupted));
        }
    }
    Ok(out)
}

/// Quantizes a pixel-space image (`[0, 1]` nominal) to 8 bits per sample.
pub fn quantize(img: &ImageTensor) -> Vec<u8> {
    img.data()
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect()
}

/// Lossless PNG of an 8-bit grayscale or RGB image with the encoder's
/// default adaptive filtering and compression.
pub fn encode_png(samples: &[u8], width: usize, height: usize, channels: usize) -> std::result::Result<Vec<u8>, String> {
    let color = match channels {
        1 => png::ColorType::Grayscale,
        3 => png::ColorType::Rgb,
        c => return Err(format!("cannot encode {c}-channel image as PNG")),
    };
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(color);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(|e| e.to_string())?;
        writer.write_image_data(samples).map_err(|e| e.to_string())?;
        writer.finish().map_err(|e| e.to_string())?;
    }
    Ok(out)
}

/// Encoded PNG size of a standardized image after destandardizing, clamping
/// to `[0, 1]` and 8-bit quantization.
pub fn png_size(img: &ImageTensor, stats: &ChannelStats, index: usize) -> Result<usize> {
    let pixel = destandardize(img, stats)?;
    encode_png(&quantize(&pixel), img.width(), img.height(), img.channels())
        .map(|b| b.len())
        .map_err(|message| Error::Png { index, message })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoCurvePoint {
    pub t: f64,
    pub sigma_b: f64,
    /// Mean over images of `size(x_t)/size(x_0)`.
    pub mean_ratio: f64,
}

/// Information left after blurring, measured as PNG size relative to the
/// `t = 0` blur (which still applies `sigma_min`).
pub fn info_curve(
    dataset: &[ImageTensor],
    stats: &ChannelStats,
    cfg: &ScheduleConfig,
    t_grid: &[f64],
) -> Result<Vec<InfoCurvePoint>> {
    let first = dataset.first().ok_or(Error::Empty("dataset"))?;
    if !t_grid.contains(&0.0) {
        return Err(Error::invalid("t grid must contain 0"));
    }
    let sizes_at = |t: f64| -> Result<Vec<usize>> {
        dataset
            .iter()
            .enumerate()
            .map(|(i, img)| png_size(&blur_image(img, t, cfg)?, stats, i))
            .collect()
    };
    let baseline = sizes_at(0.0)?;
    t_grid
        .iter()
        .map(|&t| {
            let sizes = if t == 0.0 { baseline.clone() } else { sizes_at(t)? };
            let mean_ratio = sizes
                .iter()
                .zip(&baseline)
                .map(|(&s, &b)| s as f64 / b as f64)
                .sum::<f64>()
                / dataset.len() as f64;
            Ok(InfoCurvePoint {
                t,
                sigma_b: cfg.blur_sigma(t, first.width()),
                mean_ratio,
            })
        })
        .collect()
}

pub fn info_curve_csv(points: &[InfoCurvePoint]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in points {
        w.serialize(p)?;
    }
    w.into_inner().map_err(|e| Error::Format(e.to_string()))
}

/// Mean absolute DCT change per frequency, averaged over channels.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDelta {
    pub height: usize,
    pub width: usize,
    pub grid: Vec<f64>,
    pub tag: String,
}

impl SpectralDelta {
    pub fn get(&self, h: usize, w: usize) -> f64 {
        self.grid[h * self.width + w]
    }

    /// Mean of the grid in each of `bands` equal-width bands of normalized
    /// radial frequency `√((w/W)² + (h/H)²)`, spanning `(0, r_max]` where
    /// `r_max` is the highest frequency on the grid. DC is excluded and empty
    /// bands yield `NaN`.
    pub fn annulus_means(&self, bands: usize) -> Vec<f64> {
        let mut sum = vec![0.0; bands];
        let mut count = vec![0usize; bands];
        let radius = |h: usize, w: usize| {
            ((h as f64 / self.height as f64).powi(2) + (w as f64 / self.width as f64).powi(2)).sqrt()
        };
        let r_max = radius(self.height - 1, self.width - 1);
        for h in 0..self.height {
            for w in 0..self.width {
                if h == 0 && w == 0 {
                    continue;
                }
                let r = radius(h, w);
                let b = ((r / r_max * bands as f64).ceil() as usize).clamp(1, bands) - 1;
                sum[b] += self.get(h, w);
                count[b] += 1;
            }
        }
        sum.iter()
            .zip(&count)
            .map(|(&s, &n)| if n == 0 { f64::NAN } else { s / n as f64 })
            .collect()
    }

    /// Grid as CSV rows, one per vertical frequency.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for h in 0..self.height {
            let row: Vec<String> = (0..self.width).map(|w| format!("{:e}", self.get(h, w))).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

/// `(1/N) Σ |DCT(corrupted_i) − DCT(clean_i)|`, channel-averaged.
pub fn spectral_delta(clean: &[ImageTensor], corrupted: &[ImageTensor], tag: &str) -> Result<SpectralDelta> {
    if clean.len() != corrupted.len() {
        return Err(Error::shape(format!(
            "{} clean images but {} corrupted",
            clean.len(),
            corrupted.len()
        )));
    }
    let first = clean.first().ok_or(Error::Empty("image set"))?;
    let (height, width, channels) = first.shape();
    let mut grid = vec![0.0; height * width];
    for (i, (a, b)) in clean.iter().zip(corrupted).enumerate() {
        if !a.same_shape(first) || !b.same_shape(first) {
            return Err(Error::shape(format!("image pair {i} differs in shape")));
        }
        let (ga, gb) = (dct2d(a), dct2d(b));
        for (slot, (pa, pb)) in grid.iter_mut().zip(
            ga.coefficients()
                .chunks_exact(channels)
                .zip(gb.coefficients().chunks_exact(channels)),
        ) {
            *slot += pa.iter().zip(pb).map(|(x, y)| (x - y).abs()).sum::<f64>() / channels as f64;
        }
    }
    let n = clean.len() as f64;
    grid.iter_mut().for_each(|v| *v /= n);
    Ok(SpectralDelta {
        height,
        width,
        grid,
        tag: tag.to_string(),
    })
}

/// Standard deviation over mean of the finite entries.
pub fn coefficient_of_variation(values: &[f64]) -> f64 {
    let v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean
}

/// Least-squares fit of `ln y = a + b·x`; returns `(a, b, R²)` measured on
/// the log scale.
pub fn exp_decay_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::shape("need at least two matching points"));
    }
    if ys.iter().any(|&y| !(y > 0.0)) {
        return Err(Error::invalid("exponential fit needs positive values"));
    }
    let logs: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (a, b, r2) = linear_fit(xs, &logs);
    Ok((a, b, r2))
}

/// Ordinary least squares `y = a + b·x` with its coefficient of
/// determination.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (a, b, r2)
}

/// Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}
