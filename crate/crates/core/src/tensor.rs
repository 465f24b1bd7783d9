//! Image tensors, per-channel standardization, the orthonormal 2-D DCT and
//! the `MOL1` dataset container.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floor applied to per-channel standard deviations.
pub const STD_FLOOR: f64 = 1e-8;

/// An `height × width × channels` image stored row-major, channel-minor.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageTensor {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::shape(format!(
                "image dimensions must be positive, got {height}x{width}x{channels}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(Error::shape(format!(
                "expected {} values for {height}x{width}x{channels}, got {}",
                height * width * channels,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite pixel at offset {i}")));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            channels,
            data: vec![0.0; height * width * channels],
        }
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(height * width * channels);
        for h in 0..height {
            for w in 0..width {
                for c in 0..channels {
                    data.push(f(h, w, c));
                }
            }
        }
        Self {
            height,
            width,
            channels,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn index(&self, h: usize, w: usize, c: usize) -> usize {
        (h * self.width + w) * self.channels + c
    }

    #[inline]
    pub fn get(&self, h: usize, w: usize, c: usize) -> f64 {
        self.data[self.index(h, w, c)]
    }

    /// Applies `f` element-wise, keeping the shape.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        Self {
            data: self.data.iter().map(|&v| f(v)).collect(),
            ..*self
        }
    }

    pub(crate) fn with_data(&self, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        Self { data, ..*self }
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.shape() == other.shape()
    }

    /// Values of one channel in row-major order.
    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.data
            .iter()
            .skip(c)
            .step_by(self.channels)
            .copied()
            .collect()
    }

    fn set_channel(&mut self, c: usize, values: &[f64]) {
        let channels = self.channels;
        for (slot, &v) in self.data.iter_mut().skip(c).step_by(channels).zip(values) {
            *slot = v;
        }
    }
}

/// Per-channel mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ChannelStats {
    pub fn new(mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        if mean.len() != std.len() || mean.is_empty() {
            return Err(Error::shape("mean and std must have the same nonzero length"));
        }
        if std.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::invalid("channel std must be strictly positive"));
        }
        Ok(Self { mean, std })
    }

    /// Mean 0 and std 1 on every channel.
    pub fn identity(channels: usize) -> Self {
        Self {
            mean: vec![0.0; channels],
            std: vec![1.0; channels],
        }
    }

    pub fn channels(&self) -> usize {
        self.mean.len()
    }

    fn check(&self, img: &ImageTensor) -> Result<()> {
        if img.channels != self.channels() {
            return Err(Error::shape(format!(
                "image has {} channels, stats have {}",
                img.channels,
                self.channels()
            )));
        }
        Ok(())
    }
}

/// Per-channel mean and population std over every pixel of every image.
pub fn compute_channel_stats(dataset: &[ImageTensor]) -> Result<ChannelStats> {
    let first = dataset.first().ok_or(Error::Empty("dataset"))?;
    let channels = first.channels;
    // Welford accumulation per channel.
    let mut count = 0u64;
    let mut mean = vec![0.0; channels];
    let mut m2 = vec![0.0; channels];
    for (i, img) in dataset.iter().enumerate() {
        if img.channels != channels {
            return Err(Error::shape(format!(
                "image {i} has {} channels, expected {channels}",
                img.channels
            )));
        }
        for px in img.data.chunks_exact(channels) {
            count += 1;
            let n = count as f64;
            for c in 0..channels {
                let delta = px[c] - mean[c];
                mean[c] += delta / n;
                m2[c] += delta * (px[c] - mean[c]);
            }
        }
    }
    let std = m2
        .iter()
        .map(|&s| (s / count as f64).sqrt().max(STD_FLOOR))
        .collect();
    Ok(ChannelStats { mean, std })
}

/// `(x - mean) / std` per channel.
pub fn standardize(img: &ImageTensor, stats: &ChannelStats) -> Result<ImageTensor> {
    stats.check(img)?;
    let c = img.channels;
    let data = img
        .data
        .iter()
        .enumerate()
        .map(|(i, &v)| (v - stats.mean[i % c]) / stats.std[i % c])
        .collect();
    Ok(img.with_data(data))
}

/// `x * std + mean` per channel.
pub fn destandardize(img: &ImageTensor, stats: &ChannelStats) -> Result<ImageTensor> {
    stats.check(img)?;
    let c = img.channels;
    let data = img
        .data
        .iter()
        .enumerate()
        .map(|(i, &v)| v * stats.std[i % c] + stats.mean[i % c])
        .collect();
    Ok(img.with_data(data))
}

/// DCT coefficients laid out like the image they came from: index
/// `(h, w, c)` holds the coefficient of vertical frequency `h` and
/// horizontal frequency `w` on channel `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGrid {
    height: usize,
    width: usize,
    channels: usize,
    coefficients: Vec<f64>,
}

impl SpectralGrid {
    pub fn new(height: usize, width: usize, channels: usize, coefficients: Vec<f64>) -> Result<Self> {
        // Reuse the image validation for the shape rules.
        let img = ImageTensor::new(height, width, channels, coefficients)?;
        Ok(Self::from_image_layout(img))
    }

    fn from_image_layout(img: ImageTensor) -> Self {
        Self {
            height: img.height,
            width: img.width,
            channels: img.channels,
            coefficients: img.data,
        }
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.coefficients
    }

    #[inline]
    pub fn get(&self, h: usize, w: usize, c: usize) -> f64 {
        self.coefficients[(h * self.width + w) * self.channels + c]
    }
}

/// Orthonormal DCT-II basis: row `k` is frequency `k` sampled at `n`.
fn dct_matrix(n: usize) -> Vec<f64> {
    let scale0 = (1.0 / n as f64).sqrt();
    let scale = (2.0 / n as f64).sqrt();
    let mut m = vec![0.0; n * n];
    for k in 0..n {
        let s = if k == 0 { scale0 } else { scale };
        for i in 0..n {
            m[k * n + i] =
                s * (std::f64::consts::PI * (2 * i + 1) as f64 * k as f64 / (2 * n) as f64).cos();
        }
    }
    m
}

/// Applies `basis` (or its transpose) along both axes of an `h × w` plane.
fn transform_plane(plane: &[f64], h: usize, w: usize, bh: &[f64], bw: &[f64], inverse: bool) -> Vec<f64> {
    // Along height: tmp[k, x] = sum_n B[k, n] plane[n, x]
    let mut tmp = vec![0.0; h * w];
    for k in 0..h {
        let row = &mut tmp[k * w..(k + 1) * w];
        for n in 0..h {
            let b = if inverse { bh[n * h + k] } else { bh[k * h + n] };
            if b == 0.0 {
                continue;
            }
            for (r, &p) in row.iter_mut().zip(&plane[n * w..(n + 1) * w]) {
                *r += b * p;
            }
        }
    }
    // Along width.
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        let src = &tmp[y * w..(y + 1) * w];
        let dst = &mut out[y * w..(y + 1) * w];
        for (k, d) in dst.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (n, &s) in src.iter().enumerate() {
                let b = if inverse { bw[n * w + k] } else { bw[k * w + n] };
                acc += b * s;
            }
            *d = acc;
        }
    }
    out
}

fn transform(img: &ImageTensor, inverse: bool) -> ImageTensor {
    let (h, w, channels) = img.shape();
    let bh = dct_matrix(h);
    let bw = if w == h { bh.clone() } else { dct_matrix(w) };
    let mut out = ImageTensor::zeros(h, w, channels);
    for c in 0..channels {
        let plane = img.channel(c);
        let t = transform_plane(&plane, h, w, &bh, &bw, inverse);
        out.set_channel(c, &t);
    }
    out
}

/// Separable orthonormal type-II DCT over height then width, per channel.
pub fn dct2d(img: &ImageTensor) -> SpectralGrid {
    SpectralGrid::from_image_layout(transform(img, false))
}

/// Inverse of [`dct2d`] (orthonormal type-III DCT).
pub fn idct2d(grid: &SpectralGrid) -> ImageTensor {
    let as_img = ImageTensor {
        height: grid.height,
        width: grid.width,
        channels: grid.channels,
        data: grid.coefficients.clone(),
    };
    transform(&as_img, true)
}

/// A labelled image collection, the in-memory form of a `MOL1` file.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub images: Vec<ImageTensor>,
    pub labels: Vec<u32>,
    pub num_classes: u32,
}

/// Sidecar JSON stored next to a `MOL1` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub provenance: String,
}

impl Manifest {
    pub fn stats(&self) -> Result<ChannelStats> {
        ChannelStats::new(self.mean.clone(), self.std.clone())
    }
}

const MOL1_MAGIC: &[u8; 4] = b"MOL1";

impl Dataset {
    pub fn new(images: Vec<ImageTensor>, labels: Vec<u32>, num_classes: u32) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::shape(format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            )));
        }
        if let Some(first) = images.first() {
            if let Some(i) = images.iter().position(|im| !im.same_shape(first)) {
                return Err(Error::shape(format!("image {i} differs in shape from image 0")));
            }
        }
        if let Some(i) = labels.iter().position(|&l| l >= num_classes) {
            return Err(Error::Format(format!(
                "label {} at index {i} out of range for {num_classes} classes",
                labels[i]
            )));
        }
        Ok(Self {
            images,
            labels,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// `(height, width, channels)` of the images, if any.
    pub fn image_shape(&self) -> Option<(usize, usize, usize)> {
        self.images.first().map(ImageTensor::shape)
    }

    /// Serializes to the `MOL1` byte layout.
    pub fn to_mol1_bytes(&self) -> Vec<u8> {
        let (h, w, c) = self.image_shape().unwrap_or((0, 0, 0));
        let n = self.images.len();
        let mut out = Vec::with_capacity(24 + n * (h * w * c * 4 + 4));
        out.extend_from_slice(MOL1_MAGIC);
        for v in [n, h, w, c, self.num_classes as usize] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        for img in &self.images {
            for &v in img.data() {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        for &l in &self.labels {
            out.extend_from_slice(&l.to_le_bytes());
        }
        out
    }

    /// Parses the `MOL1` byte layout.
    pub fn from_mol1_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 24 || &bytes[..4] != MOL1_MAGIC {
            return Err(Error::Format("missing MOL1 header".into()));
        }
        let field = |i: usize| {
            let o = 4 + 4 * i;
            u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize
        };
        let (n, h, w, c, classes) = (field(0), field(1), field(2), field(3), field(4));
        let per_image = h
            .checked_mul(w)
            .and_then(|v| v.checked_mul(c))
            .ok_or_else(|| Error::Format("image dimensions overflow".into()))?;
        let expected = per_image
            .checked_mul(n)
            .and_then(|v| v.checked_add(n))
            .and_then(|v| v.checked_mul(4))
            .and_then(|v| v.checked_add(24))
            .ok_or_else(|| Error::Format("dataset size overflows".into()))?;
        if bytes.len() != expected {
            return Err(Error::Format(format!(
                "MOL1 body is {} bytes, header implies {expected}",
                bytes.len()
            )));
        }
        let floats = &bytes[24..24 + n * per_image * 4];
        let mut images = Vec::with_capacity(n);
        for chunk in floats.chunks_exact((per_image * 4).max(1)).take(n) {
            let data = chunk
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
                .collect();
            images.push(ImageTensor::new(h, w, c, data)?);
        }
        let labels = bytes[24 + n * per_image * 4..]
            .chunks_exact(4)
            .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        Dataset::new(images, labels, classes as u32)
    }

    pub fn read_mol1(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_mol1_bytes(&bytes)
    }

    pub fn write_mol1(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), &self.to_mol1_bytes())
    }
}

/// Path of the JSON manifest that accompanies a `MOL1` file.
pub fn manifest_path(mol1: &Path) -> std::path::PathBuf {
    let mut name = mol1.file_name().unwrap_or_default().to_os_string();
    name.push(".json");
    mol1.with_file_name(name)
}

pub fn read_manifest(mol1: &Path) -> Result<Manifest> {
    let path = manifest_path(mol1);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_manifest(mol1: &Path, manifest: &Manifest) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    write_atomic(&manifest_path(mol1), text.as_bytes())
}

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let mut file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    file.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    file.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(file);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
