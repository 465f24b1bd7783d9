//! Deterministic desk-scale classifier: a single-hidden-layer ReLU MLP with
//! hand-written gradients, trained by SGD with cosine annealing on
//! mollified mini-batches.

use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::labels::{self, SoftLabel};
use crate::likelihood::{self, LogProbVector};
use crate::metrics::PredictionRecord;
use crate::mollifier;
use crate::rng;
use crate::schedules::ScheduleConfig;
use crate::tensor::{write_atomic, Dataset, ImageTensor};

/// Which label degradation and likelihood the trainer optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    /// Cross-entropy against `(1 − γ)·y + γ/C`.
    Smoothed,
    /// Cross-entropy against `(1 − γ)·y`.
    Tempered,
    /// Smoothed cross-entropy plus `ln Z`, a proper likelihood over soft labels.
    Normalized,
}

impl LossKind {
    /// Target label for class `class` under decay `gamma`.
    pub fn label(self, class: usize, num_classes: usize, gamma: f64) -> Result<SoftLabel> {
        let y = labels::one_hot(class, num_classes)?;
        match self {
            LossKind::Smoothed | LossKind::Normalized => labels::smooth_label(&y, gamma),
            LossKind::Tempered => labels::temper_label(&y, gamma),
        }
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smoothed" => Ok(LossKind::Smoothed),
            "tempered" => Ok(LossKind::Tempered),
            "normalized" => Ok(LossKind::Normalized),
            other => Err(Error::invalid(format!("unknown loss {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr0: f64,
    pub hidden_units: usize,
    pub seed: u64,
    pub schedule: ScheduleConfig,
    pub loss: LossKind,
    pub mollify: bool,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Mollified copies of each image per step; their gradients are averaged.
    pub samples_per_image: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 128,
            lr0: 0.01,
            hidden_units: 128,
            seed: 0,
            schedule: ScheduleConfig::default(),
            loss: LossKind::Smoothed,
            mollify: true,
            momentum: 0.0,
            weight_decay: 0.0,
            samples_per_image: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.hidden_units == 0 {
            return Err(Error::invalid("epochs, batch_size and hidden_units must be at least 1"));
        }
        if !(self.lr0 > 0.0) || !self.lr0.is_finite() {
            return Err(Error::invalid("lr0 must be positive"));
        }
        if !(0.0..1.0).contains(&self.momentum) || !(self.weight_decay >= 0.0) {
            return Err(Error::invalid("momentum must be in [0, 1) and weight_decay nonnegative"));
        }
        if self.samples_per_image == 0 {
            return Err(Error::invalid("samples_per_image must be at least 1"));
        }
        self.schedule.validate()
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

/// `lr0·(1 + cos(π·epoch/epochs))/2`.
pub fn cosine_lr(epoch: usize, cfg: &TrainConfig) -> f64 {
    let progress = epoch as f64 / cfg.epochs as f64;
    cfg.lr0 * (1.0 + (std::f64::consts::PI * progress).cos()) / 2.0
}

/// Weights of `logits = W2·relu(W1·x + b1) + b2`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub inputs: usize,
    pub hidden: usize,
    pub classes: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl MlpParams {
    pub fn zeros(inputs: usize, hidden: usize, classes: usize) -> Self {
        Self {
            inputs,
            hidden,
            classes,
            w1: vec![0.0; hidden * inputs],
            b1: vec![0.0; hidden],
            w2: vec![0.0; classes * hidden],
            b2: vec![0.0; classes],
        }
    }

    /// He initialization (normal, variance `2/fan_in`), zero biases.
    pub fn init<R: Rng + ?Sized>(inputs: usize, hidden: usize, classes: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(inputs, hidden, classes);
        let s1 = (2.0 / inputs as f64).sqrt();
        let s2 = (2.0 / hidden as f64).sqrt();
        p.w1.iter_mut().for_each(|w| *w = s1 * rng.sample::<f64, _>(StandardNormal));
        p.w2.iter_mut().for_each(|w| *w = s2 * rng.sample::<f64, _>(StandardNormal));
        p
    }

    pub fn blocks(&self) -> [&[f64]; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }

    pub fn blocks_mut(&mut self) -> [&mut Vec<f64>; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    pub fn is_finite(&self) -> bool {
        self.blocks().iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    fn check_input(&self, img: &ImageTensor) -> Result<()> {
        if img.len() != self.inputs {
            return Err(Error::shape(format!(
                "image has {} values, network expects {}",
                img.len(),
                self.inputs
            )));
        }
        Ok(())
    }

    /// Hidden pre-activations and logits.
    fn activations(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let pre: Vec<f64> = self
            .w1
            .chunks_exact(self.inputs)
            .zip(&self.b1)
            .map(|(row, b)| b + dot(row, x))
            .collect();
        let act: Vec<f64> = pre.iter().map(|&v| v.max(0.0)).collect();
        let logits = self
            .w2
            .chunks_exact(self.hidden)
            .zip(&self.b2)
            .map(|(row, b)| b + dot(row, &act))
            .collect();
        (pre, logits)
    }

    /// Writes the flat little-endian `f32` blob preceded by a length-prefixed
    /// JSON header.
    pub fn to_bytes(&self, header: &ParamsHeader) -> Result<Vec<u8>> {
        let json = serde_json::to_vec(header)?;
        let n: usize = self.blocks().iter().map(|b| b.len()).sum();
        let mut out = Vec::with_capacity(4 + json.len() + 4 * n);
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        for block in self.blocks() {
            for &v in block {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<(Self, ParamsHeader)> {
        let bad = |m: &str| Error::Format(format!("parameter file: {m}"));
        if bytes.len() < 4 {
            return Err(bad("truncated header"));
        }
        let len = u32::from_le_bytes(bytes[..4].try_into().unwrap()) as usize;
        let body = bytes.get(4 + len..).ok_or_else(|| bad("truncated header"))?;
        let header: ParamsHeader = serde_json::from_slice(&bytes[4..4 + len])?;
        let [inputs, hidden, classes] = [header.inputs, header.hidden, header.classes];
        let mut p = Self::zeros(inputs, hidden, classes);
        let total: usize = p.blocks().iter().map(|b| b.len()).sum();
        if body.len() != 4 * total {
            return Err(bad("weight blob does not match layer shapes"));
        }
        let mut values = body
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64);
        for block in p.blocks_mut() {
            block.iter_mut().for_each(|v| *v = values.next().unwrap());
        }
        Ok((p, header))
    }

    pub fn save(&self, path: &Path, header: &ParamsHeader) -> Result<()> {
        write_atomic(path, &self.to_bytes(header)?)
    }

    pub fn load(path: &Path) -> Result<(Self, ParamsHeader)> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// JSON header of a saved parameter file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsHeader {
    pub inputs: usize,
    pub hidden: usize,
    pub classes: usize,
    /// `[rows, cols]` of W1, b1, W2, b2.
    pub layers: Vec<[usize; 2]>,
    pub seed: u64,
    pub config_hash: String,
}

impl ParamsHeader {
    pub fn new(params: &MlpParams, cfg: &TrainConfig) -> Self {
        Self {
            inputs: params.inputs,
            hidden: params.hidden,
            classes: params.classes,
            layers: vec![
                [params.hidden, params.inputs],
                [params.hidden, 1],
                [params.classes, params.hidden],
                [params.classes, 1],
            ],
            seed: cfg.seed,
            config_hash: cfg.hash(),
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Log-softmax output of the network.
pub fn forward(params: &MlpParams, img: &ImageTensor) -> Result<LogProbVector> {
    params.check_input(img)?;
    let (_, logits) = params.activations(img.data());
    Ok(LogProbVector::from_logits(&logits))
}

/// Gradient of [`likelihood::soft_cross_entropy`] for target `y`.
pub fn grad(params: &MlpParams, img: &ImageTensor, y: &SoftLabel) -> Result<MlpParams> {
    let mut g = MlpParams::zeros(params.inputs, params.hidden, params.classes);
    accumulate(params, img, y, false, 1.0, &mut g)?;
    Ok(g)
}

/// Loss and gradient for one example under `kind` (the label must already
/// carry the decay).
pub fn loss_and_grad(params: &MlpParams, img: &ImageTensor, y: &SoftLabel, kind: LossKind) -> Result<(f64, MlpParams)> {
    let mut g = MlpParams::zeros(params.inputs, params.hidden, params.classes);
    let loss = accumulate(params, img, y, kind == LossKind::Normalized, 1.0, &mut g)?;
    Ok((loss, g))
}

/// Adds `scale · ∇loss` into `out` and returns the loss.
fn accumulate(
    params: &MlpParams,
    img: &ImageTensor,
    y: &SoftLabel,
    normalized: bool,
    scale: f64,
    out: &mut MlpParams,
) -> Result<f64> {
    params.check_input(img)?;
    if y.num_classes() != params.classes {
        return Err(Error::shape(format!(
            "label has {} classes, network has {}",
            y.num_classes(),
            params.classes
        )));
    }
    let x = img.data();
    let (pre, logits) = params.activations(x);
    let logp = LogProbVector::from_logits(&logits);
    let probs = logp.probs();
    let mass = y.mass();
    let mut loss = likelihood::soft_cross_entropy(&logp, y)?;
    // dL/dlogits = mass·p − y for the cross-entropy.
    let mut delta: Vec<f64> = probs
        .iter()
        .zip(y.probs())
        .map(|(&p, &t)| mass * p - t)
        .collect();
    if normalized {
        let (log_z, g_logp) = likelihood::log_normalizer_z_with_grad(&logp)?;
        loss += log_z;
        let total: f64 = g_logp.iter().sum();
        for ((d, &g), &p) in delta.iter_mut().zip(&g_logp).zip(&probs) {
            *d += g - p * total;
        }
    }

    let hidden = params.hidden;
    let mut back = vec![0.0; hidden];
    for (k, &d) in delta.iter().enumerate() {
        let d = scale * d;
        out.b2[k] += d;
        let w_row = &params.w2[k * hidden..(k + 1) * hidden];
        let g_row = &mut out.w2[k * hidden..(k + 1) * hidden];
        for j in 0..hidden {
            g_row[j] += d * pre[j].max(0.0);
            back[j] += d * w_row[j];
        }
    }
    let inputs = params.inputs;
    for j in 0..hidden {
        if pre[j] <= 0.0 {
            continue;
        }
        let d = back[j];
        out.b1[j] += d;
        let g_row = &mut out.w1[j * inputs..(j + 1) * inputs];
        for (g, &xi) in g_row.iter_mut().zip(x) {
            *g += d * xi;
        }
    }
    Ok(loss)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub lr: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
}

impl TrainReport {
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for e in &self.epochs {
            w.serialize(e)?;
        }
        w.into_inner().map_err(|e| Error::Format(e.to_string()))
    }
}

/// Trains from He initialization. Stream 0 of `cfg.seed` initializes the
/// weights, stream 1 shuffles and stream 2 drives mollification, so turning
/// mollification on never changes the batch order.
pub fn train(dataset: &Dataset, cfg: &TrainConfig) -> Result<(MlpParams, TrainReport)> {
    cfg.validate()?;
    let (h, w, c) = dataset.image_shape().ok_or(Error::Empty("dataset"))?;
    let classes = dataset.num_classes as usize;
    let mut params = MlpParams::init(h * w * c, cfg.hidden_units, classes, &mut rng::stream(cfg.seed, 0));
    let mut shuffle_rng = rng::stream(cfg.seed, 1);
    let mut mollify_rng = rng::stream(cfg.seed, 2);
    let mut velocity = MlpParams::zeros(params.inputs, params.hidden, params.classes);
    let mut gradient = velocity.clone();
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut report = TrainReport::default();

    for epoch in 0..cfg.epochs {
        let started = Instant::now();
        let lr = cosine_lr(epoch, cfg);
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        let mut seen = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            gradient.blocks_mut().iter_mut().for_each(|b| b.fill(0.0));
            let images: Vec<ImageTensor> = batch.iter().map(|&i| dataset.images[i].clone()).collect();
            let draws = batch.len() * cfg.samples_per_image;
            let scale = 1.0 / draws as f64;
            for _ in 0..cfg.samples_per_image {
                let examples = if cfg.mollify {
                    mollifier::mollify_batch(&images, &cfg.schedule, &mut mollify_rng)?
                } else {
                    images
                        .iter()
                        .map(|img| mollifier::MollifiedExample {
                            image: img.clone(),
                            gamma: 0.0,
                            params: mollifier::MollificationParams::IDENTITY,
                        })
                        .collect()
                };
                for (ex, &i) in examples.iter().zip(batch) {
                    let y = cfg.loss.label(dataset.labels[i] as usize, classes, ex.gamma)?;
                    let loss = accumulate(
                        &params,
                        &ex.image,
                        &y,
                        cfg.loss == LossKind::Normalized,
                        scale,
                        &mut gradient,
                    )?;
                    if !loss.is_finite() {
                        return Err(Error::Numerical(format!(
                            "loss is {loss} at epoch {epoch}, example {i}"
                        )));
                    }
                    epoch_loss += loss;
                    seen += 1;
                }
            }
            sgd_step(&mut params, &mut velocity, &gradient, lr, cfg);
            if !params.is_finite() {
                return Err(Error::Numerical(format!("non-finite parameters after epoch {epoch}")));
            }
        }
        report.epochs.push(EpochStats {
            epoch,
            loss: epoch_loss / seen as f64,
            lr,
            seconds: started.elapsed().as_secs_f64(),
        });
    }
    Ok((params, report))
}

fn sgd_step(params: &mut MlpParams, velocity: &mut MlpParams, grad: &MlpParams, lr: f64, cfg: &TrainConfig) {
    for ((p, v), g) in params
        .blocks_mut()
        .into_iter()
        .zip(velocity.blocks_mut())
        .zip(grad.blocks())
    {
        for ((pi, vi), &gi) in p.iter_mut().zip(v.iter_mut()).zip(g) {
            let step = gi + cfg.weight_decay * *pi;
            *vi = cfg.momentum * *vi + step;
            *pi -= lr * *vi;
        }
    }
}

/// One record per example with the full predictive distribution.
pub fn predict_batch(params: &MlpParams, dataset: &Dataset) -> Result<Vec<PredictionRecord>> {
    predict_images(params, &dataset.images, &dataset.labels, "clean")
}

/// Predictions for arbitrary images with the given labels and tag.
pub fn predict_images(params: &MlpParams, images: &[ImageTensor], labels: &[u32], tag: &str) -> Result<Vec<PredictionRecord>> {
    if images.len() != labels.len() {
        return Err(Error::shape("image and label counts differ"));
    }
    if params.classes == 0 {
        return Err(Error::shape("network has no classes"));
    }
    images
        .iter()
        .zip(labels)
        .map(|(img, &label)| {
            let logp = forward(params, img)?;
            PredictionRecord::new(logp.probs(), label as usize, tag)
        })
        .collect()
}
