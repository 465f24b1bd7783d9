//! Command implementations behind the `mollify` binary.
//!
//! Every command resolves a [`RunConfig`] (defaults, then `--config`, then
//! flags), echoes it to the output directory and writes a small metadata
//! JSON with the config hash and seed next to its artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{self, CorruptionKind};
use crate::error::{Error, Result};
use crate::metrics::{self, EvalReport};
use crate::mollifier;
use crate::rng;
use crate::schedules::{self, ScheduleConfig};
use crate::synthetic;
use crate::tensor::{
    compute_channel_stats, destandardize, read_manifest, standardize, write_atomic, write_manifest,
    ChannelStats, Dataset, ImageTensor, Manifest,
};
use crate::trainer::{self, LossKind, MlpParams, ParamsHeader, TrainConfig};

#[derive(Debug, Parser)]
#[command(name = "mollify", version, about = "Data mollification: noise/blur with matched label smoothing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a directory of 8-bit images (PGM/PPM or CSV) plus labels.csv into MOL1.
    Ingest(CommandArgs),
    /// Write a MOL1 dataset back out as 8-bit PGM/PPM images plus labels.csv.
    Export(CommandArgs),
    /// Tabulate every schedule on a uniform temperature grid.
    ScheduleDump(CommandArgs),
    /// Mollify a dataset once and export images plus per-image parameters.
    Mollify(CommandArgs),
    /// Train the MLP classifier.
    Train(CommandArgs),
    /// Evaluate a trained model on clean and optionally corrupted data.
    Eval(CommandArgs),
    /// PNG size ratio of blurred images against temperature.
    Infocurve(CommandArgs),
    /// Mean absolute DCT change caused by each corruption.
    Spectra(CommandArgs),
    /// Generate synthetic train/test datasets.
    Synth(CommandArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Export(_) => "export",
            Command::ScheduleDump(_) => "schedule-dump",
            Command::Mollify(_) => "mollify",
            Command::Train(_) => "train",
            Command::Eval(_) => "eval",
            Command::Infocurve(_) => "infocurve",
            Command::Spectra(_) => "spectra",
            Command::Synth(_) => "synth",
        }
    }

    pub fn args(&self) -> &CommandArgs {
        match self {
            Command::Ingest(a)
            | Command::Export(a)
            | Command::ScheduleDump(a)
            | Command::Mollify(a)
            | Command::Train(a)
            | Command::Eval(a)
            | Command::Infocurve(a)
            | Command::Spectra(a)
            | Command::Synth(a) => a,
        }
    }
}

/// Flags shared by all commands; each overrides the matching config field.
#[derive(Debug, Clone, Default, Args)]
pub struct CommandArgs {
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub dataset: Option<PathBuf>,
    #[arg(long, value_name = "BOOL")]
    pub mollify: Option<bool>,
    #[arg(long, value_name = "smoothed|tempered|normalized")]
    pub loss: Option<LossKind>,
    #[arg(long = "k-noise", value_name = "F", allow_negative_numbers = true)]
    pub k_noise: Option<f64>,
    #[arg(long = "k-blur", value_name = "F", allow_negative_numbers = true)]
    pub k_blur: Option<f64>,
    #[arg(long = "beta-alpha", value_name = "F", allow_negative_numbers = true)]
    pub beta_alpha: Option<f64>,
    #[arg(long = "beta-beta", value_name = "F", allow_negative_numbers = true)]
    pub beta_beta: Option<f64>,
    #[arg(long = "mode-probs", value_name = "F,F,F", value_parser = parse_triple)]
    pub mode_probs: Option<[f64; 3]>,
    #[arg(long, value_name = "N")]
    pub epochs: Option<usize>,
    #[arg(long = "batch-size", value_name = "N")]
    pub batch_size: Option<usize>,
    #[arg(long, value_name = "F", allow_negative_numbers = true)]
    pub lr: Option<f64>,
    #[arg(long, value_name = "N")]
    pub bins: Option<usize>,
    #[arg(long, value_name = "BOOL")]
    pub corruptions: Option<bool>,
    #[arg(long = "t-steps", value_name = "N")]
    pub t_steps: Option<usize>,
    /// Source directory for `ingest`.
    #[arg(long, value_name = "DIR")]
    pub src: Option<PathBuf>,
    /// Trained parameter file for `eval`.
    #[arg(long, value_name = "PATH")]
    pub params: Option<PathBuf>,
    /// Image width used for `schedule-dump` when sigma_max is unset.
    #[arg(long, value_name = "N")]
    pub width: Option<usize>,
    /// Number of synthetic images (`synth`, or `infocurve`/`spectra` without a dataset).
    #[arg(long, value_name = "N")]
    pub synthetic: Option<usize>,
}

fn parse_triple(s: &str) -> std::result::Result<[f64; 3], String> {
    let values = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    values
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected 3 comma-separated values, got {}", v.len()))
}

/// The effective configuration of one command invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub dataset: Option<PathBuf>,
    pub src: Option<PathBuf>,
    pub params: Option<PathBuf>,
    pub schedule: ScheduleConfig,
    pub train: TrainConfig,
    pub bins: usize,
    pub corruptions: bool,
    pub t_steps: usize,
    pub width: usize,
    pub synthetic: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("out"),
            dataset: None,
            src: None,
            params: None,
            schedule: ScheduleConfig::default(),
            train: TrainConfig::default(),
            bins: metrics::DEFAULT_BINS,
            corruptions: false,
            t_steps: 11,
            width: 32,
            synthetic: 256,
        }
    }
}

impl RunConfig {
    /// Defaults, overlaid by the `--config` file, overlaid by flags.
    pub fn resolve(args: &CommandArgs) -> Result<Self> {
        let mut cfg = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                serde_json::from_str(&text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?
            }
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($flag:expr => $($field:tt)+) => {
                if let Some(v) = $flag.clone() {
                    cfg.$($field)+ = v;
                }
            };
        }
        set!(args.seed => seed);
        set!(args.out => out);
        set!(args.bins => bins);
        set!(args.corruptions => corruptions);
        set!(args.t_steps => t_steps);
        set!(args.width => width);
        set!(args.synthetic => synthetic);
        set!(args.k_noise => schedule.k_noise);
        set!(args.k_blur => schedule.k_blur);
        set!(args.beta_alpha => schedule.beta_alpha);
        set!(args.beta_beta => schedule.beta_beta);
        set!(args.mollify => train.mollify);
        set!(args.loss => train.loss);
        set!(args.epochs => train.epochs);
        set!(args.batch_size => train.batch_size);
        set!(args.lr => train.lr0);
        set!(args.mode_probs => schedule.mode_probs);
        if args.dataset.is_some() {
            cfg.dataset = args.dataset.clone();
        }
        if args.src.is_some() {
            cfg.src = args.src.clone();
        }
        if args.params.is_some() {
            cfg.params = args.params.clone();
        }
        // The run seed and schedule drive training too.
        cfg.train.seed = cfg.seed;
        cfg.train.schedule = cfg.schedule.clone();
        cfg.schedule.validate()?;
        cfg.train.validate()?;
        for path in [&cfg.dataset, &cfg.src, &cfg.params].into_iter().flatten() {
            if !path.exists() {
                return Err(Error::io(path, std::io::Error::from(std::io::ErrorKind::NotFound)));
            }
        }
        Ok(cfg)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("config serializes")))
    }

    fn dataset_path(&self) -> Result<&Path> {
        self.dataset
            .as_deref()
            .ok_or_else(|| Error::invalid("--dataset is required"))
    }
}

#[derive(Debug, Serialize)]
struct RunMetadata<'a> {
    command: &'a str,
    config_hash: String,
    seed: u64,
    version: &'a str,
    outputs: Vec<String>,
}

/// Parses arguments already split by the shell and runs the command.
pub fn run(cli: Cli) -> Result<()> {
    let cfg = RunConfig::resolve(cli.command.args())?;
    let name = cli.command.name();
    let outputs = match cli.command {
        Command::Ingest(_) => cmd_ingest(&cfg)?,
        Command::Export(_) => cmd_export(&cfg)?,
        Command::ScheduleDump(_) => cmd_schedule_dump(&cfg)?,
        Command::Mollify(_) => cmd_mollify(&cfg)?,
        Command::Train(_) => cmd_train(&cfg)?,
        Command::Eval(_) => cmd_eval(&cfg)?,
        Command::Infocurve(_) => cmd_infocurve(&cfg)?,
        Command::Spectra(_) => cmd_spectra(&cfg)?,
        Command::Synth(_) => cmd_synth(&cfg)?,
    };
    write_json(&cfg.out.join("config.json"), &cfg)?;
    let meta = RunMetadata {
        command: name,
        config_hash: cfg.hash(),
        seed: cfg.seed,
        version: env!("CARGO_PKG_VERSION"),
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
    };
    write_json(&cfg.out.join(format!("{name}.meta.json")), &meta)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn load_standardized(cfg: &RunConfig) -> Result<(Dataset, ChannelStats, PathBuf)> {
    let path = cfg.dataset_path()?.to_path_buf();
    let ds = Dataset::read_mol1(&path)?;
    let channels = ds.image_shape().map_or(1, |s| s.2);
    let stats = match read_manifest(&path) {
        Ok(m) => m.stats()?,
        Err(Error::Io { .. }) => ChannelStats::identity(channels),
        Err(e) => return Err(e),
    };
    Ok((ds, stats, path))
}

// ---------------------------------------------------------------- ingest --

fn parse_netpbm(bytes: &[u8]) -> std::result::Result<(usize, usize, usize, Vec<u8>), String> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => return Err("not a binary PGM/PPM".into()),
    };
    let mut pos = 2;
    let mut fields = Vec::new();
    while fields.len() < 3 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if bytes.get(pos) == Some(&b'#') {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        let text = std::str::from_utf8(&bytes[start..pos]).map_err(|e| e.to_string())?;
        fields.push(text.parse::<usize>().map_err(|_| "bad header field".to_string())?);
    }
    pos += 1;
    let (width, height, maxval) = (fields[0], fields[1], fields[2]);
    if maxval != 255 {
        return Err(format!("maxval {maxval}, only 8-bit images are supported"));
    }
    let body = bytes.get(pos..).unwrap_or_default();
    if body.len() != width * height * channels {
        return Err(format!("expected {} samples, found {}", width * height * channels, body.len()));
    }
    Ok((height, width, channels, body.to_vec()))
}

fn parse_pixel_csv(text: &str) -> std::result::Result<(usize, usize, usize, Vec<u8>), String> {
    let mut values = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|_| format!("bad value {s:?}")));
    let mut next = || values.next().unwrap_or_else(|| Err("missing shape header".into()));
    let (h, w, c) = (next()?, next()?, next()?);
    let samples = values
        .map(|v| v.and_then(|x| u8::try_from(x).map_err(|_| format!("value {x} exceeds 255"))))
        .collect::<std::result::Result<Vec<u8>, String>>()?;
    if samples.len() != h * w * c {
        return Err(format!("expected {} samples, found {}", h * w * c, samples.len()));
    }
    Ok((h, w, c, samples))
}

/// Reads `src/labels.csv` (`file,label`) and every listed image.
pub fn read_image_dir(src: &Path) -> Result<(Vec<ImageTensor>, Vec<u32>)> {
    let labels_path = src.join("labels.csv");
    let mut entries: Vec<(String, Option<u32>)> = Vec::new();
    if labels_path.exists() {
        let mut reader = csv::Reader::from_path(&labels_path)?;
        for row in reader.records() {
            let row = row?;
            let label = row.get(1).and_then(|v| v.trim().parse().ok());
            entries.push((row.get(0).unwrap_or_default().trim().to_string(), label));
        }
    }
    let mut listed: Vec<String> = fs::read_dir(src)
        .map_err(|e| Error::io(src, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| [".pgm", ".ppm", ".csv"].iter().any(|x| n.ends_with(x)) && n != "labels.csv")
        .collect();
    listed.sort();
    if listed.is_empty() && entries.is_empty() {
        return Err(Error::Empty("source directory has no images"));
    }
    let mut offenders = Vec::new();
    for name in &listed {
        if !entries.iter().any(|(f, l)| f == name && l.is_some()) {
            offenders.push(format!("{name}: missing label"));
        }
    }
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for (name, label) in &entries {
        let path = src.join(name);
        let parsed = match fs::read(&path) {
            Err(e) => Err(e.to_string()),
            Ok(bytes) if name.ends_with(".csv") => parse_pixel_csv(&String::from_utf8_lossy(&bytes)),
            Ok(bytes) => parse_netpbm(&bytes),
        };
        match (parsed, label) {
            (Ok((h, w, c, samples)), Some(label)) => {
                let data = samples.iter().map(|&s| s as f64 / 255.0).collect();
                match ImageTensor::new(h, w, c, data) {
                    Ok(img) => {
                        images.push(img);
                        labels.push(*label);
                    }
                    Err(e) => offenders.push(format!("{name}: {e}")),
                }
            }
            (Err(e), _) => offenders.push(format!("{name}: {e}")),
            (Ok(_), None) => offenders.push(format!("{name}: unreadable label")),
        }
    }
    if let Some(first) = images.first() {
        for (img, (name, _)) in images.iter().zip(&entries) {
            if !img.same_shape(first) {
                offenders.push(format!("{name}: shape {:?} differs from {:?}", img.shape(), first.shape()));
            }
        }
    }
    if !offenders.is_empty() {
        offenders.dedup();
        return Err(Error::Format(format!("ingest failed:\n  {}", offenders.join("\n  "))));
    }
    if images.is_empty() {
        return Err(Error::Empty("source directory has no images"));
    }
    Ok((images, labels))
}

/// Standardizes images from `src` and writes `out/dataset.mol1` with its
/// manifest.
pub fn cmd_ingest(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let src = cfg.src.as_deref().ok_or_else(|| Error::invalid("--src is required"))?;
    let (images, labels) = read_image_dir(src)?;
    let stats = compute_channel_stats(&images)?;
    let standardized = images
        .iter()
        .map(|img| standardize(img, &stats))
        .collect::<Result<Vec<_>>>()?;
    let classes = labels.iter().max().map_or(0, |&m| m + 1).max(2);
    let ds = Dataset::new(standardized, labels, classes)?;
    let path = cfg.out.join("dataset.mol1");
    ds.write_mol1(&path)?;
    let manifest = Manifest {
        mean: stats.mean,
        std: stats.std,
        provenance: format!("ingested {} images from {}", ds.len(), src.display()),
    };
    write_manifest(&path, &manifest)?;
    Ok(vec![path.clone(), crate::tensor::manifest_path(&path)])
}

/// Inverse of ingest: 8-bit PGM/PPM (or pixel CSV for other channel counts).
pub fn cmd_export(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let (ds, stats, _) = load_standardized(cfg)?;
    fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    let mut labels = csv::Writer::from_writer(Vec::new());
    labels.write_record(["file", "label"])?;
    let mut outputs = Vec::new();
    for (i, (img, &label)) in ds.images.iter().zip(&ds.labels).enumerate() {
        let samples = analysis::quantize(&destandardize(img, &stats)?);
        let (h, w, c) = img.shape();
        let (name, bytes) = match c {
            1 | 3 => {
                let magic = if c == 1 { "P5" } else { "P6" };
                let ext = if c == 1 { "pgm" } else { "ppm" };
                let mut b = format!("{magic}\n{w} {h}\n255\n").into_bytes();
                b.extend_from_slice(&samples);
                (format!("img_{i:06}.{ext}"), b)
            }
            _ => {
                let mut text = format!("{h},{w},{c}\n");
                let vals: Vec<String> = samples.iter().map(u8::to_string).collect();
                text.push_str(&vals.join(","));
                text.push('\n');
                (format!("img_{i:06}.csv"), text.into_bytes())
            }
        };
        let path = cfg.out.join(&name);
        write_atomic(&path, &bytes)?;
        labels.write_record([name, label.to_string()])?;
        outputs.push(path);
    }
    let labels_path = cfg.out.join("labels.csv");
    write_atomic(
        &labels_path,
        &labels.into_inner().map_err(|e| Error::Format(e.to_string()))?,
    )?;
    outputs.push(labels_path);
    Ok(outputs)
}

// ------------------------------------------------------------- schedules --

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRow {
    pub t: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub snr: f64,
    pub gamma_noise: f64,
    pub sigma_b: f64,
    pub tau: f64,
    pub gamma_blur: f64,
}

/// Every schedule evaluated on `t_steps` uniformly spaced temperatures.
pub fn schedule_table(schedule: &ScheduleConfig, width: usize, t_steps: usize) -> Result<Vec<ScheduleRow>> {
    if t_steps < 2 {
        return Err(Error::invalid("t_steps must be at least 2"));
    }
    (0..t_steps)
        .map(|i| {
            let t = if i + 1 == t_steps { 1.0 } else { i as f64 / (t_steps - 1) as f64 };
            let (alpha, sigma) = schedules::alpha_sigma(t)?;
            let sigma_b = schedule.blur_sigma(t, width);
            Ok(ScheduleRow {
                t,
                alpha,
                sigma,
                snr: schedules::snr(t),
                gamma_noise: schedules::gamma_noise(t, schedule.k_noise),
                sigma_b,
                tau: schedules::dissipation_time(sigma_b),
                gamma_blur: schedules::gamma_blur(t, schedule.k_blur),
            })
        })
        .collect()
}

pub fn cmd_schedule_dump(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let rows = schedule_table(&cfg.schedule, cfg.width, cfg.t_steps)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r)?;
    }
    let path = cfg.out.join("schedule.csv");
    write_atomic(&path, &w.into_inner().map_err(|e| Error::Format(e.to_string()))?)?;
    Ok(vec![path])
}

// --------------------------------------------------------------- mollify --

pub fn cmd_mollify(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let (ds, stats, src) = load_standardized(cfg)?;
    let examples = mollifier::mollify_batch(&ds.images, &cfg.schedule, &mut rng::seeded(cfg.seed))?;
    let mut table = csv::Writer::from_writer(Vec::new());
    table.write_record(["index", "mode", "t", "gamma"])?;
    for (i, ex) in examples.iter().enumerate() {
        table.write_record([
            i.to_string(),
            ex.params.mode.as_str().to_string(),
            ex.params.t.to_string(),
            ex.gamma.to_string(),
        ])?;
    }
    let images = examples.into_iter().map(|e| e.image).collect();
    let out = Dataset::new(images, ds.labels.clone(), ds.num_classes)?;
    let mol1 = cfg.out.join("mollified.mol1");
    out.write_mol1(&mol1)?;
    write_manifest(
        &mol1,
        &Manifest {
            mean: stats.mean,
            std: stats.std,
            provenance: format!("mollified from {} with seed {}", src.display(), cfg.seed),
        },
    )?;
    let csv_path = cfg.out.join("mollified.csv");
    write_atomic(&csv_path, &table.into_inner().map_err(|e| Error::Format(e.to_string()))?)?;
    Ok(vec![mol1, csv_path])
}

// ----------------------------------------------------------- train / eval --

pub fn cmd_train(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let (ds, _, _) = load_standardized(cfg)?;
    let (params, report) = trainer::train(&ds, &cfg.train)?;
    let params_path = cfg.out.join("params.bin");
    params.save(&params_path, &ParamsHeader::new(&params, &cfg.train))?;
    let report_path = cfg.out.join("train_report.csv");
    write_atomic(&report_path, &report.to_csv()?)?;
    Ok(vec![params_path, report_path])
}

/// Clean predictions plus, when `corruptions` is set, the full 4 × 5
/// corruption grid.
pub fn evaluate(params: &MlpParams, ds: &Dataset, corruptions: bool, seed: u64) -> Result<Vec<metrics::PredictionRecord>> {
    let mut records = trainer::predict_batch(params, ds)?;
    if corruptions {
        for (tag, images) in analysis::corruption_suite(&ds.images, seed)? {
            records.extend(trainer::predict_images(params, &images, &ds.labels, &tag)?);
        }
    }
    Ok(records)
}

pub fn cmd_eval(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let (ds, _, _) = load_standardized(cfg)?;
    let params_path = cfg.params.as_deref().ok_or_else(|| Error::invalid("--params is required"))?;
    let (params, _) = MlpParams::load(params_path)?;
    let records = evaluate(&params, &ds, cfg.corruptions, cfg.seed)?;
    let report = EvalReport::new(&records, cfg.bins)?;
    let clean: Vec<_> = records.iter().filter(|r| r.tag == "clean").cloned().collect();
    let bins = metrics::calibration_bins(&clean, cfg.bins)?;

    let paths = [
        ("predictions.csv", metrics::records_to_csv(&records)?),
        ("eval.json", {
            let mut v = serde_json::to_vec_pretty(&report)?;
            v.push(b'\n');
            v
        }),
        ("eval.txt", report.to_table().into_bytes()),
        ("calibration_bins.csv", metrics::bins_to_csv(&bins)?),
    ];
    let mut outputs = Vec::new();
    for (name, bytes) in paths {
        let path = cfg.out.join(name);
        write_atomic(&path, &bytes)?;
        outputs.push(path);
    }
    print!("{}", report.to_table());
    Ok(outputs)
}

// -------------------------------------------------------------- analysis --

fn analysis_images(cfg: &RunConfig) -> Result<(Vec<ImageTensor>, ChannelStats)> {
    if cfg.dataset.is_some() {
        let (ds, stats, _) = load_standardized(cfg)?;
        return Ok((ds.images, stats));
    }
    let raw = synthetic::natural_images(cfg.synthetic, 32, 32, 3, cfg.seed);
    let stats = compute_channel_stats(&raw)?;
    let images = raw.iter().map(|i| standardize(i, &stats)).collect::<Result<_>>()?;
    Ok((images, stats))
}

pub fn cmd_infocurve(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    if cfg.t_steps < 2 {
        return Err(Error::invalid("t_steps must be at least 2"));
    }
    let (images, stats) = analysis_images(cfg)?;
    let grid: Vec<f64> = (0..cfg.t_steps).map(|i| i as f64 / (cfg.t_steps - 1) as f64).collect();
    let curve = analysis::info_curve(&images, &stats, &cfg.schedule, &grid)?;
    let path = cfg.out.join("info_curve.csv");
    write_atomic(&path, &analysis::info_curve_csv(&curve)?)?;
    Ok(vec![path])
}

pub const ANNULI: usize = 8;

pub fn cmd_spectra(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let (images, _) = analysis_images(cfg)?;
    let mut outputs = Vec::new();
    let mut annuli = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["tag".to_string()];
    header.extend((0..ANNULI).map(|b| format!("band{b}")));
    annuli.write_record(&header)?;
    for kind in CorruptionKind::ALL {
        for severity in [1u8, 3, 5] {
            let tag = kind.tag(severity);
            let corrupted = images
                .iter()
                .enumerate()
                .map(|(i, img)| analysis::corrupt(img, kind, severity, &mut rng::stream(cfg.seed, i as u64)))
                .collect::<Result<Vec<_>>>()?;
            let delta = analysis::spectral_delta(&images, &corrupted, &tag)?;
            let path = cfg.out.join(format!("spectra_{tag}.csv"));
            write_atomic(&path, delta.to_csv().as_bytes())?;
            outputs.push(path);
            let mut row = vec![tag];
            row.extend(delta.annulus_means(ANNULI).iter().map(|v| format!("{v:e}")));
            annuli.write_record(&row)?;
        }
    }
    let path = cfg.out.join("spectra_annuli.csv");
    write_atomic(&path, &annuli.into_inner().map_err(|e| Error::Format(e.to_string()))?)?;
    outputs.push(path);
    Ok(outputs)
}

/// Writes `train.mol1` (`--synthetic` images) and `test.mol1` (a quarter as
/// many) of the seeded texture-classification task, both standardized with
/// the training statistics.
pub fn cmd_synth(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let spec = synthetic::TextureSpec::default();
    let train_raw = synthetic::texture_dataset(cfg.synthetic, &spec, rng::mix(cfg.seed, 1));
    let test_raw = synthetic::texture_dataset((cfg.synthetic / 4).max(1), &spec, rng::mix(cfg.seed, 2));
    let stats = compute_channel_stats(&train_raw.images)?;
    let mut outputs = Vec::new();
    for (name, raw) in [("train.mol1", train_raw), ("test.mol1", test_raw)] {
        let images = raw.images.iter().map(|i| standardize(i, &stats)).collect::<Result<_>>()?;
        let ds = Dataset::new(images, raw.labels, raw.num_classes)?;
        let path = cfg.out.join(name);
        ds.write_mol1(&path)?;
        write_manifest(
            &path,
            &Manifest {
                mean: stats.mean.clone(),
                std: stats.std.clone(),
                provenance: format!("synthetic textures, seed {}", cfg.seed),
            },
        )?;
        outputs.push(path);
    }
    Ok(outputs)
}
