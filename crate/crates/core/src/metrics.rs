//! Classification metrics over prediction records: error, NLL and ECE.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 15;
/// True-class probabilities are floored here before taking the log.
pub const NLL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub probs: Vec<f64>,
    pub true_class: usize,
    pub tag: String,
}

impl PredictionRecord {
    pub fn new(probs: Vec<f64>, true_class: usize, tag: impl Into<String>) -> Result<Self> {
        if true_class >= probs.len() {
            return Err(Error::invalid(format!(
                "true class {true_class} out of range for {} classes",
                probs.len()
            )));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::invalid("probabilities must lie in [0, 1]"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::invalid(format!("probabilities sum to {total}")));
        }
        Ok(Self {
            probs,
            true_class,
            tag: tag.into(),
        })
    }

    /// Predicted class; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    pub fn confidence(&self) -> f64 {
        self.probs[self.argmax()]
    }

    pub fn is_correct(&self) -> bool {
        self.argmax() == self.true_class
    }
}

fn non_empty(records: &[PredictionRecord]) -> Result<()> {
    if records.is_empty() {
        Err(Error::Empty("prediction records"))
    } else {
        Ok(())
    }
}

pub fn error_rate(records: &[PredictionRecord]) -> Result<f64> {
    non_empty(records)?;
    let wrong = records.iter().filter(|r| !r.is_correct()).count();
    Ok(wrong as f64 / records.len() as f64)
}

pub fn avg_nll(records: &[PredictionRecord]) -> Result<f64> {
    non_empty(records)?;
    let total: f64 = records
        .iter()
        .map(|r| -r.probs[r.true_class].max(NLL_FLOOR).ln())
        .sum();
    Ok(total / records.len() as f64)
}

/// One confidence bin of a reliability diagram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub accuracy: f64,
    pub confidence: f64,
}

/// Index of the right-closed bin `(b/n, (b+1)/n]` holding `conf`; zero goes
/// to the first bin.
fn bin_index(conf: f64, bins: usize) -> usize {
    let edge = |b: usize| b as f64 / bins as f64;
    let mut idx = ((conf * bins as f64).ceil() as usize).clamp(1, bins) - 1;
    // Snap to the edges exactly as they are compared.
    while idx + 1 < bins && conf > edge(idx + 1) {
        idx += 1;
    }
    while idx > 0 && conf <= edge(idx) {
        idx -= 1;
    }
    idx
}

pub fn calibration_bins(records: &[PredictionRecord], num_bins: usize) -> Result<Vec<CalibrationBin>> {
    non_empty(records)?;
    if num_bins == 0 {
        return Err(Error::invalid("need at least one bin"));
    }
    let mut count = vec![0usize; num_bins];
    let mut correct = vec![0usize; num_bins];
    let mut conf_sum = vec![0.0; num_bins];
    for r in records {
        let conf = r.confidence();
        let b = bin_index(conf, num_bins);
        count[b] += 1;
        conf_sum[b] += conf;
        correct[b] += r.is_correct() as usize;
    }
    Ok((0..num_bins)
        .map(|b| {
            let n = count[b];
            let (accuracy, confidence) = if n == 0 {
                (0.0, 0.0)
            } else {
                (correct[b] as f64 / n as f64, conf_sum[b] / n as f64)
            };
            CalibrationBin {
                lower: b as f64 / num_bins as f64,
                upper: (b + 1) as f64 / num_bins as f64,
                count: n,
                accuracy,
                confidence,
            }
        })
        .collect())
}

/// `Σ_b (n_b/N)·|acc_b − conf_b|` over equal-width confidence bins.
pub fn ece(records: &[PredictionRecord], num_bins: usize) -> Result<f64> {
    let bins = calibration_bins(records, num_bins)?;
    let n = records.len() as f64;
    Ok(bins
        .iter()
        .filter(|b| b.count > 0)
        .map(|b| b.count as f64 / n * (b.accuracy - b.confidence).abs())
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub error: f64,
    pub nll: f64,
    pub ece: f64,
    pub count: usize,
}

impl Summary {
    pub fn of(records: &[PredictionRecord], num_bins: usize) -> Result<Self> {
        Ok(Self {
            error: error_rate(records)?,
            nll: avg_nll(records)?,
            ece: ece(records, num_bins)?,
            count: records.len(),
        })
    }
}

/// Metrics over all records plus a breakdown per tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(flatten)]
    pub overall: Summary,
    pub per_tag: BTreeMap<String, Summary>,
}

impl EvalReport {
    pub fn new(records: &[PredictionRecord], num_bins: usize) -> Result<Self> {
        let overall = Summary::of(records, num_bins)?;
        let mut groups: BTreeMap<&str, Vec<PredictionRecord>> = BTreeMap::new();
        for r in records {
            groups.entry(r.tag.as_str()).or_default().push(r.clone());
        }
        let per_tag = groups
            .into_iter()
            .map(|(tag, recs)| Ok((tag.to_string(), Summary::of(&recs, num_bins)?)))
            .collect::<Result<_>>()?;
        Ok(Self { overall, per_tag })
    }

    pub fn to_table(&self) -> String {
        let width = self
            .per_tag
            .keys()
            .map(String::len)
            .max()
            .unwrap_or(0)
            .max("overall".len());
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:>8}  {:>8}  {:>8}  {:>7}", "tag", "error", "nll", "ece", "count");
        let mut row = |name: &str, s: &Summary| {
            let _ = writeln!(
                out,
                "{name:<width$}  {:>8.4}  {:>8.4}  {:>8.4}  {:>7}",
                s.error, s.nll, s.ece, s.count
            );
        };
        for (tag, s) in &self.per_tag {
            row(tag, s);
        }
        row("overall", &self.overall);
        out
    }
}

/// CSV with header `index,tag,true_class,p0,...,p{C-1}`.
pub fn records_to_csv(records: &[PredictionRecord]) -> Result<Vec<u8>> {
    let classes = records.first().map_or(0, |r| r.probs.len());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["index".to_string(), "tag".into(), "true_class".into()];
    header.extend((0..classes).map(|c| format!("p{c}")));
    w.write_record(&header)?;
    for (i, r) in records.iter().enumerate() {
        if r.probs.len() != classes {
            return Err(Error::shape(format!("record {i} has {} classes", r.probs.len())));
        }
        let mut row = vec![i.to_string(), r.tag.clone(), r.true_class.to_string()];
        row.extend(r.probs.iter().map(|p| format!("{p:e}")));
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| Error::Format(e.to_string()))
}

pub fn records_from_csv(bytes: &[u8]) -> Result<Vec<PredictionRecord>> {
    let mut reader = csv::Reader::from_reader(bytes);
    let mut out = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row?;
        let bad = |m: &str| Error::Format(format!("record {line}: {m}"));
        if row.len() < 4 {
            return Err(bad("too few columns"));
        }
        let true_class = row[2].parse().map_err(|_| bad("bad true_class"))?;
        let probs = row
            .iter()
            .skip(3)
            .map(|v| v.parse::<f64>().map_err(|_| bad("bad probability")))
            .collect::<Result<Vec<_>>>()?;
        out.push(PredictionRecord::new(probs, true_class, &row[1])?);
    }
    Ok(out)
}

pub fn bins_to_csv(bins: &[CalibrationBin]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for b in bins {
        w.serialize(b)?;
    }
    w.into_inner().map_err(|e| Error::Format(e.to_string()))
}
