//! One-hot, tempered and smoothed label vectors, and the Dirichlet density
//! that the soft-label cross-entropy corresponds to.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelKind {
    OneHot,
    Tempered,
    Smoothed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoftLabel {
    probs: Vec<f64>,
    kind: LabelKind,
    class_index: usize,
}

impl SoftLabel {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn kind(&self) -> LabelKind {
        self.kind
    }

    /// The class the label was built from.
    pub fn class_index(&self) -> usize {
        self.class_index
    }

    pub fn num_classes(&self) -> usize {
        self.probs.len()
    }

    /// Total mass, `1` for one-hot and smoothed labels and `1 − γ` for
    /// tempered ones.
    pub fn mass(&self) -> f64 {
        self.probs.iter().sum()
    }
}

pub fn one_hot(class_index: usize, num_classes: usize) -> Result<SoftLabel> {
    if num_classes < 2 {
        return Err(Error::invalid(format!("need at least 2 classes, got {num_classes}")));
    }
    if class_index >= num_classes {
        return Err(Error::invalid(format!(
            "class {class_index} out of range for {num_classes} classes"
        )));
    }
    let mut probs = vec![0.0; num_classes];
    probs[class_index] = 1.0;
    Ok(SoftLabel {
        probs,
        kind: LabelKind::OneHot,
        class_index,
    })
}

fn check_decay(y: &SoftLabel, gamma: f64) -> Result<()> {
    if y.kind != LabelKind::OneHot {
        return Err(Error::invalid("label decay applies to one-hot labels only"));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::invalid(format!("label decay {gamma} outside [0, 1]")));
    }
    Ok(())
}

/// `(1 − γ)·y`.
pub fn temper_label(y: &SoftLabel, gamma: f64) -> Result<SoftLabel> {
    check_decay(y, gamma)?;
    Ok(SoftLabel {
        probs: y.probs.iter().map(|&p| (1.0 - gamma) * p).collect(),
        kind: LabelKind::Tempered,
        class_index: y.class_index,
    })
}

/// `(1 − γ)·y + γ/C`.
pub fn smooth_label(y: &SoftLabel, gamma: f64) -> Result<SoftLabel> {
    check_decay(y, gamma)?;
    let floor = gamma / y.probs.len() as f64;
    Ok(SoftLabel {
        probs: y.probs.iter().map(|&p| (1.0 - gamma) * p + floor).collect(),
        kind: LabelKind::Smoothed,
        class_index: y.class_index,
    })
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7, nine terms).
pub fn ln_gamma(x: f64) -> f64 {
    use std::f64::consts::PI;
    if x < 0.5 {
        // Reflection.
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS_COEF[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// `ln B(α) = Σ ln Γ(α_i) − ln Γ(Σ α_i)`.
pub fn ln_multivariate_beta(alpha: &[f64]) -> f64 {
    alpha.iter().map(|&a| ln_gamma(a)).sum::<f64>() - ln_gamma(alpha.iter().sum())
}

/// `ln Dir(f | 1 + y) = Σ y_c ln f_c − ln B(1 + y)`.
pub fn dirichlet_log_density(f: &[f64], y: &SoftLabel) -> Result<f64> {
    if f.len() != y.probs.len() {
        return Err(Error::shape(format!(
            "prediction has {} entries, label has {}",
            f.len(),
            y.probs.len()
        )));
    }
    if let Some(i) = f.iter().position(|&p| !(p > 0.0)) {
        return Err(Error::invalid(format!("probability f[{i}] = {} is not positive", f[i])));
    }
    let total: f64 = f.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("probabilities sum to {total}, not 1")));
    }
    let concentration: Vec<f64> = y.probs.iter().map(|&v| 1.0 + v).collect();
    let cross: f64 = y.probs.iter().zip(f).map(|(&yc, &fc)| yc * fc.ln()).sum();
    Ok(cross - ln_multivariate_beta(&concentration))
}
