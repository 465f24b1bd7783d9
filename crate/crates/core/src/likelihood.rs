//! Soft-label likelihoods and Monte-Carlo estimators of the log marginal
//! likelihood over augmentations. Everything is computed in log space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::SoftLabel;

/// `ln Σ exp(x_i)`; `-∞` for an empty slice.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// Normalized log-probabilities over `C` classes.
#[derive(Debug, Clone, PartialEq)]
pub struct LogProbVector(Vec<f64>);

impl LogProbVector {
    /// Log-softmax of raw logits.
    pub fn from_logits(logits: &[f64]) -> Self {
        let lse = logsumexp(logits);
        Self(logits.iter().map(|&z| z - lse).collect())
    }

    pub fn from_probs(probs: &[f64]) -> Result<Self> {
        if probs.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::invalid("probabilities must be nonnegative"));
        }
        let logp: Vec<f64> = probs.iter().map(|&p| p.ln()).collect();
        Self::new(logp)
    }

    /// Wraps log-probabilities, checking `logsumexp = 0` within 1e-9.
    pub fn new(logp: Vec<f64>) -> Result<Self> {
        if logp.is_empty() {
            return Err(Error::Empty("log-probability vector"));
        }
        let lse = logsumexp(&logp);
        if !(lse.abs() <= 1e-9) {
            return Err(Error::invalid(format!("log-probabilities normalize to {lse}, not 0")));
        }
        Ok(Self(logp))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn probs(&self) -> Vec<f64> {
        self.0.iter().map(|v| v.exp()).collect()
    }
}

/// `−Σ_c y_c·logp_c`.
pub fn soft_cross_entropy(logp: &LogProbVector, y: &SoftLabel) -> Result<f64> {
    if logp.len() != y.num_classes() {
        return Err(Error::shape(format!(
            "{} log-probabilities for a {}-class label",
            logp.len(),
            y.num_classes()
        )));
    }
    Ok(-y
        .probs()
        .iter()
        .zip(logp.as_slice())
        .filter(|(&yc, _)| yc != 0.0)
        .map(|(&yc, &lp)| yc * lp)
        .sum::<f64>())
}

/// `(1 − γ)·logp_class`, the log of the categorical likelihood raised to
/// the tempered label mass.
pub fn tempered_log_likelihood(logp: &LogProbVector, class_index: usize, gamma: f64) -> Result<f64> {
    if class_index >= logp.len() {
        return Err(Error::invalid(format!(
            "class {class_index} out of range for {} classes",
            logp.len()
        )));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::invalid(format!("label decay {gamma} outside [0, 1]")));
    }
    if gamma == 1.0 {
        return Ok(0.0);
    }
    Ok((1.0 - gamma) * logp.as_slice()[class_index])
}

/// Below this gap in log space a normalizer term takes its limit value.
const LIMIT_GAP: f64 = 1e-12;

/// `ln((e^d − 1)/d)`, the log of `∫₀¹ e^{a·d} da`.
fn ln_phi(d: f64) -> f64 {
    if d.abs() < LIMIT_GAP {
        0.0
    } else if d > 700.0 {
        d - d.ln() + (-(-d).exp()).ln_1p()
    } else {
        (d.exp_m1() / d).ln()
    }
}

/// Derivative of [`ln_phi`].
fn d_ln_phi(d: f64) -> f64 {
    if d.abs() < 1e-3 {
        0.5 + d / 12.0 - d * d * d / 720.0
    } else {
        1.0 / (-(-d).exp_m1()) - 1.0 / d
    }
}

/// Per-class terms `ln T_j` of the normalizer, `T_j = f_j·φ(ln K − ln f_j)`,
/// and the gaps `ln K − ln f_j`.
fn normalizer_terms(logp: &LogProbVector) -> Result<(Vec<f64>, Vec<f64>)> {
    let lp = logp.as_slice();
    if let Some(i) = lp.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("log-probability {i} is not finite")));
    }
    let log_k = lp.iter().sum::<f64>() / lp.len() as f64;
    let gaps: Vec<f64> = lp.iter().map(|&l| log_k - l).collect();
    let terms = lp.iter().zip(&gaps).map(|(&l, &d)| l + ln_phi(d)).collect();
    Ok((terms, gaps))
}

/// `ln Z` with `Z = Σ_j (K − f_j)/(ln K − ln f_j)` and `K = Π f_i^{1/C}`:
/// the constant that normalizes `Π f_i^{y_i}` over smoothed labels of every
/// class and every decay in `[0, 1]`.
pub fn log_normalizer_z(logp: &LogProbVector) -> Result<f64> {
    let (terms, _) = normalizer_terms(logp)?;
    Ok(logsumexp(&terms))
}

/// `ln Z` and its gradient with respect to the log-probabilities.
pub fn log_normalizer_z_with_grad(logp: &LogProbVector) -> Result<(f64, Vec<f64>)> {
    let (terms, gaps) = normalizer_terms(logp)?;
    let log_z = logsumexp(&terms);
    let c = terms.len() as f64;
    let weights: Vec<f64> = terms.iter().map(|&t| (t - log_z).exp()).collect();
    let psi: Vec<f64> = gaps.iter().map(|&d| d_ln_phi(d)).collect();
    let shared: f64 = weights.iter().zip(&psi).map(|(w, p)| w * p).sum::<f64>() / c;
    let grad = weights
        .iter()
        .zip(&psi)
        .map(|(w, p)| w * (1.0 - p) + shared)
        .collect();
    Ok((log_z, grad))
}

/// Per-augmentation log-likelihoods of one example.
#[derive(Debug, Clone, PartialEq)]
pub struct McSample(Vec<f64>);

impl McSample {
    pub fn new(loglik: Vec<f64>) -> Result<Self> {
        if loglik.is_empty() {
            return Err(Error::Empty("Monte-Carlo sample"));
        }
        if loglik.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite log-likelihood sample".into()));
        }
        Ok(Self(loglik))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum McMethod {
    /// Log of the sample mean of the likelihoods.
    Naive,
    /// Sample mean of the log-likelihoods (the geometric aggregation).
    Jensen,
    /// Naive plus the second-order correction `½·var[I_K]/I_K²`.
    Corrected,
}

/// Estimates `ln ∫ p(y | x, φ) p(φ) dφ` from `K` draws of `φ`.
pub fn mc_log_marginal(samples: &McSample, method: McMethod) -> Result<f64> {
    let ll = samples.as_slice();
    let k = ll.len() as f64;
    match method {
        McMethod::Jensen => Ok(ll.iter().sum::<f64>() / k),
        McMethod::Naive => Ok(logsumexp(ll) - k.ln()),
        McMethod::Corrected => {
            if ll.len() < 2 {
                return Err(Error::invalid("bias correction needs at least two samples"));
            }
            let log_mean = logsumexp(ll) - k.ln();
            // var[I_K]/I_K² with every term scaled by 1/I_K.
            let rel_var = ll
                .iter()
                .map(|&l| (l - log_mean).exp_m1().powi(2))
                .sum::<f64>()
                / (k * (k - 1.0));
            Ok(log_mean + 0.5 * rel_var)
        }
    }
}
