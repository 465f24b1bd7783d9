//! Scalar schedules driving mollification.
//!
//! Temperature `t ∈ [0, 1]` is the single intensity knob: `t = 0` is the
//! clean input and `t = 1` the fully corrupted one. Noising mixes the image
//! with Gaussian noise on a variance-preserving cosine schedule, blurring
//! runs the heat equation for a time derived from a log-spaced kernel scale,
//! and each modality has a matching label-decay curve `γ(t)`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperparameters shared by the noise, blur and label-decay schedules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScheduleConfig {
    /// Blur kernel scale at `t = 0`, in pixels.
    pub sigma_min: f64,
    /// Blur kernel scale at `t = 1`, in pixels. `None` means the image width.
    pub sigma_max: Option<f64>,
    pub k_noise: f64,
    pub k_blur: f64,
    pub beta_alpha: f64,
    pub beta_beta: f64,
    /// Probabilities of picking no mollification, noising and blurring.
    pub mode_probs: [f64; 3],
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            sigma_min: 0.3,
            sigma_max: None,
            k_noise: 1.0,
            k_blur: 1.0,
            beta_alpha: 1.0,
            beta_beta: 2.0,
            mode_probs: [1.0 / 3.0; 3],
        }
    }
}

impl ScheduleConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.sigma_min) {
            return Err(Error::invalid("sigma_min must be positive"));
        }
        if let Some(max) = self.sigma_max {
            if !(max > self.sigma_min) || !max.is_finite() {
                return Err(Error::invalid("sigma_max must exceed sigma_min"));
            }
        }
        if !positive(self.k_noise) || !positive(self.k_blur) {
            return Err(Error::invalid("label-decay slopes must be positive"));
        }
        if !positive(self.beta_alpha) || !positive(self.beta_beta) {
            return Err(Error::invalid("Beta prior shapes must be positive"));
        }
        if self.mode_probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite())
            || (self.mode_probs.iter().sum::<f64>() - 1.0).abs() > 1e-12
        {
            return Err(Error::invalid(format!(
                "mode_probs must be nonnegative and sum to 1, got {:?}",
                self.mode_probs
            )));
        }
        Ok(())
    }

    /// Effective `sigma_max` for images of the given width.
    pub fn sigma_max_for(&self, width: usize) -> f64 {
        self.sigma_max.unwrap_or(width as f64)
    }

    /// [`blur_sigma`] using this config's endpoints.
    pub fn blur_sigma(&self, t: f64, width: usize) -> f64 {
        blur_sigma(t, self.sigma_min, self.sigma_max_for(width))
    }
}

fn check_t(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::invalid(format!("temperature {t} outside [0, 1]")))
    }
}

/// Variance-preserving mixing weights `(cos(tπ/2), sin(tπ/2))`.
///
/// Both weights are evaluated as sines of arguments in `[0, π/2]`, so the
/// endpoints come out exactly `(1, 0)` and `(0, 1)`.
pub fn alpha_sigma(t: f64) -> Result<(f64, f64)> {
    check_t(t)?;
    let alpha = ((1.0 - t) * PI / 2.0).sin();
    let sigma = (t * PI / 2.0).sin();
    Ok((alpha, sigma))
}

/// `σ_t² = sin²(tπ/2) = (1 − cos(tπ))/2`, with `cos(tπ)` taken as
/// `sin(π(1/2 − t))` so that `t = 1/2` gives exactly `1/2`.
fn sigma_sq(t: f64) -> f64 {
    ((1.0 - (PI * (0.5 - t)).sin()) / 2.0).clamp(0.0, 1.0)
}

/// Signal-to-noise ratio `α_t²/σ_t²`; `+∞` at `t = 0`.
pub fn snr(t: f64) -> f64 {
    let s2 = sigma_sq(t);
    (1.0 - s2) / s2
}

/// Noise label decay `(1/(1 + SNR(t)))^k`, evaluated as `(σ_t²)^k`.
pub fn gamma_noise(t: f64, k: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&t) && k > 0.0);
    sigma_sq(t).powf(k)
}

/// Blur kernel scale, log-linear between `sigma_min` and `sigma_max`.
pub fn blur_sigma(t: f64, sigma_min: f64, sigma_max: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&t));
    if t <= 0.0 {
        sigma_min
    } else if t >= 1.0 {
        sigma_max
    } else {
        ((1.0 - t) * sigma_min.ln() + t * sigma_max.ln()).exp()
    }
}

/// Heat-equation dissipation time `σ_B²/2` for a kernel of scale `σ_B`.
pub fn dissipation_time(sigma_b: f64) -> f64 {
    debug_assert!(sigma_b >= 0.0);
    sigma_b * sigma_b / 2.0
}

/// Blur label decay `t^k`.
pub fn gamma_blur(t: f64, k: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&t) && k > 0.0);
    t.powf(k)
}

/// Draws `t ~ Beta(beta_alpha, beta_beta)` as `X/(X+Y)` from two Gamma
/// variates.
pub fn sample_temperature<R: Rng + ?Sized>(rng: &mut R, cfg: &ScheduleConfig) -> f64 {
    let x_dist = Gamma::new(cfg.beta_alpha, 1.0).expect("validated Beta shape");
    let y_dist = Gamma::new(cfg.beta_beta, 1.0).expect("validated Beta shape");
    loop {
        let x = x_dist.sample(rng);
        let y = y_dist.sample(rng);
        let total = x + y;
        if total > 0.0 && total.is_finite() {
            return (x / total).clamp(0.0, 1.0);
        }
    }
}
