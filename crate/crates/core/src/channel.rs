//! Flat Rayleigh fading and complex AWGN.
//!
//! Fading uses a sum-of-sinusoids Jakes generator with randomized phases and
//! arrival angles per realization. The in-phase and quadrature parts are
//! independent sums of `M` oscillators each:
//!
//! ```text
//! x_c(t) = sqrt(1/M) * sum_n cos(w_d t cos(a_n) + phi_n),  a_n = (2 pi n - pi + theta_n) / (4M)
//! x_s(t) = sqrt(1/M) * sum_n cos(w_d t cos(b_n) + psi_n),  b_n = (2 pi n - pi + eta_n) / (4M)
//! ```
//!
//! with all of `phi, psi, theta, eta` uniform on `[-pi, pi)`. The complex
//! process `x_c + j x_s` has unit power and autocorrelation `J0(w_d tau)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{IqiError, Result};

/// Coherence time rule of thumb, `T_c ~ 0.423 / F_D`.
const COHERENCE_FACTOR: f64 = 0.423;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub doppler_hz: f64,
    /// Seconds.
    pub sample_time: f64,
    pub oscillators: usize,
    /// Normalize to `E|alpha|^2 = 1`. When false each quadrature has unit
    /// variance (classical Clarke scaling, total power 2).
    pub unit_power: bool,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            doppler_hz: 100.0,
            sample_time: 2e-6,
            oscillators: 16,
            unit_power: true,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.doppler_hz >= 0.0 && self.doppler_hz.is_finite()) {
            return Err(IqiError::InvalidConfig(format!(
                "doppler must be finite and non-negative, got {}",
                self.doppler_hz
            )));
        }
        if !(self.sample_time > 0.0 && self.sample_time.is_finite()) {
            return Err(IqiError::InvalidConfig(format!(
                "sample time must be positive, got {}",
                self.sample_time
            )));
        }
        if self.oscillators < 8 {
            return Err(IqiError::InvalidConfig(format!(
                "need at least 8 oscillators, got {}",
                self.oscillators
            )));
        }
        Ok(())
    }

    /// Normalized Doppler `F_D * T_s`.
    pub fn normalized_doppler(&self) -> f64 {
        self.doppler_hz * self.sample_time
    }

    /// Samples over which the fading gain is roughly constant. `None` for a
    /// static channel.
    pub fn coherence_len(&self) -> Option<usize> {
        let fd = self.normalized_doppler();
        (fd > 0.0).then(|| (COHERENCE_FACTOR / fd).floor().max(1.0) as usize)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FadingProcess {
    pub coefficients: Vec<Complex64>,
}

impl FadingProcess {
    pub fn constant(value: Complex64, len: usize) -> Self {
        Self {
            coefficients: vec![value; len],
        }
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }
}

struct Oscillator {
    freq: f64,
    phase: f64,
}

fn draw_bank<R: Rng + ?Sized>(m: usize, w_d: f64, rng: &mut R) -> Vec<Oscillator> {
    (1..=m)
        .map(|n| {
            let jitter = rng.random_range(-PI..PI);
            let angle = (2.0 * PI * n as f64 - PI + jitter) / (4.0 * m as f64);
            Oscillator {
                freq: w_d * angle.cos(),
                phase: rng.random_range(-PI..PI),
            }
        })
        .collect()
}

fn bank_sum(bank: &[Oscillator], t: f64) -> f64 {
    bank.iter().map(|o| (o.freq * t + o.phase).cos()).sum()
}

/// One realization of the Jakes fading process over `len` samples.
pub fn jakes_fading<R: Rng + ?Sized>(cfg: &ChannelConfig, len: usize, rng: &mut R) -> Result<FadingProcess> {
    cfg.validate()?;
    if len == 0 {
        return Err(IqiError::Empty("fading length must be at least 1"));
    }
    let m = cfg.oscillators;
    let w_d = 2.0 * PI * cfg.doppler_hz;
    let in_phase = draw_bank(m, w_d, rng);
    let quadrature = draw_bank(m, w_d, rng);
    let gain = if cfg.unit_power {
        (1.0 / m as f64).sqrt()
    } else {
        (2.0 / m as f64).sqrt()
    };

    let coefficients = (0..len)
        .map(|n| {
            let t = n as f64 * cfg.sample_time;
            Complex64::new(bank_sum(&in_phase, t), bank_sum(&quadrature, t)) * gain
        })
        .collect();
    Ok(FadingProcess { coefficients })
}

/// Circularly symmetric complex white Gaussian noise with `variance` per
/// complex sample (half in each real dimension).
pub fn awgn<R: Rng + ?Sized>(len: usize, variance: f64, rng: &mut R) -> Vec<Complex64> {
    if variance <= 0.0 {
        return vec![Complex64::new(0.0, 0.0); len];
    }
    let sigma = (variance / 2.0).sqrt();
    (0..len)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re, im) * sigma
        })
        .collect()
}

/// Elementwise `alpha(n) * x(n)`.
pub fn apply_flat_fading(symbols: &[Complex64], fading: &FadingProcess) -> Result<Vec<Complex64>> {
    if symbols.len() != fading.len() {
        return Err(IqiError::LengthMismatch {
            expected: symbols.len(),
            actual: fading.len(),
        });
    }
    Ok(symbols.iter().zip(&fading.coefficients).map(|(x, a)| x * a).collect())
}
