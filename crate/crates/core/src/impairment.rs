//! Receiver front-end with I/Q imbalance.
//!
//! A gain mismatch `eps` and phase mismatch `theta` between the I and Q mixer
//! paths turn the IQI-free IF signal `x` into `mu x + nu conj(x)` with
//!
//! ```text
//! mu = (1 + eps e^{j theta}) / 2,   nu = (1 - eps e^{-j theta}) / 2.
//! ```
//!
//! After digital down-conversion from `+f_IF` and `-f_IF` the two branches are
//! `d = mu s + nu conj(i)` and `g = mu i + nu conj(s)`. [`mix_baseband`]
//! produces those directly; [`if_chain_reference`] runs the oversampled IF
//! chain sample by sample so the two can be checked against each other.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{apply_flat_fading, awgn, jakes_fading, ChannelConfig};
use crate::error::{IqiError, Result};
use crate::numerics::energy;
use crate::waveforms::qam64_symbols;

/// Largest tolerated deviation of the IF-chain reference from the baseband model.
pub const IF_CHAIN_TOLERANCE_DB: f64 = -40.0;

/// `|mu|^2` at or below this is treated as a swapped (degenerate) front-end.
const DEGENERATE_MU_SQR: f64 = 1e-24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IqiParams {
    /// `20 log10(eps)`.
    pub gain_imbalance_db: f64,
    /// Radians.
    pub theta: f64,
    pub mu: Complex64,
    pub nu: Complex64,
}

impl IqiParams {
    pub fn ideal() -> Self {
        iqi_params(0.0, 0.0)
    }

    pub fn epsilon(&self) -> f64 {
        10f64.powf(self.gain_imbalance_db / 20.0)
    }
}

/// Mixing coefficients for a gain imbalance in dB and phase imbalance in radians.
///
/// `nu` is derived from `mu` so that `mu + conj(nu) == 1` holds bit-exactly
/// for any realistic imbalance (`Re mu` in `[0.5, 2]`).
pub fn iqi_params(gain_imbalance_db: f64, theta: f64) -> IqiParams {
    let eps = 10f64.powf(gain_imbalance_db / 20.0);
    let mu = (Complex64::new(1.0, 0.0) + Complex64::from_polar(eps, theta)) / 2.0;
    let nu = Complex64::new(1.0, 0.0) - mu.conj();
    IqiParams {
        gain_imbalance_db,
        theta,
        mu,
        nu,
    }
}

/// `10 log10(|mu|^2 / |nu|^2)`. `+inf` without imbalance, `-inf` when `mu`
/// vanishes to rounding level (the branches are swapped).
pub fn image_rejection_ratio_db(params: &IqiParams) -> f64 {
    let (m, n) = (params.mu.norm_sqr(), params.nu.norm_sqr());
    match (m <= DEGENERATE_MU_SQR, n == 0.0) {
        (_, true) => f64::INFINITY,
        (true, false) => f64::NEG_INFINITY,
        _ => 10.0 * (m / n).log10(),
    }
}

/// The two observed branches plus their ground-truth decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationPair {
    pub d: Vec<Complex64>,
    pub g: Vec<Complex64>,
    pub truth_s_in_d: Vec<Complex64>,
    pub truth_i_in_d: Vec<Complex64>,
    pub truth_s_in_g: Vec<Complex64>,
    pub truth_i_in_g: Vec<Complex64>,
    /// Nominal input SIR the stream was generated for, when known.
    pub sir_in_db: Option<f64>,
    /// Nominal SNR; `Some(inf)` for a noise-free run.
    pub snr_db: Option<f64>,
}

impl ObservationPair {
    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// Concatenates the given index ranges into a new observation.
    pub fn gather(&self, spans: &[std::ops::Range<usize>]) -> ObservationPair {
        let pick = |v: &[Complex64]| spans.iter().flat_map(|r| v[r.clone()].iter().copied()).collect();
        ObservationPair {
            d: pick(&self.d),
            g: pick(&self.g),
            truth_s_in_d: pick(&self.truth_s_in_d),
            truth_i_in_d: pick(&self.truth_i_in_d),
            truth_s_in_g: pick(&self.truth_s_in_g),
            truth_i_in_g: pick(&self.truth_i_in_g),
            sir_in_db: self.sir_in_db,
            snr_db: self.snr_db,
        }
    }

    pub fn with_conditions(mut self, sir_in_db: f64, snr_db: f64) -> Self {
        self.sir_in_db = Some(sir_in_db);
        self.snr_db = Some(snr_db);
        self
    }

    fn from_parts(
        truth_s_in_d: Vec<Complex64>,
        truth_i_in_d: Vec<Complex64>,
        truth_s_in_g: Vec<Complex64>,
        truth_i_in_g: Vec<Complex64>,
    ) -> Self {
        let add = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).map(|(x, y)| x + y).collect();
        Self {
            d: add(&truth_s_in_d, &truth_i_in_d),
            g: add(&truth_s_in_g, &truth_i_in_g),
            truth_s_in_d,
            truth_i_in_d,
            truth_s_in_g,
            truth_i_in_g,
            sir_in_db: None,
            snr_db: None,
        }
    }
}

/// `d = mu s + nu conj(i)`, `g = mu i + nu conj(s)`.
pub fn mix_baseband(s: &[Complex64], i: &[Complex64], params: &IqiParams) -> Result<ObservationPair> {
    if s.len() != i.len() {
        return Err(IqiError::LengthMismatch {
            expected: s.len(),
            actual: i.len(),
        });
    }
    let IqiParams { mu, nu, .. } = *params;
    Ok(ObservationPair::from_parts(
        s.iter().map(|x| mu * x).collect(),
        i.iter().map(|x| nu * x.conj()).collect(),
        s.iter().map(|x| nu * x.conj()).collect(),
        i.iter().map(|x| mu * x).collect(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterferenceModulation {
    Qam64,
    /// Circular complex Gaussian symbols.
    Gaussian,
}

/// Image-band blocker: an independent symbol stream through its own fading
/// realization, plus receiver noise of `noise_variance` per sample.
///
/// The faded part is scaled so the expected total power is
/// `signal_power / 10^(sir_in_db / 10)`.
pub fn make_interference<R: Rng + ?Sized>(
    len: usize,
    sir_in_db: f64,
    signal_power: f64,
    noise_variance: f64,
    modulation: InterferenceModulation,
    channel: &ChannelConfig,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    if len == 0 {
        return Err(IqiError::Empty("interference length must be at least 1"));
    }
    let target = signal_power / 10f64.powf(sir_in_db / 10.0);
    if !target.is_finite() {
        return Err(IqiError::InvalidConfig(format!(
            "interference power is not finite for SIR_in {sir_in_db} dB"
        )));
    }
    let fading_gain = if channel.unit_power { 1.0 } else { 2.0 };
    let amplitude = ((target - noise_variance).max(0.0) / fading_gain).sqrt();

    let symbols = match modulation {
        InterferenceModulation::Qam64 => qam64_symbols(len, rng),
        InterferenceModulation::Gaussian => awgn(len, 1.0, rng),
    };
    let fading = jakes_fading(channel, len, rng)?;
    let faded = apply_flat_fading(&symbols, &fading)?;
    let noise = awgn(len, noise_variance, rng);
    Ok(faded.iter().zip(&noise).map(|(x, z)| x * amplitude + z).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IfChainConfig {
    pub oversample: usize,
    /// IF frequency in cycles per oversampled sample.
    pub f_if_norm: f64,
    pub taps: usize,
}

impl Default for IfChainConfig {
    fn default() -> Self {
        Self {
            oversample: 16,
            f_if_norm: 1.0 / 8.0,
            taps: 127,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IfChainOutput {
    /// Branches after the digital mixers, low-pass and decimation, with the
    /// filter start-up removed.
    pub observation: ObservationPair,
    /// `s` and `i` passed through the same interpolation/low-pass chain but
    /// without IF mixing or imbalance; feed these to [`mix_baseband`] to get
    /// the expected branches.
    pub filtered_s: Vec<Complex64>,
    pub filtered_i: Vec<Complex64>,
    /// Symbols dropped from the front.
    pub settle: usize,
    /// Worst per-branch relative error against the baseband model, in dB.
    pub deviation_db: f64,
}

/// Blackman-windowed sinc low-pass. `cutoff` in cycles per sample.
pub(crate) fn lowpass_taps(num_taps: usize, cutoff: f64, gain: f64) -> Vec<f64> {
    let mid = (num_taps - 1) as f64 / 2.0;
    let raw: Vec<f64> = (0..num_taps)
        .map(|k| {
            let t = k as f64 - mid;
            let sinc = if t == 0.0 {
                2.0 * cutoff
            } else {
                (2.0 * PI * cutoff * t).sin() / (PI * t)
            };
            let x = 2.0 * PI * k as f64 / (num_taps - 1) as f64;
            let window = 0.42 - 0.5 * x.cos() + 0.08 * (2.0 * x).cos();
            sinc * window
        })
        .collect();
    let dc: f64 = raw.iter().sum();
    raw.into_iter().map(|h| h * gain / dc).collect()
}

/// Causal FIR, output truncated to the input length.
fn fir(x: &[Complex64], taps: &[f64]) -> Vec<Complex64> {
    (0..x.len())
        .map(|n| taps.iter().take(n + 1).enumerate().map(|(k, h)| x[n - k] * *h).sum())
        .collect()
}

fn upsample(x: &[Complex64], factor: usize, taps: &[f64]) -> Vec<Complex64> {
    let mut stuffed = vec![Complex64::new(0.0, 0.0); x.len() * factor];
    for (k, v) in x.iter().enumerate() {
        stuffed[k * factor] = *v;
    }
    fir(&stuffed, taps)
}

fn downsample(x: &[Complex64], factor: usize, taps: &[f64]) -> Vec<Complex64> {
    fir(x, taps).into_iter().step_by(factor).collect()
}

fn rotate(x: &[Complex64], cycles_per_sample: f64) -> Vec<Complex64> {
    x.iter()
        .enumerate()
        .map(|(m, v)| v * Complex64::from_polar(1.0, 2.0 * PI * cycles_per_sample * m as f64))
        .collect()
}

/// Quadrature mixer whose Q path has gain `eps` and phase offset `theta`.
fn imbalanced_mixer(x: &[Complex64], eps: f64, theta: f64) -> Vec<Complex64> {
    let (sin_t, cos_t) = theta.sin_cos();
    x.iter()
        .map(|v| Complex64::new(v.re, eps * (sin_t * v.re + cos_t * v.im)))
        .collect()
}

struct IfChain {
    cfg: IfChainConfig,
    interp: Vec<f64>,
    lowpass: Vec<f64>,
}

impl IfChain {
    fn new(cfg: IfChainConfig) -> Self {
        let cutoff = 0.5 / cfg.oversample as f64;
        Self {
            cfg,
            interp: lowpass_taps(cfg.taps, cutoff, cfg.oversample as f64),
            lowpass: lowpass_taps(cfg.taps, cutoff, 1.0),
        }
    }

    /// Runs the full analog/digital chain for one pair of baseband inputs.
    fn branches(&self, s: &[Complex64], i: &[Complex64], params: &IqiParams) -> (Vec<Complex64>, Vec<Complex64>) {
        let r = self.cfg.oversample;
        let f = self.cfg.f_if_norm;
        let s_up = rotate(&upsample(s, r, &self.interp), f);
        let i_up = rotate(&upsample(i, r, &self.interp), -f);
        let clean: Vec<Complex64> = s_up.iter().zip(&i_up).map(|(a, b)| a + b).collect();
        let adc = imbalanced_mixer(&clean, params.epsilon(), params.theta);
        let d = downsample(&rotate(&adc, -f), r, &self.lowpass);
        let g = downsample(&rotate(&adc, f), r, &self.lowpass);
        (d, g)
    }

    fn filtered(&self, x: &[Complex64]) -> Vec<Complex64> {
        downsample(
            &upsample(x, self.cfg.oversample, &self.interp),
            self.cfg.oversample,
            &self.lowpass,
        )
    }

    fn settle(&self) -> usize {
        (2 * (self.cfg.taps - 1)).div_ceil(self.cfg.oversample)
    }
}

fn relative_error_db(got: &[Complex64], want: &[Complex64], floor: f64) -> f64 {
    let err: f64 = got.iter().zip(want).map(|(a, b)| (a - b).norm_sqr()).sum();
    let reference = energy(want).max(floor);
    if err == 0.0 {
        return f64::NEG_INFINITY;
    }
    10.0 * (err / reference).log10()
}

/// Oversampled IF-chain simulation of the imbalanced receiver.
///
/// The baseband inputs are interpolated, placed at `+f_IF` (desired) and
/// `-f_IF` (image), passed through a quadrature mixer with the given gain and
/// phase mismatch, digitally mixed down from both IF tones, low-pass filtered
/// and decimated back to the symbol rate. Fails with
/// [`IqiError::ModelMismatch`] if the result deviates from [`mix_baseband`]
/// by more than [`IF_CHAIN_TOLERANCE_DB`].
pub fn if_chain_reference(
    s: &[Complex64],
    i: &[Complex64],
    params: &IqiParams,
    cfg: IfChainConfig,
) -> Result<IfChainOutput> {
    if s.len() != i.len() {
        return Err(IqiError::LengthMismatch {
            expected: s.len(),
            actual: i.len(),
        });
    }
    if cfg.oversample < 8 {
        return Err(IqiError::InvalidConfig(format!(
            "IF chain needs oversampling of at least 8, got {}",
            cfg.oversample
        )));
    }
    if !(cfg.f_if_norm > 0.0 && cfg.f_if_norm < 0.5) {
        return Err(IqiError::InvalidConfig(format!(
            "IF frequency must lie in (0, 0.5) cycles/sample, got {}",
            cfg.f_if_norm
        )));
    }
    if cfg.taps < 3 {
        return Err(IqiError::InvalidConfig("IF chain filters need at least 3 taps".into()));
    }
    let chain = IfChain::new(cfg);
    let settle = chain.settle();
    if s.len() <= settle + 1 {
        return Err(IqiError::InvalidConfig(format!(
            "need more than {} symbols to get past the filter start-up",
            settle + 1
        )));
    }

    let zeros = vec![Complex64::new(0.0, 0.0); s.len()];
    let (s_in_d, s_in_g) = chain.branches(s, &zeros, params);
    let (i_in_d, i_in_g) = chain.branches(&zeros, i, params);
    let trim = |v: Vec<Complex64>| v[settle..].to_vec();
    let observation = ObservationPair::from_parts(trim(s_in_d), trim(i_in_d), trim(s_in_g), trim(i_in_g));
    let filtered_s = trim(chain.filtered(s));
    let filtered_i = trim(chain.filtered(i));

    let expected = mix_baseband(&filtered_s, &filtered_i, params)?;
    let total = energy(&expected.d) + energy(&expected.g);
    let floor = 1e-12 * total;
    let deviation_db = relative_error_db(&observation.d, &expected.d, floor).max(relative_error_db(
        &observation.g,
        &expected.g,
        floor,
    ));
    if deviation_db.is_nan() || deviation_db > IF_CHAIN_TOLERANCE_DB {
        return Err(IqiError::ModelMismatch { deviation_db });
    }

    Ok(IfChainOutput {
        observation,
        filtered_s,
        filtered_i,
        settle,
        deviation_db,
    })
}
