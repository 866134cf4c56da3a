//! Output SIR after compensation, estimator error and empirical CDFs.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{IqiError, Result};
use crate::estimation::{compensate, IqiEstimate, Method};
use crate::impairment::{IqiParams, ObservationPair};
use crate::numerics::energy;

/// Plotting cap for perfect or near-perfect cancellation. Exports keep raw values.
pub const PLOT_CAP_DB: f64 = 80.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SirSample {
    /// May be `+inf` for exact cancellation.
    pub output_sir_db: f64,
    pub method: Method,
    pub trial: usize,
    /// Identifies the sweep cell the sample came from.
    pub fingerprint: String,
}

/// Gains of the compensated output on the desired signal and on the
/// conjugated image, for an estimate applied to a front-end with `truth`.
pub fn compensation_coefficients(truth: &IqiParams, est: &IqiEstimate) -> (Complex64, Complex64) {
    let (mu, nu) = (truth.mu, truth.nu);
    let (mh, nh) = (est.mu_hat, est.nu_hat);
    (mh.conj() * mu - nh * nu.conj(), mh.conj() * nu - nh * mu.conj())
}

/// `10 log10(|mu_hat* mu - nu_hat nu*|^2 / |mu_hat* nu - nu_hat mu*|^2) + SIR_in`.
/// Returns `+inf` when the image coefficient vanishes.
pub fn output_sir_closed_form(truth: &IqiParams, est: &IqiEstimate, sir_in_db: f64) -> Result<f64> {
    let (signal, image) = compensation_coefficients(truth, est);
    let (ps, pi) = (signal.norm_sqr(), image.norm_sqr());
    if pi == 0.0 {
        if ps == 0.0 {
            return Err(IqiError::Degenerate("compensation removes signal and image alike"));
        }
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (ps / pi).log10() + sir_in_db)
}

/// Output SIR measured by compensating the ground-truth signal-only and
/// interference-only components separately.
pub fn output_sir_empirical(obs: &ObservationPair, est: &IqiEstimate) -> Result<f64> {
    let signal = compensate(&obs.truth_s_in_d, &obs.truth_s_in_g, est)?;
    let interference = compensate(&obs.truth_i_in_d, &obs.truth_i_in_g, est)?;
    let (ps, pi) = (energy(&signal), energy(&interference));
    if ps == 0.0 {
        return Err(IqiError::Degenerate("signal component has no power"));
    }
    if pi == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (ps / pi).log10())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nmse {
    pub value: f64,
    /// `true` when the truth has `nu = 0`, so `value` is `|nu_hat|^2` instead.
    pub absolute: bool,
}

/// `|nu_hat - nu|^2 / |nu|^2`.
pub fn estimator_nmse(est: &IqiEstimate, truth: &IqiParams) -> Nmse {
    let err = (est.nu_hat - truth.nu).norm_sqr();
    let reference = truth.nu.norm_sqr();
    if reference == 0.0 {
        Nmse {
            value: err,
            absolute: true,
        }
    } else {
        Nmse {
            value: err / reference,
            absolute: false,
        }
    }
}

/// Empirical CDF: sorted values with right-continuous probabilities `k / N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfCurve {
    pub values: Vec<f64>,
    pub probs: Vec<f64>,
}

impl CdfCurve {
    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Result<Self> {
        let mut values: Vec<f64> = values.into_iter().collect();
        if values.is_empty() {
            return Err(IqiError::Empty("CDF needs at least one sample"));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(IqiError::Degenerate("NaN SIR sample"));
        }
        // total_cmp puts +inf after every finite value
        values.sort_by(f64::total_cmp);
        let n = values.len() as f64;
        let probs = (1..=values.len()).map(|k| k as f64 / n).collect();
        Ok(Self { values, probs })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `P(X <= x)`.
    pub fn eval(&self, x: f64) -> f64 {
        let count = self.values.partition_point(|v| *v <= x);
        count as f64 / self.values.len() as f64
    }

    /// Linearly interpolated sample quantile, `p` in `[0, 1]`.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let pos = p * (self.values.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = pos - lo as f64;
        let (a, b) = (self.values[lo], self.values[hi]);
        if frac == 0.0 || a == b {
            a
        } else if b.is_infinite() {
            b
        } else {
            a + (b - a) * frac
        }
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    /// Values clipped to [`PLOT_CAP_DB`] for plotting.
    pub fn capped_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.min(PLOT_CAP_DB)).collect()
    }
}

pub fn build_cdf(samples: &[SirSample]) -> Result<CdfCurve> {
    CdfCurve::from_values(samples.iter().map(|s| s.output_sir_db))
}
