//! Data-aided subspace estimation of the imbalance coefficients.
//!
//! For every training segment of length `L` the received pair `[d, conj(g)]`
//! is multiplied by the orthonormal null-space basis `Q` of that pilot
//! segment. The desired pilot (whatever its flat-fading gain) is annihilated,
//! leaving
//!
//! ```text
//! w1 = mu z + nu i,    w2 = conj(nu) z + conj(mu) i
//! ```
//!
//! where `z` and `i` are the projected noise and image interference. Because
//! `mu + conj(nu) = 1`, `w1 + w2 = z + i` is imbalance-free, and
//! `w2^H w1 / |w1 + w2|^2` estimates `mu nu = nu - |nu|^2`, which is then
//! solved for `nu`. Alternatively `w2^H w1 / w2^H w2` estimates `nu / conj(mu)`.
//!
//! Projected rows from all segments and all processed frames are stacked
//! before the inner products are taken.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{IqiError, Result};
use crate::impairment::ObservationPair;
use crate::numerics::{dot_unchecked, energy, ProjectionBasis};
use crate::waveforms::{zadoff_chu, FrameConfig};

/// Smallest `|mu|^2 - |nu|^2` accepted by [`compensate`].
pub const COMPENSATION_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Product estimate followed by the quadratic solve.
    SubspaceProduct,
    /// Least-squares ratio `nu / conj(mu)`.
    SubspaceLse,
    /// Same product formula applied to the raw branches, no projection.
    Blind,
    /// No compensation at all (`mu = 1`, `nu = 0`).
    Uncompensated,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::SubspaceProduct,
        Method::SubspaceLse,
        Method::Blind,
        Method::Uncompensated,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::SubspaceProduct => "subspace-product",
            Method::SubspaceLse => "subspace-lse",
            Method::Blind => "blind",
            Method::Uncompensated => "uncompensated",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = IqiError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim())
            .ok_or_else(|| IqiError::InvalidConfig(format!("unknown method '{s}'")))
    }
}

/// How the training period is cut into quasi-static segments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentationPlan {
    pub segments: usize,
    pub segment_len: usize,
    /// Coherence length in samples, if known. Advisory only.
    pub coherence_len: Option<usize>,
}

impl SegmentationPlan {
    pub fn new(pilot_len: usize, segments: usize) -> Result<Self> {
        if segments == 0 || !pilot_len.is_multiple_of(segments) {
            return Err(IqiError::InvalidConfig(format!(
                "{segments} segments do not divide a pilot of length {pilot_len}"
            )));
        }
        let segment_len = pilot_len / segments;
        if segment_len < 2 {
            return Err(IqiError::InvalidConfig(format!(
                "segments of length {segment_len} leave nothing after projection"
            )));
        }
        Ok(Self {
            segments,
            segment_len,
            coherence_len: None,
        })
    }

    pub fn with_coherence_len(mut self, coherence_len: Option<usize>) -> Self {
        self.coherence_len = coherence_len;
        self
    }

    pub fn pilot_len(&self) -> usize {
        self.segments * self.segment_len
    }

    /// Projected rows per training period, `N_p - K`.
    pub fn rows_per_period(&self) -> usize {
        self.segments * (self.segment_len - 1)
    }

    /// True when segments are not shorter than the coherence length.
    pub fn exceeds_coherence(&self) -> bool {
        self.coherence_len.is_some_and(|nc| self.segment_len >= nc)
    }
}

/// Stacked projected branches.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProjectedPair {
    pub w1: Vec<Complex64>,
    pub w2: Vec<Complex64>,
}

impl ProjectedPair {
    pub fn len(&self) -> usize {
        self.w1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w1.is_empty()
    }

    pub fn append(&mut self, other: &ProjectedPair) {
        self.w1.extend_from_slice(&other.w1);
        self.w2.extend_from_slice(&other.w2);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IqiEstimate {
    pub mu_hat: Complex64,
    pub nu_hat: Complex64,
    /// The `mu nu` estimate for product-based methods; `mu_hat * nu_hat` otherwise.
    pub mu_nu_product: Complex64,
    pub method: Method,
    pub samples_used: usize,
    /// The quadratic discriminant was negative and got clamped to zero.
    pub clamped: bool,
}

impl IqiEstimate {
    /// Builds an estimate from `nu_hat`, enforcing `mu_hat = 1 - conj(nu_hat)`.
    pub fn from_nu(nu_hat: Complex64, method: Method, samples_used: usize) -> Self {
        let mu_hat = Complex64::new(1.0, 0.0) - nu_hat.conj();
        Self {
            mu_hat,
            nu_hat,
            mu_nu_product: mu_hat * nu_hat,
            method,
            samples_used,
            clamped: false,
        }
    }

    pub fn uncompensated() -> Self {
        Self::from_nu(Complex64::new(0.0, 0.0), Method::Uncompensated, 0)
    }
}

/// `w1 = Q d`, `w2 = Q conj(g)` for one pilot segment.
pub fn project_training(d_seg: &[Complex64], g_seg: &[Complex64], basis: &ProjectionBasis) -> Result<ProjectedPair> {
    if d_seg.len() != basis.pilot_len() || g_seg.len() != basis.pilot_len() {
        return Err(IqiError::LengthMismatch {
            expected: basis.pilot_len(),
            actual: if d_seg.len() != basis.pilot_len() {
                d_seg.len()
            } else {
                g_seg.len()
            },
        });
    }
    let g_conj: Vec<Complex64> = g_seg.iter().map(|z| z.conj()).collect();
    Ok(ProjectedPair {
        w1: basis.project(d_seg)?,
        w2: basis.project(&g_conj)?,
    })
}

/// Vertical concatenation of projected pairs.
pub fn accumulate<I>(pairs: I) -> Result<ProjectedPair>
where
    I: IntoIterator<Item = ProjectedPair>,
{
    let mut iter = pairs.into_iter();
    let mut out = iter.next().ok_or(IqiError::Empty("nothing to accumulate"))?;
    for p in iter {
        out.append(&p);
    }
    Ok(out)
}

/// `w2^H w1 / |w1 + w2|^2`, an estimate of `mu nu`.
pub fn estimate_product(pair: &ProjectedPair) -> Result<Complex64> {
    check_pair(pair)?;
    let sum: Vec<Complex64> = pair.w1.iter().zip(&pair.w2).map(|(a, b)| a + b).collect();
    let denominator = energy(&sum);
    if denominator == 0.0 || !denominator.is_finite() {
        return Err(IqiError::Degenerate("w1 + w2 has no energy"));
    }
    Ok(dot_unchecked(&pair.w2, &pair.w1) / denominator)
}

/// `w2^H w1 / w2^H w2`, an estimate of `nu / conj(mu)`.
pub fn estimate_lse_ratio(pair: &ProjectedPair) -> Result<Complex64> {
    check_pair(pair)?;
    let denominator = energy(&pair.w2);
    if denominator == 0.0 || !denominator.is_finite() {
        return Err(IqiError::Degenerate("w2 has no energy"));
    }
    Ok(dot_unchecked(&pair.w2, &pair.w1) / denominator)
}

fn check_pair(pair: &ProjectedPair) -> Result<()> {
    if pair.w1.len() != pair.w2.len() {
        return Err(IqiError::LengthMismatch {
            expected: pair.w1.len(),
            actual: pair.w2.len(),
        });
    }
    if pair.is_empty() {
        return Err(IqiError::Empty("projected pair has no rows"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuSolution {
    pub nu_hat: Complex64,
    pub mu_hat: Complex64,
    pub clamped: bool,
}

/// Solves `mu nu = product` together with `mu = 1 - conj(nu)`:
///
/// ```text
/// nu = 1/2 - 1/2 sqrt(1 - 4 (Re p + (Im p)^2)) + j Im p
/// ```
///
/// Takes the root with `Re nu < 1/2` (gain imbalance below about 6 dB). A
/// negative discriminant is clamped to zero and flagged.
pub fn solve_nu(product: Complex64) -> NuSolution {
    let im = product.im;
    let discriminant = 1.0 - 4.0 * (product.re + im * im);
    let clamped = discriminant < 0.0;
    let root = discriminant.max(0.0).sqrt();
    let nu_hat = Complex64::new(0.5 - 0.5 * root, im);
    NuSolution {
        nu_hat,
        mu_hat: Complex64::new(1.0, 0.0) - nu_hat.conj(),
        clamped,
    }
}

/// Inverts `r = nu / conj(mu)` using `conj(mu) = 1 - nu`: `nu = r / (1 + r)`.
pub fn solve_nu_from_ratio(ratio: Complex64) -> Result<NuSolution> {
    let denominator = Complex64::new(1.0, 0.0) + ratio;
    if denominator.norm() == 0.0 {
        return Err(IqiError::SingularRatio);
    }
    let nu_hat = ratio / denominator;
    Ok(NuSolution {
        nu_hat,
        mu_hat: Complex64::new(1.0, 0.0) - nu_hat.conj(),
        clamped: false,
    })
}

fn estimate_from_pair(pair: &ProjectedPair, method: Method) -> Result<IqiEstimate> {
    match method {
        Method::SubspaceProduct | Method::Blind => {
            let product = estimate_product(pair)?;
            let sol = solve_nu(product);
            Ok(IqiEstimate {
                mu_hat: sol.mu_hat,
                nu_hat: sol.nu_hat,
                mu_nu_product: product,
                method,
                samples_used: pair.len(),
                clamped: sol.clamped,
            })
        }
        Method::SubspaceLse => {
            let sol = solve_nu_from_ratio(estimate_lse_ratio(pair)?)?;
            Ok(IqiEstimate::from_nu(sol.nu_hat, method, pair.len()))
        }
        Method::Uncompensated => Ok(IqiEstimate::uncompensated()),
    }
}

/// Blind baseline: the product estimator on the raw branches, with
/// `w1 = d` and `w2 = conj(g)` over every supplied sample.
pub fn estimate_blind(d: &[Complex64], g: &[Complex64]) -> Result<IqiEstimate> {
    if d.len() != g.len() {
        return Err(IqiError::LengthMismatch {
            expected: d.len(),
            actual: g.len(),
        });
    }
    let pair = ProjectedPair {
        w1: d.to_vec(),
        w2: g.iter().map(|z| z.conj()).collect(),
    };
    estimate_from_pair(&pair, Method::Blind)
}

/// `s_hat = (conj(mu_hat) d - nu_hat conj(g)) / (|mu_hat|^2 - |nu_hat|^2)`.
pub fn compensate(d: &[Complex64], g: &[Complex64], est: &IqiEstimate) -> Result<Vec<Complex64>> {
    if d.len() != g.len() {
        return Err(IqiError::LengthMismatch {
            expected: d.len(),
            actual: g.len(),
        });
    }
    let denominator = est.mu_hat.norm_sqr() - est.nu_hat.norm_sqr();
    if denominator.is_nan() || denominator.abs() < COMPENSATION_GUARD {
        return Err(IqiError::CompensationSingular { denominator });
    }
    let a = est.mu_hat.conj() / denominator;
    let b = est.nu_hat / denominator;
    Ok(d.iter().zip(g).map(|(x, y)| a * x - b * y.conj()).collect())
}

/// Precomputed per-segment bases for a fixed pilot.
#[derive(Debug, Clone)]
pub struct SubspaceEstimator {
    plan: SegmentationPlan,
    frame_len: usize,
    bases: Vec<ProjectionBasis>,
}

impl SubspaceEstimator {
    pub fn new(pilot: &[Complex64], plan: SegmentationPlan, frame_len: usize) -> Result<Self> {
        if pilot.len() != plan.pilot_len() {
            return Err(IqiError::LengthMismatch {
                expected: plan.pilot_len(),
                actual: pilot.len(),
            });
        }
        if frame_len < pilot.len() {
            return Err(IqiError::InvalidConfig(format!(
                "frame length {frame_len} is shorter than the pilot ({})",
                pilot.len()
            )));
        }
        let bases = pilot
            .chunks_exact(plan.segment_len)
            .map(ProjectionBasis::from_pilot)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { plan, frame_len, bases })
    }

    pub fn for_frame_config(cfg: &FrameConfig, plan: SegmentationPlan) -> Result<Self> {
        cfg.validate()?;
        let pilot = zadoff_chu(cfg.pilot_len, cfg.zc_root)?;
        Self::new(&pilot, plan, cfg.frame_len())
    }

    pub fn plan(&self) -> &SegmentationPlan {
        &self.plan
    }

    pub fn bases(&self) -> &[ProjectionBasis] {
        &self.bases
    }

    /// Projects and stacks the training periods of the first `frames` frames.
    pub fn project_frames(&self, d: &[Complex64], g: &[Complex64], frames: usize) -> Result<ProjectedPair> {
        if frames == 0 {
            return Err(IqiError::Empty("no frames to process"));
        }
        let needed = (frames - 1) * self.frame_len + self.plan.pilot_len();
        if d.len() < needed || g.len() < needed {
            return Err(IqiError::LengthMismatch {
                expected: needed,
                actual: d.len().min(g.len()),
            });
        }
        let l = self.plan.segment_len;
        let mut out = ProjectedPair {
            w1: Vec::with_capacity(frames * self.plan.rows_per_period()),
            w2: Vec::with_capacity(frames * self.plan.rows_per_period()),
        };
        for frame in 0..frames {
            let start = frame * self.frame_len;
            for (k, basis) in self.bases.iter().enumerate() {
                let span = start + k * l..start + (k + 1) * l;
                out.append(&project_training(&d[span.clone()], &g[span], basis)?);
            }
        }
        Ok(out)
    }

    pub fn estimate(&self, obs: &ObservationPair, frames: usize, method: Method) -> Result<IqiEstimate> {
        match method {
            Method::SubspaceProduct | Method::SubspaceLse => {
                estimate_from_pair(&self.project_frames(&obs.d, &obs.g, frames)?, method)
            }
            Method::Blind => {
                let n = (frames * self.frame_len).min(obs.len());
                estimate_blind(&obs.d[..n], &obs.g[..n])
            }
            Method::Uncompensated => Ok(IqiEstimate::uncompensated()),
        }
    }
}

/// One-shot subspace estimate (product method) over `frames` frames.
pub fn run_subspace_estimator(
    obs: &ObservationPair,
    cfg: &FrameConfig,
    plan: &SegmentationPlan,
    frames: usize,
) -> Result<IqiEstimate> {
    SubspaceEstimator::for_frame_config(cfg, *plan)?.estimate(obs, frames, Method::SubspaceProduct)
}
