//! Transmitted content of the desired link: Zadoff-Chu training, 64-QAM data
//! and the time-multiplexed `[pilot | data]` frame.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{IqiError, Result};

/// Square 64-QAM levels per axis before normalization.
const QAM64_LEVELS: [f64; 8] = [-7.0, -5.0, -3.0, -1.0, 1.0, 3.0, 5.0, 7.0];

/// Average symbol energy of the un-normalized square 64-QAM grid.
const QAM64_ENERGY: f64 = 42.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameConfig {
    pub pilot_len: usize,
    pub data_len: usize,
    pub zc_root: usize,
    pub frames_per_run: usize,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self {
            pilot_len: 8,
            data_len: 48,
            zc_root: 1,
            frames_per_run: 1,
        }
    }
}

impl FrameConfig {
    pub fn frame_len(&self) -> usize {
        self.pilot_len + self.data_len
    }

    pub fn validate(&self) -> Result<()> {
        if self.pilot_len < 2 {
            return Err(IqiError::InvalidConfig(format!(
                "pilot length must be at least 2, got {}",
                self.pilot_len
            )));
        }
        if self.data_len == 0 {
            return Err(IqiError::InvalidConfig("data length must be positive".into()));
        }
        if self.frames_per_run == 0 {
            return Err(IqiError::InvalidConfig("frames per run must be positive".into()));
        }
        check_root(self.pilot_len, self.zc_root)
    }
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn check_root(len: usize, root: usize) -> Result<()> {
    if root == 0 || gcd(root, len) != 1 {
        return Err(IqiError::InvalidRoot { root, len });
    }
    Ok(())
}

/// Zadoff-Chu sequence of length `len` with root `root`.
///
/// Even lengths use `exp(-j pi u n^2 / N)`, odd lengths `exp(-j pi u n (n+1) / N)`.
pub fn zadoff_chu(len: usize, root: usize) -> Result<Vec<Complex64>> {
    if len == 0 {
        return Err(IqiError::InvalidConfig("Zadoff-Chu length must be positive".into()));
    }
    check_root(len, root)?;
    let n_len = len as u128;
    let u = root as u128;
    Ok((0..len as u128)
        .map(|n| {
            let quad = if len.is_multiple_of(2) { n * n } else { n * (n + 1) };
            // reduce the phase index modulo 2N before going to floating point
            let k = (u * quad) % (2 * n_len);
            Complex64::from_polar(1.0, -PI * k as f64 / len as f64)
        })
        .collect())
}

/// The 64 constellation points, unit average energy.
pub fn qam64_constellation() -> Vec<Complex64> {
    let scale = QAM64_ENERGY.sqrt().recip();
    QAM64_LEVELS
        .iter()
        .flat_map(|&re| QAM64_LEVELS.iter().map(move |&im| Complex64::new(re, im) * scale))
        .collect()
}

/// `count` i.i.d. uniform 64-QAM symbols with unit average energy.
pub fn qam64_symbols<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Vec<Complex64> {
    let scale = QAM64_ENERGY.sqrt().recip();
    (0..count)
        .map(|_| {
            let re = QAM64_LEVELS[rng.random_range(0..8)];
            let im = QAM64_LEVELS[rng.random_range(0..8)];
            Complex64::new(re, im) * scale
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub pilot: Vec<Complex64>,
    pub data: Vec<Complex64>,
    pub samples: Vec<Complex64>,
}

/// One frame: the fixed Zadoff-Chu pilot followed by fresh random data.
pub fn build_frame<R: Rng + ?Sized>(cfg: &FrameConfig, rng: &mut R) -> Result<Frame> {
    cfg.validate()?;
    let pilot = zadoff_chu(cfg.pilot_len, cfg.zc_root)?;
    Ok(frame_with_pilot(&pilot, cfg.data_len, rng))
}

/// Like [`build_frame`] but reuses an already generated pilot.
pub fn frame_with_pilot<R: Rng + ?Sized>(pilot: &[Complex64], data_len: usize, rng: &mut R) -> Frame {
    let data = qam64_symbols(data_len, rng);
    let mut samples = Vec::with_capacity(pilot.len() + data_len);
    samples.extend_from_slice(pilot);
    samples.extend_from_slice(&data);
    Frame {
        pilot: pilot.to_vec(),
        data,
        samples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zc_even_length_values() {
        let p = zadoff_chu(8, 1).unwrap();
        assert!((p[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((p[2] - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        assert!((p[4] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn zc_is_constant_modulus() {
        for (len, root) in [(8, 1), (8, 3), (63, 25), (139, 7), (2, 1)] {
            let p = zadoff_chu(len, root).unwrap();
            let worst = p.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max);
            assert!(worst < 1e-15, "len {len} root {root}: {worst}");
        }
    }

    #[test]
    fn zc_periodic_autocorrelation_is_ideal() {
        for (len, root) in [(8, 1), (8, 5), (13, 4)] {
            let p = zadoff_chu(len, root).unwrap();
            for lag in 1..len {
                let acc: Complex64 = (0..len).map(|n| p[(n + lag) % len] * p[n].conj()).sum();
                assert!(acc.norm() < 1e-10, "len {len} lag {lag}: {}", acc.norm());
            }
        }
    }

    #[test]
    fn zc_rejects_shared_factor() {
        assert!(matches!(
            zadoff_chu(8, 2),
            Err(IqiError::InvalidRoot { root: 2, len: 8 })
        ));
        assert!(matches!(zadoff_chu(8, 0), Err(IqiError::InvalidRoot { .. })));
    }

    #[test]
    fn constellation_has_unit_energy() {
        let pts = qam64_constellation();
        assert_eq!(pts.len(), 64);
        let mean: f64 = pts.iter().map(|z| z.norm_sqr()).sum::<f64>() / 64.0;
        assert!((mean - 1.0).abs() < 1e-14);
    }

    #[test]
    fn qam_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(qam64_symbols(0, &mut rng).is_empty());
        let syms = qam64_symbols(100_000, &mut rng);
        let power = syms.iter().map(|z| z.norm_sqr()).sum::<f64>() / syms.len() as f64;
        assert!((power - 1.0).abs() < 0.02, "{power}");
        let pts = qam64_constellation();
        assert!(syms
            .iter()
            .take(500)
            .all(|s| pts.iter().any(|p| (p - s).norm() < 1e-12)));
    }

    #[test]
    fn frames_share_pilot_and_replay() {
        let cfg = FrameConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = build_frame(&cfg, &mut rng).unwrap();
        let b = build_frame(&cfg, &mut rng).unwrap();
        assert_eq!(a.samples.len(), 56);
        assert_eq!(a.pilot, b.pilot);
        assert_ne!(a.data, b.data);
        let pilot_power = a.pilot.iter().map(|z| z.norm_sqr()).sum::<f64>() / 8.0;
        assert!((pilot_power - 1.0).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let again = build_frame(&cfg, &mut rng).unwrap();
        assert_eq!(a, again);
    }

    #[test]
    fn frame_config_validation() {
        let mut cfg = FrameConfig {
            zc_root: 4,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        cfg.zc_root = 1;
        cfg.pilot_len = 1;
        assert!(cfg.validate().is_err());
    }
}
