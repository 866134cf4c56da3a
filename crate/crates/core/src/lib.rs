//! Data-aided I/Q-imbalance estimation and compensation for low-IF receivers.
//!
//! The receiver observes two digitized branches after the IF down-converter:
//!
//! ```text
//! d(n) = mu * s(n) + nu * conj(i(n))
//! g(n) = mu * i(n) + nu * conj(s(n))
//! ```
//!
//! where `s` is the desired signal and `i` is a foreign blocker sitting on the
//! image frequency. The training sequence of the desired signal is known, so
//! projecting each training segment onto the orthogonal complement of the
//! pilot removes the desired signal (and its unknown flat-fading gain). What
//! remains is a noise/interference mixture whose cross-correlation yields the
//! imbalance coefficients in closed form.
//!
//! Crate layout:
//!
//! - [`numerics`]: Hermitian products, pilot null-space projector, row Gram-Schmidt.
//! - [`waveforms`]: Zadoff-Chu pilots, 64-QAM data and the pilot+data frame.
//! - [`channel`]: sum-of-sinusoids Rayleigh fading and complex AWGN.
//! - [`impairment`]: imbalance coefficients, baseband branch mixing, IF-chain reference.
//! - [`estimation`]: projection, accumulation, solvers, blind baseline, compensation.
//! - [`metrics`]: output SIR, NMSE and empirical CDFs.
//! - [`harness`]: Monte Carlo sweeps, seeding, CSV/JSON export.
//! - [`parallel`]: trial-level data parallelism with a sequential fallback.

pub mod channel;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod impairment;
pub mod metrics;
pub mod numerics;
pub mod parallel;
pub mod waveforms;

pub use error::{IqiError, Result};
pub use num_complex::Complex64;
