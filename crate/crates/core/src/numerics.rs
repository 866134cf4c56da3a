//! Complex vector and matrix primitives needed by the subspace estimator.
//!
//! Only three things are required: the Hermitian inner product, the rank-one
//! complement projector of a pilot, and a row-wise Gram-Schmidt that turns
//! that projector into an orthonormal `(L-1) x L` basis.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{IqiError, Result};

/// Residual rows below this fraction of the projector's largest entry are
/// treated as linearly dependent and skipped.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// `a^H b`, conjugating the first argument.
pub fn hermitian_dot(a: &[Complex64], b: &[Complex64]) -> Result<Complex64> {
    if a.len() != b.len() {
        return Err(IqiError::LengthMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(dot_unchecked(a, b))
}

#[inline]
pub(crate) fn dot_unchecked(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[inline]
pub(crate) fn energy(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(IqiError::InvalidConfig(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(IqiError::LengthMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for k in 0..n {
            m[(k, k)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(c, r)] = self[(r, c)].conj();
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != rhs.rows {
            return Err(IqiError::LengthMismatch {
                expected: self.cols,
                actual: rhs.rows,
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..rhs.cols {
                    out[(r, c)] += a * rhs[(k, c)];
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product `M x`.
    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.cols {
            return Err(IqiError::LengthMismatch {
                expected: self.cols,
                actual: x.len(),
            });
        }
        Ok(self.apply_unchecked(x))
    }

    fn apply_unchecked(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

/// `I - p p^H / (p^H p)`: the projector onto the orthogonal complement of `p`.
pub fn null_projector(pilot: &[Complex64]) -> Result<ComplexMatrix> {
    let len = pilot.len();
    if len < 2 {
        return Err(IqiError::InvalidPilot("pilot segment needs at least 2 samples"));
    }
    if pilot.iter().any(|z| !z.is_finite()) {
        return Err(IqiError::InvalidPilot("pilot contains non-finite samples"));
    }
    let power = energy(pilot);
    if power == 0.0 {
        return Err(IqiError::InvalidPilot("pilot has zero norm"));
    }
    let mut out = ComplexMatrix::identity(len);
    for r in 0..len {
        for c in 0..len {
            out[(r, c)] -= pilot[r] * pilot[c].conj() / power;
        }
    }
    Ok(out)
}

/// Orthonormal basis `Q` of the row space of a pilot null projector.
///
/// Rows satisfy `Q Q^H = I` and `Q p = 0` for the pilot `p` the projector was
/// built from. Multiplying a white vector by `Q` keeps it white.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionBasis {
    q: ComplexMatrix,
    pilot_len: usize,
}

impl ProjectionBasis {
    /// Builds the basis straight from a pilot segment.
    pub fn from_pilot(pilot: &[Complex64]) -> Result<Self> {
        orthonormalize(&null_projector(pilot)?)
    }

    pub fn q(&self) -> &ComplexMatrix {
        &self.q
    }

    pub fn pilot_len(&self) -> usize {
        self.pilot_len
    }

    /// Number of projected outputs per segment, `L - 1`.
    pub fn dim(&self) -> usize {
        self.q.rows()
    }

    /// `Q x`.
    pub fn project(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        self.q.apply(x)
    }

    /// Returns a basis with the same row space, `U Q`. Used to check that the
    /// estimators do not depend on which orthonormal basis was picked.
    pub fn rotated(&self, unitary: &ComplexMatrix) -> Result<Self> {
        Ok(Self {
            q: unitary.matmul(&self.q)?,
            pilot_len: self.pilot_len,
        })
    }
}

/// Row-wise modified Gram-Schmidt over a rank-`(L-1)` projector.
///
/// Rows are visited in natural order; a row whose residual falls below
/// [`RANK_TOLERANCE`] times the largest entry is skipped. Each residual is
/// orthogonalized twice against the accepted rows so that nearly dependent
/// rows still come out orthonormal to working precision.
pub fn orthonormalize(qperp: &ComplexMatrix) -> Result<ProjectionBasis> {
    let len = qperp.cols();
    if len < 2 {
        return Err(IqiError::InvalidPilot("projector must be at least 2x2"));
    }
    let target = len - 1;
    let threshold = RANK_TOLERANCE * qperp.max_abs();

    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(target);
    for r in 0..qperp.rows() {
        if basis.len() == target {
            break;
        }
        let mut v = qperp.row(r).to_vec();
        for _ in 0..2 {
            for q in &basis {
                let c = dot_unchecked(q, &v);
                for (vm, qm) in v.iter_mut().zip(q) {
                    *vm -= c * qm;
                }
            }
        }
        let norm = energy(&v).sqrt();
        if norm < threshold || norm == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        basis.push(v);
    }

    if basis.len() < target {
        return Err(IqiError::RankDeficient {
            achieved: basis.len(),
            expected: target,
        });
    }
    let q = ComplexMatrix::new(target, len, basis.concat())?;
    Ok(ProjectionBasis { q, pilot_len: len })
}
