//! Multi-frame MVDR and MPDR filters.
//!
//! Both filters solve `min hᴴΦh  s.t.  hᴴγ_x = 1` and differ only in the
//! correlation matrix: the (regularized) noise matrix for MFMVDR and the
//! (regularized) noisy matrix for MFMPDR.

use num_complex::Complex64;

use crate::covariance::{HermitianMatrix, MultiFrameVector};
use crate::error::{Error, Result};
use crate::ifc::IfcVector;
use crate::linalg::hermitian_solve;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FilterKind {
    Mfmvdr,
    Mfmpdr,
}

impl FilterKind {
    pub fn name(self) -> &'static str {
        match self {
            FilterKind::Mfmvdr => "mfmvdr",
            FilterKind::Mfmpdr => "mfmpdr",
        }
    }
}

/// Filter coefficients `[H_0, …, H_{N−1}]`; the estimate is `hᴴy`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterVector {
    values: Vec<Complex64>,
}

impl FilterVector {
    pub fn new(values: Vec<Complex64>) -> Self {
        Self { values }
    }

    /// `e₁`: passes the current frame through unchanged.
    pub fn passthrough(len: usize) -> Self {
        let mut values = vec![Complex64::new(0.0, 0.0); len];
        values[0] = Complex64::new(1.0, 0.0);
        Self { values }
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `|hᴴγ − 1|`.
    pub fn distortion_error(&self, gamma: &IfcVector) -> f64 {
        (conj_dot(&self.values, gamma.as_slice()) - 1.0).norm()
    }

    /// Output power `hᴴΦh` for a given correlation matrix.
    pub fn output_power(&self, phi: &HermitianMatrix) -> f64 {
        let n = self.values.len();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let row: Complex64 = (0..n).map(|j| phi.get(i, j) * self.values[j]).sum();
            acc += self.values[i].conj() * row;
        }
        acc.re
    }
}

/// `Σ conj(a_i)·b_i`.
fn conj_dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `Φ⁻¹γ / (γᴴΦ⁻¹γ)` via a Hermitian solve.
fn distortionless(phi: &HermitianMatrix, gamma: &IfcVector) -> Result<FilterVector> {
    if phi.dim() != gamma.len() {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {0}x{0}, IFC vector has {1} taps",
            phi.dim(),
            gamma.len()
        )));
    }
    let z = hermitian_solve(phi, gamma.as_slice()).ok_or(Error::SingularMatrix)?;
    let denom = conj_dot(gamma.as_slice(), &z);
    if !(denom.norm() > 0.0) || !denom.re.is_finite() || !denom.im.is_finite() {
        return Err(Error::SingularMatrix);
    }
    let values: Vec<Complex64> = z.into_iter().map(|v| v / denom).collect();
    if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::SingularMatrix);
    }
    Ok(FilterVector::new(values))
}

/// MFMVDR filter from the regularized noise correlation matrix.
pub fn mfmvdr(phi_n_reg: &HermitianMatrix, gamma_x: &IfcVector) -> Result<FilterVector> {
    distortionless(phi_n_reg, gamma_x)
}

/// MFMPDR filter from the regularized noisy correlation matrix.
pub fn mfmpdr(phi_y_reg: &HermitianMatrix, gamma_x: &IfcVector) -> Result<FilterVector> {
    distortionless(phi_y_reg, gamma_x)
}

/// Speech estimate `hᴴy`.
pub fn apply(h: &FilterVector, y: &MultiFrameVector) -> Result<Complex64> {
    if h.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "filter has {} taps, input {}",
            h.len(),
            y.len()
        )));
    }
    Ok(conj_dot(h.as_slice(), y.as_slice()))
}
