//! Recursive estimation of the noisy and noise correlation matrices of one
//! frequency bin, with speech-presence-dependent smoothing of the noise
//! estimate and trace-relative diagonal loading.

use std::collections::VecDeque;

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `N` consecutive STFT coefficients of one bin, newest first:
/// `[Y(l), Y(l-1), …, Y(l-N+1)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiFrameVector {
    values: Vec<Complex64>,
}

impl MultiFrameVector {
    pub fn new(values: Vec<Complex64>) -> Self {
        Self { values }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            values: vec![ZERO; len],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The current-frame coefficient `Y(l)`.
    pub fn current(&self) -> Complex64 {
        self.values[0]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.values
    }

    /// Shifts in a new frame, dropping the oldest.
    pub fn push_front(&mut self, value: Complex64) {
        self.values.rotate_right(1);
        self.values[0] = value;
    }
}

/// Rolling history used by the per-bin tracker to build multi-frame
/// vectors without reallocating.
#[derive(Debug, Clone)]
pub(crate) struct FrameHistory {
    buf: VecDeque<Complex64>,
}

impl FrameHistory {
    pub(crate) fn new(len: usize) -> Self {
        Self {
            buf: std::iter::repeat_n(ZERO, len).collect(),
        }
    }

    pub(crate) fn push(&mut self, value: Complex64) {
        self.buf.pop_back();
        self.buf.push_front(value);
    }

    pub(crate) fn to_vector(&self) -> MultiFrameVector {
        MultiFrameVector::new(self.buf.iter().copied().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixRole {
    Noisy,
    Noise,
    Undesired,
}

/// Dense `N×N` Hermitian matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    entries: Vec<Complex64>,
    role: MatrixRole,
}

impl HermitianMatrix {
    pub fn zeros(dim: usize, role: MatrixRole) -> Self {
        Self {
            dim,
            entries: vec![ZERO; dim * dim],
            role,
        }
    }

    pub fn scaled_identity(dim: usize, scale: f64, role: MatrixRole) -> Self {
        let mut m = Self::zeros(dim, role);
        for i in 0..dim {
            m.entries[i * dim + i] = Complex64::new(scale, 0.0);
        }
        m
    }

    /// Wraps row-major entries, checking Hermitian symmetry to `tol`.
    pub fn from_entries(dim: usize, entries: Vec<Complex64>, role: MatrixRole, tol: f64) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {dim}x{dim} matrix",
                entries.len()
            )));
        }
        let m = Self { dim, entries, role };
        let asym = m.asymmetry();
        if asym > tol {
            return Err(Error::InvalidParameter(format!(
                "matrix is not Hermitian (deviation {asym:e})"
            )));
        }
        Ok(m)
    }

    /// Outer product `y·yᴴ`.
    pub fn outer(y: &[Complex64], role: MatrixRole) -> Self {
        let mut m = Self::zeros(y.len(), role);
        m.blend_outer(0.0, y);
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn role(&self) -> MatrixRole {
        self.role
    }

    pub fn with_role(mut self, role: MatrixRole) -> Self {
        self.role = role;
        self
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.entries[i * self.dim + i].re).sum()
    }

    /// First column, `Φ·e`.
    pub fn first_column(&self) -> Vec<Complex64> {
        (0..self.dim).map(|i| self.entries[i * self.dim]).collect()
    }

    /// `max |m(i,j) − conj(m(j,i))|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let d = (self.entries[i * n + j] - self.entries[j * n + i].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn scale(&mut self, factor: f64) {
        for e in &mut self.entries {
            *e *= factor;
        }
    }

    /// `self ← λ·self + (1−λ)·y·yᴴ`. The upper triangle is computed and
    /// mirrored, so the result is exactly Hermitian.
    pub(crate) fn blend_outer(&mut self, lambda: f64, y: &[Complex64]) {
        let n = self.dim;
        debug_assert_eq!(y.len(), n);
        let w = 1.0 - lambda;
        for (i, &yi) in y.iter().enumerate() {
            for (j, yj) in y.iter().enumerate().skip(i) {
                let v = lambda * self.entries[i * n + j] + w * (yi * yj.conj());
                self.entries[i * n + j] = v;
                self.entries[j * n + i] = v.conj();
            }
            self.entries[i * n + i].im = 0.0;
        }
    }

    pub(crate) fn add_to_diagonal(&mut self, value: f64) {
        for i in 0..self.dim {
            self.entries[i * self.dim + i].re += value;
        }
    }
}

/// Smoothing constants for the recursive estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingParams {
    /// Noise smoothing floor `α_n`, used when speech is surely absent.
    pub alpha_n: f64,
    /// Noisy-matrix smoothing constant `λ_y`.
    pub lambda_y: f64,
    /// Diagonal loading relative to `trace/N`.
    pub delta: f64,
}

impl Default for SmoothingParams {
    fn default() -> Self {
        Self {
            alpha_n: 0.98,
            lambda_y: 0.92,
            delta: 0.04,
        }
    }
}

impl SmoothingParams {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !open_unit(self.alpha_n) {
            return Err(Error::InvalidParameter(format!("alpha_n = {}", self.alpha_n)));
        }
        if !open_unit(self.lambda_y) {
            return Err(Error::InvalidParameter(format!("lambda_y = {}", self.lambda_y)));
        }
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(Error::InvalidParameter(format!("delta = {}", self.delta)));
        }
        Ok(())
    }

    /// Noise smoothing factor `λ_n = α_n + (1 − α_n)·SPP`.
    pub fn noise_smoothing(&self, spp: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&spp) {
            return Err(Error::InvalidProbability(spp));
        }
        Ok(self.alpha_n + (1.0 - self.alpha_n) * spp)
    }
}

fn check_dims(m: &HermitianMatrix, y: &MultiFrameVector) -> Result<()> {
    if m.dim() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {0}x{0}, vector has {1} taps",
            m.dim(),
            y.len()
        )));
    }
    Ok(())
}

pub(crate) fn update_noise_in_place(
    m: &mut HermitianMatrix,
    y: &[Complex64],
    spp: f64,
    params: &SmoothingParams,
) -> Result<()> {
    let lambda = params.noise_smoothing(spp)?;
    // λ_n = 1 freezes the estimate.
    if lambda < 1.0 {
        m.blend_outer(lambda, y);
    }
    Ok(())
}

/// SPP-controlled noise update: `λ_n·Φ̂_n + (1−λ_n)·y·yᴴ`.
pub fn update_noise_cov(
    prev: &HermitianMatrix,
    y: &MultiFrameVector,
    spp: f64,
    params: &SmoothingParams,
) -> Result<HermitianMatrix> {
    check_dims(prev, y)?;
    let mut next = prev.clone();
    update_noise_in_place(&mut next, y.as_slice(), spp, params)?;
    Ok(next)
}

/// Fixed-constant noisy update: `λ_y·Φ̂_y + (1−λ_y)·y·yᴴ`.
pub fn update_noisy_cov(
    prev: &HermitianMatrix,
    y: &MultiFrameVector,
    params: &SmoothingParams,
) -> Result<HermitianMatrix> {
    check_dims(prev, y)?;
    let mut next = prev.clone();
    next.blend_outer(params.lambda_y, y.as_slice());
    Ok(next)
}

/// Diagonal loading `m + δ·(trace(m)/N)·I`.
pub fn regularize(m: &HermitianMatrix, delta: f64) -> Result<HermitianMatrix> {
    let trace = m.trace();
    if trace < 0.0 {
        return Err(Error::NotPsd(trace));
    }
    let mut out = m.clone();
    out.add_to_diagonal(delta * trace / m.dim() as f64);
    Ok(out)
}
