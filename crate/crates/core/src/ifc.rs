//! Interframe-correlation (IFC) vectors: the noisy IFC read off the noisy
//! correlation matrix, the analytic mean noise IFC of the STFT, the
//! decision-directed a-priori SNR and the resulting speech IFC estimate.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::covariance::HermitianMatrix;
use crate::error::{Error, Result};
use crate::stft::StftConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IfcRole {
    Noisy,
    NoiseMean,
    Speech,
}

/// Normalized correlation between the current frame and the `N−1`
/// preceding frames of one bin. Element 0 is the current frame.
#[derive(Debug, Clone, PartialEq)]
pub struct IfcVector {
    values: Vec<Complex64>,
    role: IfcRole,
}

impl IfcVector {
    pub fn new(values: Vec<Complex64>, role: IfcRole) -> Self {
        Self { values, role }
    }

    /// `[1, 0, …, 0]`.
    pub fn unit(len: usize, role: IfcRole) -> Self {
        let mut values = vec![Complex64::new(0.0, 0.0); len];
        values[0] = Complex64::new(1.0, 0.0);
        Self { values, role }
    }

    pub fn role(&self) -> IfcRole {
        self.role
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.values
    }
}

/// First column of `Φ_y` normalized by the noisy PSD `Φ_y(0,0)`.
pub fn noisy_ifc(phi_y: &HermitianMatrix) -> Result<IfcVector> {
    let psd = phi_y.get(0, 0).re;
    if !(psd > 0.0) {
        return Err(Error::ZeroNoisyPsd);
    }
    let mut values: Vec<Complex64> = phi_y.first_column().into_iter().map(|c| c / psd).collect();
    values[0] = Complex64::new(1.0, 0.0);
    Ok(IfcVector::new(values, IfcRole::Noisy))
}

/// Expected IFC of white noise seen through the analysis window:
/// element `n` is the normalized window overlap at lag `n·hop` rotated by
/// `e^{−j2πk·n·hop/frame_len}`, and vanishes once frames stop overlapping.
pub fn mean_noise_ifc(cfg: &StftConfig, bin: usize, taps: usize) -> IfcVector {
    let energy = cfg.window_overlap(0);
    let values = (0..taps)
        .map(|n| {
            if n == 0 {
                return Complex64::new(1.0, 0.0);
            }
            let lag = n * cfg.hop;
            if lag >= cfg.frame_len {
                return Complex64::new(0.0, 0.0);
            }
            let phase = -2.0 * PI * (bin * lag) as f64 / cfg.frame_len as f64;
            Complex64::from_polar(cfg.window_overlap(lag) / energy, phase)
        })
        .collect();
    IfcVector::new(values, IfcRole::NoiseMean)
}

/// Per-bin decision-directed a-priori SNR estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AprioriSnrState {
    pub lambda_dda: f64,
    /// Lower bound on the linear a-priori SNR.
    pub xi_floor: f64,
    /// `|X̂(l−1)|²`, written back after each enhanced frame.
    pub prev_speech_power: f64,
}

impl Default for AprioriSnrState {
    fn default() -> Self {
        Self {
            lambda_dda: 0.97,
            xi_floor: 10f64.powf(-1.5),
            prev_speech_power: 0.0,
        }
    }
}

impl AprioriSnrState {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_dda > 0.0 && self.lambda_dda <= 1.0) {
            return Err(Error::InvalidParameter(format!("lambda_dda = {}", self.lambda_dda)));
        }
        if !(self.xi_floor > 0.0) || !self.xi_floor.is_finite() {
            return Err(Error::InvalidParameter(format!("xi_floor = {}", self.xi_floor)));
        }
        Ok(())
    }

    /// `λ·|X̂(l−1)|²/φ̂_N(l−1) + (1−λ)·max(|Y(l)|²/φ̂_N(l) − 1, 0)`, floored.
    /// Both PSDs must already be floored to positive values.
    pub fn update(&self, noisy_power: f64, noise_psd: f64, noise_psd_prev: f64) -> f64 {
        let recursive = self.prev_speech_power / noise_psd_prev;
        let ml = (noisy_power / noise_psd - 1.0).max(0.0);
        let xi = self.lambda_dda * recursive + (1.0 - self.lambda_dda) * ml;
        if xi.is_nan() {
            self.xi_floor
        } else {
            xi.max(self.xi_floor)
        }
    }
}

pub fn update_apriori_snr(state: &AprioriSnrState, noisy_power: f64, noise_psd: f64, noise_psd_prev: f64) -> f64 {
    state.update(noisy_power, noise_psd, noise_psd_prev)
}

/// Speech IFC `((1+ξ)/ξ)·γ_y − (1/ξ)·μ_γn`, evaluated as
/// `γ_y + (γ_y − μ_γn)/ξ` so that the leading element stays exactly 1.
pub fn speech_ifc(gamma_y: &IfcVector, gamma_n_mean: &IfcVector, xi: f64) -> Result<IfcVector> {
    if gamma_y.len() != gamma_n_mean.len() {
        return Err(Error::DimensionMismatch(format!(
            "noisy IFC has {} taps, noise IFC {}",
            gamma_y.len(),
            gamma_n_mean.len()
        )));
    }
    if !(xi > 0.0) {
        return Err(Error::InvalidParameter(format!("a-priori SNR {xi}")));
    }
    let values = gamma_y
        .as_slice()
        .iter()
        .zip(gamma_n_mean.as_slice())
        .map(|(&y, &n)| y + (y - n) / xi)
        .collect();
    Ok(IfcVector::new(values, IfcRole::Speech))
}
