//! Speech presence probability: the Gaussian model-based estimator and the
//! two estimators derived from speech/noise ratio masks.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::stft::SpectrogramGrid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SppModelParams {
    /// Prior ratio `P(H₀)/P(H₁)`.
    pub prior_ratio: f64,
    /// Typical linear a-priori SNR when speech is present.
    pub xi_h1: f64,
}

impl Default for SppModelParams {
    fn default() -> Self {
        Self {
            prior_ratio: 1.0,
            xi_h1: 10f64.powf(15.0 / 10.0),
        }
    }
}

impl SppModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.prior_ratio > 0.0) || !self.prior_ratio.is_finite() {
            return Err(Error::InvalidParameter(format!("prior_ratio = {}", self.prior_ratio)));
        }
        if !(self.xi_h1 > 0.0) || !self.xi_h1.is_finite() {
            return Err(Error::InvalidParameter(format!("xi_h1 = {}", self.xi_h1)));
        }
        Ok(())
    }
}

/// Posterior probability of speech presence for one TF bin given its noisy
/// power and the previous frame's noise PSD estimate.
pub fn spp_model(noisy_power: f64, noise_psd_prev: f64, params: &SppModelParams) -> Result<f64> {
    if !(noise_psd_prev > 0.0) {
        return Err(Error::InvalidNoisePsd(noise_psd_prev));
    }
    let xi = params.xi_h1;
    let exponent = -(noisy_power / noise_psd_prev) * xi / (1.0 + xi);
    Ok(1.0 / (1.0 + params.prior_ratio * (1.0 + xi) * exponent.exp()))
}

/// Real-valued `K×L` grid, frame-major, every entry in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskGrid {
    num_bins: usize,
    num_frames: usize,
    speech: Vec<f64>,
    noise: Vec<f64>,
}

impl MaskGrid {
    /// Planes are frame-major: all bins of frame 0, then frame 1, ...
    pub fn new(num_bins: usize, num_frames: usize, speech: Vec<f64>, noise: Vec<f64>) -> Result<Self> {
        let len = num_bins * num_frames;
        if speech.len() != len || noise.len() != len {
            return Err(Error::DimensionMismatch(format!(
                "mask planes of {} and {} values for a {num_bins}x{num_frames} grid",
                speech.len(),
                noise.len()
            )));
        }
        for (i, &v) in speech.iter().chain(&noise).enumerate() {
            if !(0.0..=1.0).contains(&v) {
                let i = i % len;
                return Err(Error::MaskOutOfRange {
                    value: v as f32,
                    bin: i % num_bins,
                    frame: i / num_bins,
                });
            }
        }
        Ok(Self {
            num_bins,
            num_frames,
            speech,
            noise,
        })
    }

    pub fn num_bins(&self) -> usize {
        self.num_bins
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn speech(&self, bin: usize, frame: usize) -> f64 {
        self.speech[frame * self.num_bins + bin]
    }

    pub fn noise(&self, bin: usize, frame: usize) -> f64 {
        self.noise[frame * self.num_bins + bin]
    }

    pub fn speech_plane(&self) -> &[f64] {
        &self.speech
    }

    pub fn noise_plane(&self) -> &[f64] {
        &self.noise
    }
}

/// Ideal ratio masks of a known speech/noise decomposition. Bins where both
/// components are zero get `1/√2` in each mask.
pub fn ideal_masks(clean: &SpectrogramGrid, noise: &SpectrogramGrid) -> Result<MaskGrid> {
    if clean.num_bins() != noise.num_bins() || clean.num_frames() != noise.num_frames() {
        return Err(Error::DimensionMismatch(format!(
            "clean grid {}x{}, noise grid {}x{}",
            clean.num_bins(),
            clean.num_frames(),
            noise.num_bins(),
            noise.num_frames()
        )));
    }
    let (k, l) = (clean.num_bins(), clean.num_frames());
    let mut speech = Vec::with_capacity(k * l);
    let mut noise_mask = Vec::with_capacity(k * l);
    for frame in 0..l {
        for (x, n) in clean.frame(frame).iter().zip(noise.frame(frame)) {
            let (px, pn) = (x.norm_sqr(), n.norm_sqr());
            let total = px + pn;
            if total > 0.0 {
                speech.push((px / total).sqrt());
                noise_mask.push((pn / total).sqrt());
            } else {
                speech.push(FRAC_1_SQRT_2);
                noise_mask.push(FRAC_1_SQRT_2);
            }
        }
    }
    MaskGrid::new(k, l, speech, noise_mask)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskSppVariant {
    /// The speech mask alone.
    N1,
    /// The speech mask normalized by the joint mask magnitude.
    N2,
}

/// Per-bin SPP from a pair of mask values.
pub fn mask_spp(speech: f64, noise: f64, variant: MaskSppVariant) -> f64 {
    let spp = match variant {
        MaskSppVariant::N1 => speech,
        MaskSppVariant::N2 => {
            let norm = speech.hypot(noise);
            if norm > 0.0 {
                speech / norm
            } else {
                0.0
            }
        }
    };
    spp.clamp(0.0, 1.0)
}

/// SPP grid derived from estimated masks. The result carries the SPP in the
/// speech plane and its complement in the noise plane.
pub fn spp_from_masks(masks: &MaskGrid, variant: MaskSppVariant) -> MaskGrid {
    let speech: Vec<f64> = masks
        .speech
        .iter()
        .zip(&masks.noise)
        .map(|(&s, &n)| mask_spp(s, n, variant))
        .collect();
    let noise = speech.iter().map(|p| 1.0 - p).collect();
    MaskGrid {
        num_bins: masks.num_bins,
        num_frames: masks.num_frames,
        speech,
        noise,
    }
}
