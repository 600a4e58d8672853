//! End-to-end enhancement: framing, the per-bin estimation and filtering
//! state machine, and resynthesis. Also the mixing and oracle-mask helpers
//! used to build evaluation material.
//!
//! Framing: the signal is padded with `frame_len − hop` zeros in front and
//! enough zeros at the end that every input sample is covered by
//! `frame_len / hop` frames. A signal of `S` samples therefore yields
//! `ceil(S / hop) + frame_len / hop − 1` frames; external mask estimators
//! must produce grids with this frame count.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::audio::Utterance;
use crate::covariance::{
    regularize, update_noise_in_place, FrameHistory, HermitianMatrix, MatrixRole, SmoothingParams,
};
use crate::error::{Error, Result};
use crate::ifc::{mean_noise_ifc, noisy_ifc, speech_ifc, AprioriSnrState, IfcRole, IfcVector};
use crate::mffilter::{apply, mfmpdr, mfmvdr, FilterKind, FilterVector};
use crate::spp::{ideal_masks, mask_spp, spp_from_masks, spp_model, MaskGrid, MaskSppVariant, SppModelParams};
use crate::stft::{analyze, synthesize, SpectrogramGrid, StftConfig};

/// Where the per-bin speech presence probability comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SppSource {
    /// Gaussian model-based estimator driven by the tracked noise PSD.
    Model,
    /// Speech mask of a supplied mask grid.
    MaskN1,
    /// Speech mask normalized by the joint mask magnitude.
    MaskN2,
    /// The supplied grid's speech plane already holds the SPP.
    Oracle,
}

impl SppSource {
    pub fn needs_masks(self) -> bool {
        self != SppSource::Model
    }

    pub fn name(self) -> &'static str {
        match self {
            SppSource::Model => "model",
            SppSource::MaskN1 => "mask-n1",
            SppSource::MaskN2 => "mask-n2",
            SppSource::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnhanceConfig {
    pub filter: FilterKind,
    pub spp_source: SppSource,
    /// Filter length `N` in frames.
    pub taps: usize,
    pub stft: StftConfig,
    pub smoothing: SmoothingParams,
    pub spp_model: SppModelParams,
    /// Parameters of the a-priori SNR estimator; `prev_speech_power` is the
    /// initial value for every bin.
    pub dda: AprioriSnrState,
}

impl Default for EnhanceConfig {
    fn default() -> Self {
        Self {
            filter: FilterKind::Mfmvdr,
            spp_source: SppSource::Model,
            taps: 18,
            stft: StftConfig::default(),
            smoothing: SmoothingParams::default(),
            spp_model: SppModelParams::default(),
            dda: AprioriSnrState::default(),
        }
    }
}

impl EnhanceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.taps == 0 {
            return Err(Error::InvalidParameter("filter length must be >= 1".into()));
        }
        self.stft.cola_gain()?;
        self.smoothing.validate()?;
        self.spp_model.validate()?;
        self.dda.validate()
    }
}

/// Frame count of the padded analysis for a signal of `len` samples.
pub fn frame_count(len: usize, stft: &StftConfig) -> usize {
    len.div_ceil(stft.hop) + stft.frame_len / stft.hop - 1
}

fn front_pad(stft: &StftConfig) -> usize {
    stft.frame_len - stft.hop
}

/// STFT of the zero-padded signal, as used by every pipeline stage.
pub fn analysis_grid(samples: &[f64], stft: &StftConfig) -> Result<SpectrogramGrid> {
    if samples.is_empty() {
        return Err(Error::InputTooShort {
            len: 0,
            frame_len: stft.frame_len,
        });
    }
    let front = front_pad(stft);
    let frames = frame_count(samples.len(), stft);
    let total = (frames - 1) * stft.hop + stft.frame_len;
    let mut padded = vec![0.0; total];
    padded[front..front + samples.len()].copy_from_slice(samples);
    analyze(&padded, stft)
}

/// Inverse of [`analysis_grid`]: resynthesizes and strips the padding.
pub fn synthesis_trim(grid: &SpectrogramGrid, len: usize) -> Result<Vec<f64>> {
    let out = synthesize(grid)?;
    let front = front_pad(grid.config());
    Ok(out[front..front + len].to_vec())
}

/// Diagnostics collected during [`enhance_with_report`].
#[derive(Debug, Clone)]
pub struct EnhanceReport {
    /// SPP actually used, in the speech plane (noise plane: its complement).
    pub spp: MaskGrid,
    /// Noise PSD estimate `φ̂_N(k,l)`, frame-major.
    pub noise_psd: Vec<f64>,
    /// Largest `|hᴴγ̂_x − 1|` over all computed filters.
    pub max_distortion_error: f64,
    /// Filters computed by a successful solve.
    pub filters_computed: usize,
    /// TF bins that fell back to the passthrough filter.
    pub fallback_count: usize,
}

type Solver = fn(&HermitianMatrix, &IfcVector) -> Result<FilterVector>;

struct StepOutput {
    estimate: Complex64,
    spp: f64,
    noise_psd: f64,
    distortion_error: f64,
    fallback: bool,
}

/// Estimation and filtering state of a single frequency bin.
struct BinTracker<'a> {
    cfg: &'a EnhanceConfig,
    history: FrameHistory,
    phi_n: HermitianMatrix,
    phi_y: HermitianMatrix,
    dda: AprioriSnrState,
    noise_psd_prev: f64,
    psd_floor: f64,
    noise_ifc: IfcVector,
}

impl<'a> BinTracker<'a> {
    fn new(cfg: &'a EnhanceConfig, bin: usize, initial_power: f64, psd_floor: f64) -> Self {
        let n = cfg.taps;
        let p0 = initial_power.max(psd_floor);
        Self {
            cfg,
            history: FrameHistory::new(n),
            phi_n: HermitianMatrix::scaled_identity(n, p0, MatrixRole::Noise),
            phi_y: HermitianMatrix::scaled_identity(n, p0, MatrixRole::Noisy),
            dda: cfg.dda,
            noise_psd_prev: p0,
            psd_floor,
            noise_ifc: mean_noise_ifc(&cfg.stft, bin, n),
        }
    }

    fn step(&mut self, current: Complex64, external_spp: Option<f64>) -> Result<StepOutput> {
        let cfg = self.cfg;
        self.history.push(current);
        let y = self.history.to_vector();
        let noisy_power = current.norm_sqr();

        let spp = match external_spp {
            Some(p) => p,
            None => spp_model(noisy_power, self.noise_psd_prev, &cfg.spp_model)?,
        };
        update_noise_in_place(&mut self.phi_n, y.as_slice(), spp, &cfg.smoothing)?;
        self.phi_y.blend_outer(cfg.smoothing.lambda_y, y.as_slice());

        let noise_psd = self.phi_n.get(0, 0).re.max(self.psd_floor);
        let xi = self.dda.update(noisy_power, noise_psd, self.noise_psd_prev);

        let gamma_y = noisy_ifc(&self.phi_y).unwrap_or_else(|_| IfcVector::unit(cfg.taps, IfcRole::Noisy));
        let gamma_x = speech_ifc(&gamma_y, &self.noise_ifc, xi)?;

        let (phi, solve): (&HermitianMatrix, Solver) = match cfg.filter {
            FilterKind::Mfmvdr => (&self.phi_n, mfmvdr),
            FilterKind::Mfmpdr => (&self.phi_y, mfmpdr),
        };
        let loaded = regularize(phi, cfg.smoothing.delta)?;
        let (h, fallback) = match solve(&loaded, &gamma_x) {
            Ok(h) => (h, false),
            Err(Error::SingularMatrix) => (FilterVector::passthrough(cfg.taps), true),
            Err(e) => return Err(e),
        };
        let distortion_error = if fallback { 0.0 } else { h.distortion_error(&gamma_x) };
        let estimate = apply(&h, &y)?;

        self.dda.prev_speech_power = estimate.norm_sqr();
        self.noise_psd_prev = noise_psd;
        Ok(StepOutput {
            estimate,
            spp,
            noise_psd,
            distortion_error,
            fallback,
        })
    }
}

fn check_masks(cfg: &EnhanceConfig, grid: &SpectrogramGrid, masks: Option<&MaskGrid>) -> Result<()> {
    match (cfg.spp_source.needs_masks(), masks) {
        (true, None) => Err(Error::InvalidParameter(format!(
            "SPP source `{}` needs a mask grid",
            cfg.spp_source.name()
        ))),
        (false, Some(_)) => Err(Error::InvalidParameter(
            "mask grid supplied but SPP source is `model`".into(),
        )),
        (true, Some(m)) if m.num_bins() != grid.num_bins() || m.num_frames() != grid.num_frames() => {
            Err(Error::DimensionMismatch(format!(
                "mask grid is {}x{}, audio analysis is {}x{}",
                m.num_bins(),
                m.num_frames(),
                grid.num_bins(),
                grid.num_frames()
            )))
        }
        _ => Ok(()),
    }
}

/// Runs the estimation and filtering recursion over a noisy spectrogram.
pub fn enhance_grid(
    noisy: &SpectrogramGrid,
    cfg: &EnhanceConfig,
    masks: Option<&MaskGrid>,
) -> Result<(SpectrogramGrid, EnhanceReport)> {
    cfg.validate()?;
    if noisy.config() != &cfg.stft {
        return Err(Error::InvalidParameter(
            "spectrogram framing differs from config".into(),
        ));
    }
    check_masks(cfg, noisy, masks)?;

    let (num_bins, num_frames) = (noisy.num_bins(), noisy.num_frames());
    let global_power = (0..num_frames)
        .flat_map(|l| noisy.frame(l).iter().map(|c| c.norm_sqr()))
        .sum::<f64>()
        / (num_bins * num_frames).max(1) as f64;
    let psd_floor = if global_power > 0.0 {
        1e-12 * global_power
    } else {
        f64::MIN_POSITIVE
    };
    let init_frames = cfg.taps.min(num_frames).max(1);

    let per_bin: Vec<Vec<StepOutput>> = (0..num_bins)
        .into_par_iter()
        .map(|bin| -> Result<Vec<StepOutput>> {
            let series = noisy.bin_series(bin);
            let initial = series[..init_frames.min(series.len())]
                .iter()
                .map(|c| c.norm_sqr())
                .sum::<f64>()
                / init_frames as f64;
            let mut tracker = BinTracker::new(cfg, bin, initial, psd_floor);
            series
                .iter()
                .enumerate()
                .map(|(l, &y)| {
                    let external = masks.map(|m| match cfg.spp_source {
                        SppSource::MaskN1 => mask_spp(m.speech(bin, l), m.noise(bin, l), MaskSppVariant::N1),
                        SppSource::MaskN2 => mask_spp(m.speech(bin, l), m.noise(bin, l), MaskSppVariant::N2),
                        _ => m.speech(bin, l),
                    });
                    tracker.step(y, external)
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut enhanced = SpectrogramGrid::zeros(cfg.stft.clone(), num_frames);
    let mut spp = vec![0.0; num_bins * num_frames];
    let mut noise_psd = vec![0.0; num_bins * num_frames];
    let mut max_distortion_error = 0.0f64;
    let mut fallback_count = 0;
    for (bin, steps) in per_bin.iter().enumerate() {
        for (l, s) in steps.iter().enumerate() {
            enhanced.set(bin, l, s.estimate);
            spp[l * num_bins + bin] = s.spp;
            noise_psd[l * num_bins + bin] = s.noise_psd;
            max_distortion_error = max_distortion_error.max(s.distortion_error);
            fallback_count += s.fallback as usize;
        }
    }
    let complement = spp.iter().map(|p| 1.0 - p).collect();
    let report = EnhanceReport {
        spp: MaskGrid::new(num_bins, num_frames, spp, complement)?,
        noise_psd,
        max_distortion_error,
        filters_computed: num_bins * num_frames - fallback_count,
        fallback_count,
    };
    Ok((enhanced, report))
}

fn check_rate(utt: &Utterance, stft: &StftConfig) -> Result<()> {
    if utt.sample_rate != stft.sample_rate {
        return Err(Error::UnsupportedAudio(format!(
            "`{}` is sampled at {} Hz, engine runs at {} Hz (no resampling)",
            utt.id, utt.sample_rate, stft.sample_rate
        )));
    }
    Ok(())
}

/// Enhances `noisy`, returning the output signal and run diagnostics.
pub fn enhance_with_report(
    noisy: &Utterance,
    cfg: &EnhanceConfig,
    masks: Option<&MaskGrid>,
) -> Result<(Utterance, EnhanceReport)> {
    check_rate(noisy, &cfg.stft)?;
    let grid = analysis_grid(&noisy.samples, &cfg.stft)?;
    let (enhanced, report) = enhance_grid(&grid, cfg, masks)?;
    let samples = synthesis_trim(&enhanced, noisy.len())?;
    Ok((Utterance::new(noisy.id.clone(), samples, noisy.sample_rate), report))
}

pub fn enhance(noisy: &Utterance, cfg: &EnhanceConfig, masks: Option<&MaskGrid>) -> Result<Utterance> {
    enhance_with_report(noisy, cfg, masks).map(|(u, _)| u)
}

/// Adds a seeded random segment of `noise` to `clean`, scaled to the
/// requested broadband SNR. Returns the mixture and the exact noise added.
pub fn mix_at_snr(clean: &Utterance, noise: &Utterance, snr_db: f64, seed: u64) -> Result<(Utterance, Utterance)> {
    if clean.sample_rate != noise.sample_rate {
        return Err(Error::UnsupportedAudio(format!(
            "clean at {} Hz, noise at {} Hz",
            clean.sample_rate, noise.sample_rate
        )));
    }
    if noise.len() < clean.len() {
        return Err(Error::DimensionMismatch(format!(
            "noise has {} samples, clean {}",
            noise.len(),
            clean.len()
        )));
    }
    if !snr_db.is_finite() {
        return Err(Error::InvalidParameter(format!("snr {snr_db} dB")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset = rng.random_range(0..=noise.len() - clean.len());
    let segment = &noise.samples[offset..offset + clean.len()];

    let clean_energy = clean.energy();
    let noise_energy: f64 = segment.iter().map(|x| x * x).sum();
    if clean_energy == 0.0 {
        return Err(Error::SilentSignal("clean"));
    }
    if noise_energy == 0.0 {
        return Err(Error::SilentSignal("noise"));
    }
    let gain = (clean_energy / (noise_energy * 10f64.powf(snr_db / 10.0))).sqrt();
    let noise_used: Vec<f64> = segment.iter().map(|x| x * gain).collect();
    let noisy: Vec<f64> = clean.samples.iter().zip(&noise_used).map(|(x, n)| x + n).collect();
    Ok((
        Utterance::new(clean.id.clone(), noisy, clean.sample_rate),
        Utterance::new(format!("{}-noise", clean.id), noise_used, clean.sample_rate),
    ))
}

/// Ideal speech/noise masks of a known decomposition, on the pipeline's framing.
pub fn oracle_masks(clean: &Utterance, noise_used: &Utterance, stft: &StftConfig) -> Result<MaskGrid> {
    check_rate(clean, stft)?;
    check_rate(noise_used, stft)?;
    if clean.len() != noise_used.len() {
        return Err(Error::DimensionMismatch(format!(
            "clean has {} samples, noise {}",
            clean.len(),
            noise_used.len()
        )));
    }
    ideal_masks(
        &analysis_grid(&clean.samples, stft)?,
        &analysis_grid(&noise_used.samples, stft)?,
    )
}

/// Oracle SPP grid: ideal masks reduced by the chosen variant.
pub fn oracle_spp(
    clean: &Utterance,
    noise_used: &Utterance,
    variant: MaskSppVariant,
    stft: &StftConfig,
) -> Result<MaskGrid> {
    Ok(spp_from_masks(&oracle_masks(clean, noise_used, stft)?, variant))
}
