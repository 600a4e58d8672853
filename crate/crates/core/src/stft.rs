//! Short-time Fourier analysis and weighted overlap-add synthesis.
//!
//! DFT convention: the forward transform is un-normalized and the inverse
//! carries the `1/frame_len` factor. A frame `l` covers samples
//! `[l * hop, l * hop + frame_len)` and phases are referenced to the frame
//! start.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Relative tolerance for the constant-overlap check in [`StftConfig::cola_gain`].
const COLA_TOL: f64 = 1e-10;

/// Periodic (DFT-even) Hann window of length `len`.
pub fn hann_periodic(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StftConfig {
    pub sample_rate: u32,
    pub frame_len: usize,
    pub hop: usize,
    pub window: Vec<f64>,
}

impl Default for StftConfig {
    /// 16 kHz, 4 ms frames, 1 ms hop, periodic Hann.
    fn default() -> Self {
        Self::new(16_000, 64, 16).expect("default STFT config is valid")
    }
}

impl StftConfig {
    /// Periodic-Hann configuration.
    pub fn new(sample_rate: u32, frame_len: usize, hop: usize) -> Result<Self> {
        Self::with_window(sample_rate, frame_len, hop, hann_periodic(frame_len))
    }

    /// Frame and hop given in milliseconds; both must land on whole samples.
    pub fn from_ms(sample_rate: u32, frame_ms: f64, hop_ms: f64) -> Result<Self> {
        let to_samples = |ms: f64, what: &str| -> Result<usize> {
            let exact = ms * sample_rate as f64 / 1000.0;
            let rounded = exact.round();
            if rounded < 1.0 || (exact - rounded).abs() > 1e-9 {
                return Err(Error::InvalidStft(format!(
                    "{what} of {ms} ms is not a whole number of samples at {sample_rate} Hz"
                )));
            }
            Ok(rounded as usize)
        };
        Self::new(
            sample_rate,
            to_samples(frame_ms, "frame length")?,
            to_samples(hop_ms, "hop")?,
        )
    }

    pub fn with_window(sample_rate: u32, frame_len: usize, hop: usize, window: Vec<f64>) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidStft("sample rate must be positive".into()));
        }
        if frame_len < 2 || hop == 0 || hop > frame_len {
            return Err(Error::InvalidStft(format!("frame_len {frame_len} / hop {hop}")));
        }
        if !frame_len.is_multiple_of(hop) {
            return Err(Error::InvalidStft(format!(
                "frame_len {frame_len} is not a multiple of hop {hop}"
            )));
        }
        if window.len() != frame_len {
            return Err(Error::InvalidStft(format!(
                "window has {} taps, frame_len is {frame_len}",
                window.len()
            )));
        }
        if window.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidStft("window values must be finite and >= 0".into()));
        }
        Ok(Self {
            sample_rate,
            frame_len,
            hop,
            window,
        })
    }

    /// Number of one-sided frequency bins, `frame_len / 2 + 1`.
    pub fn num_bins(&self) -> usize {
        self.frame_len / 2 + 1
    }

    /// Frames produced by [`analyze`] for a signal of `len` samples.
    pub fn num_frames(&self, len: usize) -> usize {
        if len < self.frame_len {
            0
        } else {
            (len - self.frame_len) / self.hop + 1
        }
    }

    /// The window-square overlap sum `Σ_i w²[m + i·hop]`, which must be the
    /// same for every `m` for weighted overlap-add to reconstruct exactly.
    pub fn cola_gain(&self) -> Result<f64> {
        let sums: Vec<f64> = (0..self.hop)
            .map(|m| {
                (m..self.frame_len)
                    .step_by(self.hop)
                    .map(|n| self.window[n] * self.window[n])
                    .sum()
            })
            .collect();
        let gain = sums[0];
        let max_dev = sums.iter().map(|s| (s - gain).abs()).fold(0.0, f64::max);
        if !(gain > 0.0) || max_dev > COLA_TOL * gain {
            return Err(Error::NotCola(format!(
                "window-square overlap sum varies between {:.6} and {:.6}",
                sums.iter().cloned().fold(f64::INFINITY, f64::min),
                sums.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            )));
        }
        Ok(gain)
    }

    /// `Σ_m w[m]·w[m + lag]`, zero once the windows no longer overlap.
    pub fn window_overlap(&self, lag: usize) -> f64 {
        if lag >= self.frame_len {
            return 0.0;
        }
        self.window[..self.frame_len - lag]
            .iter()
            .zip(&self.window[lag..])
            .map(|(a, b)| a * b)
            .sum()
    }
}

/// One-sided complex spectrogram, stored frame-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrogramGrid {
    data: Vec<Complex64>,
    num_frames: usize,
    config: StftConfig,
}

impl SpectrogramGrid {
    pub fn zeros(config: StftConfig, num_frames: usize) -> Self {
        let len = config.num_bins() * num_frames;
        Self {
            data: vec![Complex64::new(0.0, 0.0); len],
            num_frames,
            config,
        }
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn num_bins(&self) -> usize {
        self.config.num_bins()
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn get(&self, bin: usize, frame: usize) -> Complex64 {
        self.data[frame * self.num_bins() + bin]
    }

    pub fn set(&mut self, bin: usize, frame: usize, value: Complex64) {
        let k = self.num_bins();
        self.data[frame * k + bin] = value;
    }

    pub fn frame(&self, frame: usize) -> &[Complex64] {
        let k = self.num_bins();
        &self.data[frame * k..(frame + 1) * k]
    }

    pub fn frame_mut(&mut self, frame: usize) -> &mut [Complex64] {
        let k = self.num_bins();
        &mut self.data[frame * k..(frame + 1) * k]
    }

    /// All frames of one bin, in time order.
    pub fn bin_series(&self, bin: usize) -> Vec<Complex64> {
        (0..self.num_frames).map(|l| self.get(bin, l)).collect()
    }

    /// Energy of the windowed time frame recovered from its one-sided
    /// spectrum, i.e. `Σ_n (w[n]·x[n])²`.
    pub fn frame_energy(&self, frame: usize) -> f64 {
        let m = self.config.frame_len;
        let spec = self.frame(frame);
        let full: f64 = spec
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let mirrored = k != 0 && !(m.is_multiple_of(2) && k == m / 2);
                c.norm_sqr() * if mirrored { 2.0 } else { 1.0 }
            })
            .sum();
        full / m as f64
    }
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }
}

pub fn analyze(signal: &[f64], cfg: &StftConfig) -> Result<SpectrogramGrid> {
    let m = cfg.frame_len;
    if signal.len() < m {
        return Err(Error::InputTooShort {
            len: signal.len(),
            frame_len: m,
        });
    }
    let plans = Plans::new(m);
    let num_frames = cfg.num_frames(signal.len());
    let num_bins = cfg.num_bins();
    let mut grid = SpectrogramGrid::zeros(cfg.clone(), num_frames);
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    let mut scratch = vec![Complex64::new(0.0, 0.0); plans.forward.get_inplace_scratch_len()];

    for l in 0..num_frames {
        let start = l * cfg.hop;
        for (n, slot) in buf.iter_mut().enumerate() {
            *slot = Complex64::new(signal[start + n] * cfg.window[n], 0.0);
        }
        plans.forward.process_with_scratch(&mut buf, &mut scratch);
        let out = grid.frame_mut(l);
        out.copy_from_slice(&buf[..num_bins]);
        // Real input: DC and Nyquist are real up to rounding.
        out[0].im = 0.0;
        if m.is_multiple_of(2) {
            out[num_bins - 1].im = 0.0;
        }
    }
    Ok(grid)
}

/// Weighted overlap-add resynthesis. Output length is
/// `(L - 1) * hop + frame_len`.
pub fn synthesize(grid: &SpectrogramGrid) -> Result<Vec<f64>> {
    let cfg = grid.config();
    let gain = cfg.cola_gain()?;
    let m = cfg.frame_len;
    let num_bins = cfg.num_bins();
    let num_frames = grid.num_frames();
    if num_frames == 0 {
        return Ok(Vec::new());
    }

    let plans = Plans::new(m);
    let mut out = vec![0.0; (num_frames - 1) * cfg.hop + m];
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    let mut scratch = vec![Complex64::new(0.0, 0.0); plans.inverse.get_inplace_scratch_len()];
    let scale = 1.0 / (m as f64 * gain);

    for l in 0..num_frames {
        let spec = grid.frame(l);
        buf[..num_bins].copy_from_slice(spec);
        for k in num_bins..m {
            buf[k] = spec[m - k].conj();
        }
        plans.inverse.process_with_scratch(&mut buf, &mut scratch);
        let start = l * cfg.hop;
        for n in 0..m {
            out[start + n] += buf[n].re * cfg.window[n] * scale;
        }
    }
    Ok(out)
}
