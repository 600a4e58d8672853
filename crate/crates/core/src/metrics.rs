//! Objective evaluation against a clean reference.
//!
//! Frequency-weighted segmental SNR, per analysis frame:
//!
//! 1. window the frame with a periodic Hann window and take the power
//!    spectrum on a zero-padded FFT of `next_power_of_two(frame_len)` points;
//! 2. pool it into `num_bands` triangular bands equally spaced on the mel
//!    scale `2595·log10(1 + f/700)` between 0 Hz and Nyquist (band `j` rises
//!    from mel point `j` to `j+1` and falls to `j+2`);
//! 3. score band `j` as `10·log10(B_x / (√B_x − √B_x̂)²)`, clipped to
//!    `[clip_lo, clip_hi]`, and average with weights `B_x^weight_exponent`.
//!
//! Frames whose reference is silent or which start inside the excluded
//! head are skipped. Segmental SNR is the clipped time-domain frame SNR
//! averaged over the same frames.

use std::io::Write;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stft::hann_periodic;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricConfig {
    pub eval_frame_ms: f64,
    pub eval_hop_ms: f64,
    pub num_bands: usize,
    pub weight_exponent: f64,
    pub clip_lo: f64,
    pub clip_hi: f64,
    pub exclude_head_s: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            eval_frame_ms: 25.0,
            eval_hop_ms: 10.0,
            num_bands: 25,
            weight_exponent: 0.2,
            clip_lo: -10.0,
            clip_hi: 35.0,
            exclude_head_s: 1.0,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.clip_lo < self.clip_hi) {
            return Err(Error::InvalidParameter(format!(
                "clip range [{}, {}]",
                self.clip_lo, self.clip_hi
            )));
        }
        if self.num_bands == 0 {
            return Err(Error::InvalidParameter("num_bands must be >= 1".into()));
        }
        if !(self.eval_frame_ms > 0.0 && self.eval_hop_ms > 0.0) || !(self.exclude_head_s >= 0.0) {
            return Err(Error::InvalidParameter("frame, hop and head must be positive".into()));
        }
        Ok(())
    }

    fn framing(&self, sample_rate: u32) -> Framing {
        let fs = sample_rate as f64;
        Framing {
            len: ((self.eval_frame_ms * fs / 1000.0).round() as usize).max(1),
            hop: ((self.eval_hop_ms * fs / 1000.0).round() as usize).max(1),
            head: (self.exclude_head_s * fs).round() as usize,
        }
    }

    fn clip(&self, db: f64) -> f64 {
        db.clamp(self.clip_lo, self.clip_hi)
    }
}

struct Framing {
    len: usize,
    hop: usize,
    head: usize,
}

impl Framing {
    /// Start offsets of full frames at or after the excluded head.
    fn starts(&self, total: usize) -> impl Iterator<Item = usize> + '_ {
        let first = self.head.div_ceil(self.hop) * self.hop;
        (first..).step_by(self.hop).take_while(move |s| s + self.len <= total)
    }
}

fn check_inputs(clean: &[f64], enhanced: &[f64]) -> Result<()> {
    if clean.len() != enhanced.len() {
        return Err(Error::DimensionMismatch(format!(
            "clean has {} samples, enhanced {}",
            clean.len(),
            enhanced.len()
        )));
    }
    if clean.iter().all(|&x| x == 0.0) {
        return Err(Error::SilentReference);
    }
    Ok(())
}

fn mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

/// Triangular mel filterbank sampled at the FFT bin frequencies:
/// `bands[j][k]` is the weight of bin `k` in band `j`.
fn mel_filterbank(num_bands: usize, nfft: usize, sample_rate: u32) -> Vec<Vec<f64>> {
    let nyquist = sample_rate as f64 / 2.0;
    let top = mel(nyquist);
    let points: Vec<f64> = (0..num_bands + 2)
        .map(|i| top * i as f64 / (num_bands + 1) as f64)
        .collect();
    let bins = nfft / 2 + 1;
    (0..num_bands)
        .map(|j| {
            let (lo, mid, hi) = (points[j], points[j + 1], points[j + 2]);
            (0..bins)
                .map(|k| {
                    let m = mel(k as f64 * sample_rate as f64 / nfft as f64);
                    if m <= lo || m >= hi {
                        0.0
                    } else if m <= mid {
                        (m - lo) / (mid - lo)
                    } else {
                        (hi - m) / (hi - mid)
                    }
                })
                .collect()
        })
        .collect()
}

/// Frequency-weighted segmental SNR in dB.
pub fn fwssnr(clean: &[f64], enhanced: &[f64], sample_rate: u32, cfg: &MetricConfig) -> Result<f64> {
    cfg.validate()?;
    check_inputs(clean, enhanced)?;
    let framing = cfg.framing(sample_rate);
    let nfft = framing.len.next_power_of_two();
    let window = hann_periodic(framing.len);
    let bands = mel_filterbank(cfg.num_bands, nfft, sample_rate);
    let fft = FftPlanner::new().plan_fft_forward(nfft);

    let power = |frame: &[f64]| -> Vec<f64> {
        let mut buf: Vec<Complex64> = frame
            .iter()
            .zip(&window)
            .map(|(x, w)| Complex64::new(x * w, 0.0))
            .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
            .take(nfft)
            .collect();
        fft.process(&mut buf);
        buf[..nfft / 2 + 1].iter().map(|c| c.norm_sqr()).collect()
    };
    let band_energy = |spec: &[f64]| -> Vec<f64> {
        bands
            .iter()
            .map(|w| w.iter().zip(spec).map(|(a, b)| a * b).sum())
            .collect()
    };

    let mut total = 0.0;
    let mut count = 0usize;
    for start in framing.starts(clean.len()) {
        let end = start + framing.len;
        let bx = band_energy(&power(&clean[start..end]));
        let be = band_energy(&power(&enhanced[start..end]));
        let mut num = 0.0;
        let mut den = 0.0;
        for (x, e) in bx.iter().zip(&be) {
            if *x <= 0.0 {
                continue;
            }
            let weight = x.powf(cfg.weight_exponent);
            let err = (x.sqrt() - e.sqrt()).powi(2);
            let snr = if err > 0.0 {
                cfg.clip(10.0 * (x / err).log10())
            } else {
                cfg.clip_hi
            };
            num += weight * snr;
            den += weight;
        }
        if den > 0.0 {
            total += num / den;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::SilentReference);
    }
    Ok(total / count as f64)
}

/// Segmental SNR in dB.
pub fn segsnr(clean: &[f64], enhanced: &[f64], sample_rate: u32, cfg: &MetricConfig) -> Result<f64> {
    cfg.validate()?;
    check_inputs(clean, enhanced)?;
    let framing = cfg.framing(sample_rate);
    let mut total = 0.0;
    let mut count = 0usize;
    for start in framing.starts(clean.len()) {
        let end = start + framing.len;
        let signal: f64 = clean[start..end].iter().map(|x| x * x).sum();
        if signal == 0.0 {
            continue;
        }
        let err: f64 = clean[start..end]
            .iter()
            .zip(&enhanced[start..end])
            .map(|(x, y)| (x - y).powi(2))
            .sum();
        total += if err > 0.0 {
            cfg.clip(10.0 * (signal / err).log10())
        } else {
            cfg.clip_hi
        };
        count += 1;
    }
    if count == 0 {
        return Err(Error::SilentReference);
    }
    Ok(total / count as f64)
}

/// One row of an evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub utterance: String,
    pub snr: Option<f64>,
    pub method: String,
    pub fwssnr_in: Option<f64>,
    pub fwssnr_out: f64,
    pub segsnr_in: Option<f64>,
    pub segsnr_out: f64,
}

impl EvalRecord {
    /// Scores `enhanced` (and `noisy`, when given) against `clean`.
    #[allow(clippy::too_many_arguments)]
    pub fn evaluate(
        utterance: impl Into<String>,
        method: impl Into<String>,
        snr: Option<f64>,
        clean: &[f64],
        noisy: Option<&[f64]>,
        enhanced: &[f64],
        sample_rate: u32,
        cfg: &MetricConfig,
    ) -> Result<Self> {
        let (fwssnr_in, segsnr_in) = match noisy {
            Some(n) => (
                Some(fwssnr(clean, n, sample_rate, cfg)?),
                Some(segsnr(clean, n, sample_rate, cfg)?),
            ),
            None => (None, None),
        };
        Ok(Self {
            utterance: utterance.into(),
            snr,
            method: method.into(),
            fwssnr_in,
            fwssnr_out: fwssnr(clean, enhanced, sample_rate, cfg)?,
            segsnr_in,
            segsnr_out: segsnr(clean, enhanced, sample_rate, cfg)?,
        })
    }
}

pub const TSV_HEADER: &str = "utterance\tsnr\tmethod\tfwssnr_in\tfwssnr_out\tsegsnr_in\tsegsnr_out";

/// Tab-separated table with a header row; missing values are empty cells.
pub fn write_tsv<W: Write>(mut out: W, records: &[EvalRecord]) -> std::io::Result<()> {
    let cell = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
    writeln!(out, "{TSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{:.4}\t{}\t{:.4}",
            r.utterance,
            cell(r.snr),
            r.method,
            cell(r.fwssnr_in),
            r.fwssnr_out,
            cell(r.segsnr_in),
            r.segsnr_out
        )?;
    }
    Ok(())
}

/// JSON report: `{"records": [EvalRecord, ...]}`.
pub fn write_json<W: Write>(out: W, records: &[EvalRecord]) -> Result<()> {
    #[derive(Serialize)]
    struct Report<'a> {
        records: &'a [EvalRecord],
    }
    serde_json::to_writer_pretty(out, &Report { records })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn no_head() -> MetricConfig {
        MetricConfig {
            exclude_head_s: 0.0,
            ..Default::default()
        }
    }

    fn noise(seed: u64, len: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn speechy(len: usize) -> Vec<f64> {
        (0..len)
            .map(|n| {
                let t = n as f64 / 16_000.0;
                let env = 0.5 + 0.5 * (2.0 * PI * 3.0 * t).sin();
                env * ((2.0 * PI * 180.0 * t).sin() + 0.5 * (2.0 * PI * 540.0 * t).sin())
            })
            .collect()
    }

    #[test]
    fn identical_signals_saturate() {
        let x = speechy(16_000);
        assert_eq!(fwssnr(&x, &x, 16_000, &no_head()).unwrap(), 35.0);
        assert_eq!(segsnr(&x, &x, 16_000, &no_head()).unwrap(), 35.0);
    }

    #[test]
    fn heavy_noise_hits_floor() {
        let x = speechy(16_000);
        let y: Vec<f64> = x.iter().zip(noise(1, 16_000)).map(|(a, b)| a + 1e4 * b).collect();
        assert_relative_eq!(fwssnr(&x, &y, 16_000, &no_head()).unwrap(), -10.0, epsilon = 1e-9);
    }

    #[test]
    fn zeroed_output_is_zero_db_segsnr() {
        // x̂ = 0 leaves error = x in every frame.
        let x = noise(2, 8_000);
        let s = segsnr(&x, &vec![0.0; 8_000], 16_000, &no_head()).unwrap();
        assert_relative_eq!(s, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn segsnr_with_exact_frame_ratio() {
        // Non-overlapping frames, error scaled to an exact 7 dB per frame.
        let cfg = MetricConfig {
            eval_frame_ms: 10.0,
            eval_hop_ms: 10.0,
            ..no_head()
        };
        let x = noise(3, 16_000);
        let n = noise(4, 16_000);
        let mut y = vec![0.0; 16_000];
        for f in 0..100 {
            let r = f * 160..(f + 1) * 160;
            let ex: f64 = x[r.clone()].iter().map(|v| v * v).sum();
            let en: f64 = n[r.clone()].iter().map(|v| v * v).sum();
            let g = (ex / en / 10f64.powf(0.7)).sqrt();
            for i in r {
                y[i] = x[i] + g * n[i];
            }
        }
        assert_relative_eq!(segsnr(&x, &y, 16_000, &cfg).unwrap(), 7.0, epsilon = 1e-9);
    }

    #[test]
    fn silent_reference_and_mismatch() {
        let z = vec![0.0; 1000];
        assert!(matches!(
            fwssnr(&z, &z, 16_000, &no_head()),
            Err(Error::SilentReference)
        ));
        assert!(matches!(
            segsnr(&z, &z, 16_000, &no_head()),
            Err(Error::SilentReference)
        ));
        assert!(fwssnr(&[1.0; 10], &[1.0; 9], 16_000, &no_head()).is_err());
    }

    #[test]
    fn head_is_excluded() {
        // Garbage in the first second must not matter.
        let x = speechy(32_000);
        let mut y = x.clone();
        for v in &mut y[..16_000] {
            *v = 0.0;
        }
        assert_eq!(fwssnr(&x, &y, 16_000, &MetricConfig::default()).unwrap(), 35.0);
    }

    #[test]
    fn filterbank_covers_spectrum() {
        let fb = mel_filterbank(25, 512, 16_000);
        assert_eq!(fb.len(), 25);
        assert!(fb.iter().all(|b| b.iter().any(|&w| w > 0.0)));
    }

    #[test]
    fn fwssnr_non_increasing_in_noise_scale() {
        let x = speechy(16_000);
        for seed in 0..4 {
            let n = noise(10 + seed, 16_000);
            let mut last = f64::INFINITY;
            for alpha in [0.0, 0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0] {
                let y: Vec<f64> = x.iter().zip(&n).map(|(a, b)| a + alpha * b).collect();
                let v = fwssnr(&x, &y, 16_000, &no_head()).unwrap();
                assert!(v <= last + 1e-9, "seed {seed} alpha {alpha}: {v} > {last}");
                last = v;
            }
        }
    }

    #[test]
    fn tsv_and_json_reports() {
        let rec = EvalRecord {
            utterance: "u1".into(),
            snr: Some(5.0),
            method: "mfmvdr/model".into(),
            fwssnr_in: Some(1.5),
            fwssnr_out: 4.25,
            segsnr_in: None,
            segsnr_out: 2.0,
        };
        let mut tsv = Vec::new();
        write_tsv(&mut tsv, std::slice::from_ref(&rec)).unwrap();
        let text = String::from_utf8(tsv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], TSV_HEADER);
        assert_eq!(lines[1], "u1\t5.0000\tmfmvdr/model\t1.5000\t4.2500\t\t2.0000");

        let mut json = Vec::new();
        write_json(&mut json, std::slice::from_ref(&rec)).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&json).unwrap();
        let back: EvalRecord = serde_json::from_value(v["records"][0].clone()).unwrap();
        assert_eq!(back, rec);
    }
}
