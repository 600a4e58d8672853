mod common;

use std::f64::consts::PI;

use common::*;
use mfenhance::metrics::{fwssnr, segsnr, MetricConfig};

/// Straightforward re-implementation: explicit DFT sums, band edges from
/// the mel formula, no shared code with the library.
fn reference_fwssnr(clean: &[f64], enhanced: &[f64], fs: f64) -> f64 {
    let (len, hop, head, bands) = (400usize, 160usize, 16_000usize, 25usize);
    let nfft = 512usize;
    let win: Vec<f64> = (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
        .collect();
    let mel = |f: f64| 2595.0 * (1.0 + f / 700.0).log10();
    let top = mel(fs / 2.0);
    let edge = |i: usize| top * i as f64 / (bands + 1) as f64;
    let spectrum = |x: &[f64]| -> Vec<f64> {
        (0..=nfft / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for n in 0..len {
                    let a = -2.0 * PI * (k * n) as f64 / nfft as f64;
                    re += x[n] * win[n] * a.cos();
                    im += x[n] * win[n] * a.sin();
                }
                re * re + im * im
            })
            .collect()
    };
    let band = |p: &[f64], j: usize| -> f64 {
        p.iter()
            .enumerate()
            .map(|(k, v)| {
                let m = mel(k as f64 * fs / nfft as f64);
                let (lo, mid, hi) = (edge(j), edge(j + 1), edge(j + 2));
                let w = if m > lo && m <= mid {
                    (m - lo) / (mid - lo)
                } else if m > mid && m < hi {
                    (hi - m) / (hi - mid)
                } else {
                    0.0
                };
                w * v
            })
            .sum()
    };
    let mut scores = Vec::new();
    let mut start = head;
    while start + len <= clean.len() {
        let px = spectrum(&clean[start..start + len]);
        let pe = spectrum(&enhanced[start..start + len]);
        let (mut num, mut den) = (0.0, 0.0);
        for j in 0..bands {
            let (bx, be) = (band(&px, j), band(&pe, j));
            if bx <= 0.0 {
                continue;
            }
            let snr = (10.0 * (bx / (bx.sqrt() - be.sqrt()).powi(2)).log10()).clamp(-10.0, 35.0);
            num += bx.powf(0.2) * snr;
            den += bx.powf(0.2);
        }
        if den > 0.0 {
            scores.push(num / den);
        }
        start += hop;
    }
    scores.iter().sum::<f64>() / scores.len() as f64
}

#[test]
fn fwssnr_matches_clean_room_reference() {
    let clean = speech_like_floor(21, 1.0, 1.0, 0.01);
    let noise = white_noise(22, clean.len(), 0.02);
    let enhanced: Vec<f64> = clean.samples.iter().zip(&noise.samples).map(|(a, b)| a + b).collect();
    let ours = fwssnr(&clean.samples, &enhanced, FS, &MetricConfig::default()).unwrap();
    let theirs = reference_fwssnr(&clean.samples, &enhanced, FS as f64);
    assert!(ours > 0.0 && ours < 30.0, "not a mid-SNR case: {ours}");
    assert!((ours - theirs).abs() < 0.01, "{ours} vs {theirs}");
}

#[test]
fn both_metrics_drop_as_noise_grows() {
    let clean = speech_like_floor(23, 1.0, 1.0, 0.01);
    let noise = white_noise(24, clean.len(), 1.0);
    let cfg = MetricConfig::default();
    let mut last = (f64::INFINITY, f64::INFINITY);
    for scale in [0.001, 0.01, 0.03, 0.1] {
        let y: Vec<f64> = clean
            .samples
            .iter()
            .zip(&noise.samples)
            .map(|(a, b)| a + scale * b)
            .collect();
        let now = (
            fwssnr(&clean.samples, &y, FS, &cfg).unwrap(),
            segsnr(&clean.samples, &y, FS, &cfg).unwrap(),
        );
        assert!(now.0 < last.0 && now.1 < last.1, "{scale}: {now:?} after {last:?}");
        last = now;
    }
}
