#![allow(dead_code)]

use std::f64::consts::PI;

use mfenhance::Utterance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const FS: u32 = 16_000;

/// Voiced, speech-like test signal: a harmonic series with a gliding
/// pitch, fixed formant-like spectral shaping and a syllabic on/off
/// envelope, preceded by `head_s` seconds of silence.
pub fn speech_like(seed: u64, head_s: f64, body_s: f64) -> Utterance {
    speech_like_floor(seed, head_s, body_s, 0.0)
}

pub fn speech_like_floor(seed: u64, head_s: f64, body_s: f64, floor: f64) -> Utterance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let head = (head_s * FS as f64) as usize;
    let body = (body_s * FS as f64) as usize;
    let f0_base: f64 = rng.random_range(110.0..190.0);
    let glide_rate: f64 = rng.random_range(0.5..1.5);
    let syllable_rate: f64 = rng.random_range(3.0..5.0);
    let formants = [
        (rng.random_range(400.0..800.0), 120.0),
        (rng.random_range(1000.0..1800.0), 200.0),
        (rng.random_range(2200.0..3000.0), 300.0),
    ];
    let mut phase = 0.0f64;
    let mut out = vec![0.0; head + body];
    for n in 0..body {
        let t = n as f64 / FS as f64;
        let f0 = f0_base * (1.0 + 0.15 * (2.0 * PI * glide_rate * t).sin());
        phase += 2.0 * PI * f0 / FS as f64;
        let syl = floor + (1.0 - floor) * (PI * syllable_rate * t).sin().max(0.0).powf(0.7);
        let mut v = 0.0;
        let mut h = 1;
        while (h as f64) * f0 < 4000.0 {
            let f = h as f64 * f0;
            let amp: f64 = formants
                .iter()
                .map(|(fc, bw)| 1.0 / (1.0 + ((f - fc) / bw).powi(2)))
                .sum::<f64>()
                + 0.02;
            v += amp * (h as f64 * phase).sin();
            h += 1;
        }
        out[head + n] = 0.1 * syl * v;
    }
    Utterance::new(format!("speech{seed}"), out, FS)
}

pub fn white_noise(seed: u64, len: usize, std: f64) -> Utterance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..len).map(|_| std * rng.sample::<f64, _>(StandardNormal)).collect();
    Utterance::new(format!("white{seed}"), samples, FS)
}

pub fn report(id: &str, pass: bool, detail: impl std::fmt::Display) {
    println!("[{}] {id}: {detail}", if pass { "PASS" } else { "FAIL" });
}
