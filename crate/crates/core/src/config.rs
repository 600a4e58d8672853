//! Flat `key=value` parameter files.
//!
//! Recognized keys: `alpha_n`, `lambda_y`, `lambda_dda`, `delta`, `n_taps`,
//! `frame_ms`, `hop_ms`, `xi_h1_db`, `prior_ratio`. Blank lines and lines
//! starting with `#` are ignored. Keys that are absent keep their defaults.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::pipeline::EnhanceConfig;
use crate::stft::StftConfig;

pub const KEYS: [&str; 9] = [
    "alpha_n",
    "lambda_y",
    "lambda_dda",
    "delta",
    "n_taps",
    "frame_ms",
    "hop_ms",
    "xi_h1_db",
    "prior_ratio",
];

/// Applies the settings in `text` on top of `base`.
pub fn parse_config(text: &str, base: &EnhanceConfig) -> Result<EnhanceConfig> {
    let mut cfg = base.clone();
    let mut seen = HashSet::new();
    let mut frame_ms = cfg.stft.frame_len as f64 * 1000.0 / cfg.stft.sample_rate as f64;
    let mut hop_ms = cfg.stft.hop as f64 * 1000.0 / cfg.stft.sample_rate as f64;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |msg: String| Error::Config { line: line_no, msg };
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected key=value, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(err(format!("unknown key `{key}`")));
        }
        if !seen.insert(key.to_string()) {
            return Err(err(format!("duplicate key `{key}`")));
        }
        let number: f64 = value.parse().map_err(|_| err(format!("`{value}` is not a number")))?;
        match key {
            "alpha_n" => cfg.smoothing.alpha_n = number,
            "lambda_y" => cfg.smoothing.lambda_y = number,
            "lambda_dda" => cfg.dda.lambda_dda = number,
            "delta" => cfg.smoothing.delta = number,
            "n_taps" => {
                if number < 1.0 || number.fract() != 0.0 {
                    return Err(err(format!("n_taps must be a positive integer, got {value}")));
                }
                cfg.taps = number as usize;
            }
            "frame_ms" => frame_ms = number,
            "hop_ms" => hop_ms = number,
            "xi_h1_db" => cfg.spp_model.xi_h1 = 10f64.powf(number / 10.0),
            "prior_ratio" => cfg.spp_model.prior_ratio = number,
            _ => unreachable!(),
        }
    }
    cfg.stft = StftConfig::from_ms(cfg.stft.sample_rate, frame_ms, hop_ms)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: impl AsRef<Path>, base: &EnhanceConfig) -> Result<EnhanceConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, base)
}

/// Renders the tunable parameters of `cfg` in the file format.
pub fn render_config(cfg: &EnhanceConfig) -> String {
    let fs = cfg.stft.sample_rate as f64;
    let mut out = String::new();
    let mut put = |k: &str, v: String| writeln!(out, "{k}={v}").unwrap();
    put("alpha_n", cfg.smoothing.alpha_n.to_string());
    put("lambda_y", cfg.smoothing.lambda_y.to_string());
    put("lambda_dda", cfg.dda.lambda_dda.to_string());
    put("delta", cfg.smoothing.delta.to_string());
    put("n_taps", cfg.taps.to_string());
    put("frame_ms", (cfg.stft.frame_len as f64 * 1000.0 / fs).to_string());
    put("hop_ms", (cfg.stft.hop as f64 * 1000.0 / fs).to_string());
    put("xi_h1_db", (10.0 * cfg.spp_model.xi_h1.log10()).to_string());
    put("prior_ratio", cfg.spp_model.prior_ratio.to_string());
    out
}
