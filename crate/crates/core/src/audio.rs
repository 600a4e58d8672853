//! 16-bit PCM mono WAV input/output.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};

/// A mono signal with its sample rate and an identifier for reports.
#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    pub id: String,
}

impl Utterance {
    pub fn new(id: impl Into<String>, samples: Vec<f64>, sample_rate: u32) -> Self {
        Self {
            samples,
            sample_rate,
            id: id.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum()
    }
}

/// Reads a 16-bit PCM mono file; samples are scaled to `[-1, 1)`.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Utterance> {
    let path = path.as_ref();
    let reader = WavReader::open(path)?;
    let spec = reader.spec();
    if spec.channels != 1 || spec.bits_per_sample != 16 || spec.sample_format != SampleFormat::Int {
        return Err(Error::UnsupportedAudio(format!(
            "{}: need 16-bit PCM mono, got {} ch / {} bit / {:?}",
            path.display(),
            spec.channels,
            spec.bits_per_sample,
            spec.sample_format
        )));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| v as f64 / 32768.0))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Utterance::new(id, samples, spec.sample_rate))
}

/// Writes 16-bit PCM mono, saturating samples outside `[-1, 1)`.
pub fn write_wav(path: impl AsRef<Path>, utt: &Utterance) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: utt.sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer = WavWriter::create(path, spec)?;
    for &x in &utt.samples {
        let v = (x * 32768.0).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16;
        writer.write_sample(v)?;
    }
    writer.finalize()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pcm_round_trip_is_exact_on_grid_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.wav");
        let samples: Vec<f64> = (-300..300).map(|i| i as f64 * 97.0 / 32768.0).collect();
        let utt = Utterance::new("a", samples, 16_000);
        write_wav(&path, &utt).unwrap();
        assert_eq!(read_wav(&path).unwrap(), utt);
    }

    #[test]
    fn saturates_out_of_range() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.wav");
        write_wav(&path, &Utterance::new("b", vec![2.0, -2.0], 16_000)).unwrap();
        let back = read_wav(&path).unwrap();
        assert_eq!(back.samples, vec![32767.0 / 32768.0, -1.0]);
    }

    #[test]
    fn rejects_stereo() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.wav");
        let spec = WavSpec {
            channels: 2,
            sample_rate: 16_000,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&path, spec).unwrap();
        w.write_sample(0i16).unwrap();
        w.write_sample(0i16).unwrap();
        w.finalize().unwrap();
        assert!(matches!(read_wav(&path), Err(Error::UnsupportedAudio(_))));
    }
}
