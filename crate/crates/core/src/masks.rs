//! MFSM mask files: the exchange format between the engine and external
//! mask estimators.
//!
//! Layout, little-endian, no padding:
//!
//! ```text
//! offset  size  field
//!      0     4  magic "MFSM"
//!      4     4  version (u32, = 1)
//!      8     4  num_bins K (u32, = frame_len/2 + 1)
//!     12     4  num_frames L (u32)
//!     16     4  sample_rate (u32)
//!     20     4  frame_len (u32)
//!     24     4  hop (u32)
//!     28  4·K·L speech plane, f32, frame-major
//!      …  4·K·L noise plane, f32, frame-major
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::spp::MaskGrid;
use crate::stft::StftConfig;

pub const MAGIC: [u8; 4] = *b"MFSM";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 28;

/// Decoded MFSM header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaskFileHeader {
    pub num_bins: u32,
    pub num_frames: u32,
    pub sample_rate: u32,
    pub frame_len: u32,
    pub hop: u32,
}

impl MaskFileHeader {
    pub fn for_grid(masks: &MaskGrid, cfg: &StftConfig) -> Self {
        Self {
            num_bins: masks.num_bins() as u32,
            num_frames: masks.num_frames() as u32,
            sample_rate: cfg.sample_rate,
            frame_len: cfg.frame_len as u32,
            hop: cfg.hop as u32,
        }
    }

    /// Size of the two f32 planes that follow the header.
    pub fn payload_len(&self) -> usize {
        2 * 4 * self.num_bins as usize * self.num_frames as usize
    }

    fn encode(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[..4].copy_from_slice(&MAGIC);
        let fields = [
            VERSION,
            self.num_bins,
            self.num_frames,
            self.sample_rate,
            self.frame_len,
            self.hop,
        ];
        for (i, f) in fields.iter().enumerate() {
            out[4 + 4 * i..8 + 4 * i].copy_from_slice(&f.to_le_bytes());
        }
        out
    }

    fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::BadHeader(format!(
                "{} bytes, header needs {HEADER_LEN}",
                bytes.len()
            )));
        }
        if bytes[..4] != MAGIC {
            return Err(Error::BadHeader("bad magic".into()));
        }
        let field = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap());
        let version = field(0);
        if version != VERSION {
            return Err(Error::BadHeader(format!("unsupported version {version}")));
        }
        let header = Self {
            num_bins: field(1),
            num_frames: field(2),
            sample_rate: field(3),
            frame_len: field(4),
            hop: field(5),
        };
        header.validate()?;
        Ok(header)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::BadHeader(msg));
        if self.sample_rate == 0 {
            return bad("sample rate 0".into());
        }
        if self.frame_len < 2 || self.hop == 0 || self.hop > self.frame_len {
            return bad(format!("frame_len {} / hop {}", self.frame_len, self.hop));
        }
        if !self.frame_len.is_multiple_of(self.hop) {
            return bad(format!("hop {} does not divide frame_len {}", self.hop, self.frame_len));
        }
        if self.num_bins != self.frame_len / 2 + 1 {
            return bad(format!(
                "num_bins {} inconsistent with frame_len {}",
                self.num_bins, self.frame_len
            ));
        }
        Ok(())
    }

    /// Fails unless the header describes the same framing as `cfg`.
    pub fn check_matches(&self, cfg: &StftConfig) -> Result<()> {
        if self.sample_rate != cfg.sample_rate
            || self.frame_len as usize != cfg.frame_len
            || self.hop as usize != cfg.hop
        {
            return Err(Error::BadHeader(format!(
                "file framing {} Hz / {} / {} differs from engine {} Hz / {} / {}",
                self.sample_rate, self.frame_len, self.hop, cfg.sample_rate, cfg.frame_len, cfg.hop
            )));
        }
        Ok(())
    }
}

/// Serializes a mask grid to MFSM bytes.
pub fn encode_masks(masks: &MaskGrid, cfg: &StftConfig) -> Result<Vec<u8>> {
    if masks.num_bins() != cfg.num_bins() {
        return Err(Error::DimensionMismatch(format!(
            "mask grid has {} bins, STFT has {}",
            masks.num_bins(),
            cfg.num_bins()
        )));
    }
    let header = MaskFileHeader::for_grid(masks, cfg);
    let mut out = Vec::with_capacity(HEADER_LEN + header.payload_len());
    out.extend_from_slice(&header.encode());
    let k = masks.num_bins();
    for plane in [masks.speech_plane(), masks.noise_plane()] {
        for (i, &v) in plane.iter().enumerate() {
            let f = v as f32;
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::MaskOutOfRange {
                    value: f,
                    bin: i % k,
                    frame: i / k,
                });
            }
            out.extend_from_slice(&f.to_le_bytes());
        }
    }
    Ok(out)
}

/// Parses MFSM bytes, validating the header and every mask value.
pub fn decode_masks(bytes: &[u8]) -> Result<(MaskGrid, MaskFileHeader)> {
    let header = MaskFileHeader::decode(bytes)?;
    let payload = &bytes[HEADER_LEN..];
    let expected = header.payload_len();
    if payload.len() < expected {
        return Err(Error::TruncatedPayload {
            expected,
            found: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(Error::BadHeader(format!(
            "{} trailing bytes after payload",
            payload.len() - expected
        )));
    }
    let (k, l) = (header.num_bins as usize, header.num_frames as usize);
    let plane = |bytes: &[u8]| -> Result<Vec<f64>> {
        bytes
            .chunks_exact(4)
            .enumerate()
            .map(|(i, c)| {
                let v = f32::from_le_bytes(c.try_into().unwrap());
                if (0.0..=1.0).contains(&v) {
                    Ok(v as f64)
                } else {
                    Err(Error::MaskOutOfRange {
                        value: v,
                        bin: i % k,
                        frame: i / k,
                    })
                }
            })
            .collect()
    };
    let half = expected / 2;
    let speech = plane(&payload[..half])?;
    let noise = plane(&payload[half..])?;
    Ok((MaskGrid::new(k, l, speech, noise)?, header))
}

pub fn write_masks(path: impl AsRef<Path>, masks: &MaskGrid, cfg: &StftConfig) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_masks(masks, cfg)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_masks(path: impl AsRef<Path>) -> Result<(MaskGrid, MaskFileHeader)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_masks(&bytes)
}

/// Reads a mask file and checks that its framing matches `cfg`.
pub fn read_masks_for(path: impl AsRef<Path>, cfg: &StftConfig) -> Result<MaskGrid> {
    let (grid, header) = read_masks(path)?;
    header.check_matches(cfg)?;
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample_grid(frames: usize, seed: u64) -> MaskGrid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 33 * frames;
        // Values are f32-representable so the round trip is exact.
        let mut draw = || (0..n).map(|_| rng.random::<f32>() as f64).collect::<Vec<_>>();
        let speech = draw();
        let noise = draw();
        MaskGrid::new(33, frames, speech, noise).unwrap()
    }

    #[test]
    fn file_size_follows_layout() {
        let bytes = encode_masks(&sample_grid(100, 1), &StftConfig::default()).unwrap();
        assert_eq!(bytes.len(), 26_428);
        assert_eq!(&bytes[..4], b"MFSM");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &33u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &100u32.to_le_bytes());
        assert_eq!(&bytes[16..20], &16_000u32.to_le_bytes());
        assert_eq!(&bytes[20..24], &64u32.to_le_bytes());
        assert_eq!(&bytes[24..28], &16u32.to_le_bytes());
    }

    #[test]
    fn frame_major_payload_order() {
        let speech: Vec<f64> = (0..66).map(|i| i as f64 / 128.0).collect();
        let grid = MaskGrid::new(33, 2, speech, vec![0.0; 66]).unwrap();
        let bytes = encode_masks(&grid, &StftConfig::default()).unwrap();
        // Bin 1 of frame 1 is element 34 of the speech plane.
        let at = HEADER_LEN + 4 * 34;
        let v = f32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
        assert_eq!(v as f64, grid.speech(1, 1));
    }

    #[test]
    fn file_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.mfsm");
        let grid = sample_grid(57, 2);
        let cfg = StftConfig::default();
        write_masks(&path, &grid, &cfg).unwrap();
        let first = fs::read(&path).unwrap();
        let back = read_masks_for(&path, &cfg).unwrap();
        assert_eq!(back, grid);
        write_masks(&path, &back, &cfg).unwrap();
        assert_eq!(fs::read(&path).unwrap(), first);
    }

    #[test]
    fn truncated_payload() {
        let mut bytes = encode_masks(&sample_grid(10, 3), &StftConfig::default()).unwrap();
        bytes.truncate(bytes.len() - 3);
        let err = decode_masks(&bytes).unwrap_err();
        assert!(err.to_string().contains("truncated payload"));
    }

    #[test]
    fn out_of_range_values() {
        let mut bytes = encode_masks(&sample_grid(4, 4), &StftConfig::default()).unwrap();
        bytes[HEADER_LEN..HEADER_LEN + 4].copy_from_slice(&1.5f32.to_le_bytes());
        assert!(decode_masks(&bytes)
            .unwrap_err()
            .to_string()
            .contains("mask out of range"));
        bytes[HEADER_LEN..HEADER_LEN + 4].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(decode_masks(&bytes).is_err());
    }

    #[test]
    fn structural_header_violations() {
        let good = encode_masks(&sample_grid(3, 5), &StftConfig::default()).unwrap();
        let patch = |at: usize, v: u32| {
            let mut b = good.clone();
            b[at..at + 4].copy_from_slice(&v.to_le_bytes());
            b
        };
        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        for bytes in [
            bad_magic,
            patch(4, 2),   // version
            patch(8, 34),  // bins
            patch(12, 4),  // frames vs payload
            patch(16, 0),  // sample rate
            patch(20, 66), // frame_len vs bins
            patch(24, 24), // hop does not divide
            patch(24, 0),
            good[..20].to_vec(),
        ] {
            assert!(decode_masks(&bytes).is_err());
        }
        let mut trailing = good.clone();
        trailing.push(0);
        assert!(decode_masks(&trailing).is_err());
    }

    #[test]
    fn framing_mismatch_against_engine() {
        let grid = sample_grid(3, 6);
        let other = StftConfig::new(8_000, 64, 16).unwrap();
        let bytes = encode_masks(&grid, &other).unwrap();
        let (_, header) = decode_masks(&bytes).unwrap();
        assert!(header.check_matches(&StftConfig::default()).is_err());
    }

    #[test]
    fn refuses_mismatched_bins() {
        let grid = MaskGrid::new(5, 1, vec![0.0; 5], vec![0.0; 5]).unwrap();
        assert!(encode_masks(&grid, &StftConfig::default()).is_err());
    }
}
