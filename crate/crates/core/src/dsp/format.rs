//! Binary segment files.
//!
//! `EEGS`: 16-byte header (magic, channel count, sample count, sample rate in
//! Hz, each a little-endian `u32` after the 4-byte magic) followed by
//! channel-major little-endian `f32` samples.
//!
//! `SPGS`: magic, channel count, bin count, sample rate, frame count (20-byte
//! header) followed by `channels x bins x frames` little-endian `f32`.

use std::fs;
use std::path::Path;

use super::{EegRecording, SpectrogramStack};
use crate::error::{Error, Result};

pub const EEG_MAGIC: &[u8; 4] = b"EEGS";
pub const SPECTROGRAM_MAGIC: &[u8; 4] = b"SPGS";

fn put_u32(buf: &mut Vec<u8>, v: usize, what: &str) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::InvalidConfig(format!("{what} {v} does not fit in u32")))?;
    buf.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

fn get_u32(bytes: &[u8], offset: usize) -> usize {
    u32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap()) as usize
}

fn sample_rate_u32(rate: f64) -> Result<usize> {
    if rate.fract() != 0.0 || rate <= 0.0 || rate > u32::MAX as f64 {
        return Err(Error::InvalidConfig(format!("sample rate {rate} is not a positive integer")));
    }
    Ok(rate as usize)
}

pub fn encode_eeg(rec: &EegRecording) -> Result<Vec<u8>> {
    let mut buf = Vec::with_capacity(16 + 4 * rec.channel_count() * rec.sample_count());
    buf.extend_from_slice(EEG_MAGIC);
    put_u32(&mut buf, rec.channel_count(), "channel count")?;
    put_u32(&mut buf, rec.sample_count(), "sample count")?;
    put_u32(&mut buf, sample_rate_u32(rec.sample_rate)?, "sample rate")?;
    for v in rec.data.iter().flatten() {
        buf.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    Ok(buf)
}

fn payload(bytes: &[u8], header: usize, count: usize, path: &Path) -> Result<Vec<f64>> {
    let expected = header + 4 * count;
    if bytes.len() != expected {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: format!("expected {expected} bytes, found {}", bytes.len()),
        });
    }
    Ok(bytes[header..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect())
}

fn check_magic(bytes: &[u8], magic: &[u8; 4], header: usize, path: &Path) -> Result<()> {
    if bytes.len() < header || &bytes[..4] != magic {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: format!("missing {} header", String::from_utf8_lossy(magic)),
        });
    }
    Ok(())
}

pub fn decode_eeg(bytes: &[u8], path: &Path) -> Result<EegRecording> {
    check_magic(bytes, EEG_MAGIC, 16, path)?;
    let channels = get_u32(bytes, 4);
    let samples = get_u32(bytes, 8);
    let rate = get_u32(bytes, 12);
    let values = payload(bytes, 16, channels * samples, path)?;
    let data = if samples == 0 {
        vec![Vec::new(); channels]
    } else {
        values.chunks_exact(samples).map(<[f64]>::to_vec).collect()
    };
    EegRecording::new(data, rate as f64).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn write_eeg(path: &Path, rec: &EegRecording) -> Result<()> {
    fs::write(path, encode_eeg(rec)?).map_err(|e| Error::io(path, e))
}

pub fn read_eeg(path: &Path) -> Result<EegRecording> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_eeg(&bytes, path)
}

pub fn encode_spectrogram(stack: &SpectrogramStack, sample_rate: f64) -> Result<Vec<u8>> {
    let mut buf = Vec::with_capacity(20 + 4 * stack.data.len());
    buf.extend_from_slice(SPECTROGRAM_MAGIC);
    put_u32(&mut buf, stack.channels, "channel count")?;
    put_u32(&mut buf, stack.bins, "bin count")?;
    put_u32(&mut buf, sample_rate_u32(sample_rate)?, "sample rate")?;
    put_u32(&mut buf, stack.frames, "frame count")?;
    for v in &stack.data {
        buf.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    Ok(buf)
}

/// Decoded spectrogram file. Bin width and frame times are not stored in
/// the header; callers that need them supply the STFT configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrogramFile {
    pub channels: usize,
    pub bins: usize,
    pub frames: usize,
    pub sample_rate: usize,
    pub data: Vec<f64>,
}

pub fn decode_spectrogram(bytes: &[u8], path: &Path) -> Result<SpectrogramFile> {
    check_magic(bytes, SPECTROGRAM_MAGIC, 20, path)?;
    let channels = get_u32(bytes, 4);
    let bins = get_u32(bytes, 8);
    let sample_rate = get_u32(bytes, 12);
    let frames = get_u32(bytes, 16);
    let data = payload(bytes, 20, channels * bins * frames, path)?;
    Ok(SpectrogramFile {
        channels,
        bins,
        frames,
        sample_rate,
        data,
    })
}

pub fn write_spectrogram(path: &Path, stack: &SpectrogramStack, sample_rate: f64) -> Result<()> {
    fs::write(path, encode_spectrogram(stack, sample_rate)?).map_err(|e| Error::io(path, e))
}

pub fn read_spectrogram(path: &Path) -> Result<SpectrogramFile> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_spectrogram(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eeg_header_layout() {
        let rec = EegRecording::new(vec![vec![1.0, 2.0, 3.0], vec![-1.5, 0.25, 8.0]], 250.0).unwrap();
        let bytes = encode_eeg(&rec).unwrap();
        assert_eq!(&bytes[..4], b"EEGS");
        assert_eq!(&bytes[4..8], &2u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &3u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &250u32.to_le_bytes());
        assert_eq!(&bytes[16..20], &1.0f32.to_le_bytes());
        // channel-major: second channel starts after the first channel's samples
        assert_eq!(&bytes[28..32], &(-1.5f32).to_le_bytes());
        assert_eq!(bytes.len(), 16 + 6 * 4);
        assert_eq!(decode_eeg(&bytes, Path::new("x")).unwrap(), rec);
    }

    #[test]
    fn truncated_or_wrong_magic() {
        let rec = EegRecording::new(vec![vec![1.0; 4]; 2], 250.0).unwrap();
        let bytes = encode_eeg(&rec).unwrap();
        assert!(decode_eeg(&bytes[..bytes.len() - 1], Path::new("x")).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_eeg(&bad, Path::new("x")).is_err());
        assert!(decode_eeg(&bytes[..8], Path::new("x")).is_err());
    }

    #[test]
    fn fractional_sample_rate_rejected() {
        let rec = EegRecording::new(vec![vec![1.0; 4]; 2], 250.5).unwrap();
        assert!(encode_eeg(&rec).is_err());
    }

    #[test]
    fn spectrogram_header_layout() {
        let stack = SpectrogramStack {
            channels: 2,
            bins: 3,
            frames: 4,
            data: (0..24).map(f64::from).collect(),
            bin_width: 1.0,
            frame_times: vec![0.0; 4],
        };
        let bytes = encode_spectrogram(&stack, 250.0).unwrap();
        assert_eq!(&bytes[..4], b"SPGS");
        assert_eq!(&bytes[16..20], &4u32.to_le_bytes());
        assert_eq!(bytes.len(), 20 + 24 * 4);
        let back = decode_spectrogram(&bytes, Path::new("x")).unwrap();
        assert_eq!(back.data, stack.data);
        assert_eq!((back.channels, back.bins, back.frames, back.sample_rate), (2, 3, 4, 250));
    }
}
