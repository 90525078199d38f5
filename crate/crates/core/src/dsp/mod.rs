//! EEG conditioning and time-frequency features.
//!
//! Pipeline: average re-reference, Butterworth bandpass, baseline/event
//! segmentation, then per-channel STFT power stacked channel-major.

mod filter;
pub mod format;
mod stft;

pub use filter::{analog_bandpass_magnitude, butterworth_bandpass, Biquad, BandpassConfig, SosFilter};
pub use stft::{spectrogram_stack, stft, ComplexMatrix, SpectrogramStack, StftConfig, WindowKind};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SAMPLE_RATE: f64 = 250.0;
/// Seconds before the click where an event window starts.
pub const EVENT_START_OFFSET: f64 = -6.0;
/// Seconds after the click where an event window ends.
pub const EVENT_END_OFFSET: f64 = 1.0;
pub const DEFAULT_BASELINE: (f64, f64) = (10.0, 70.0);

/// Multichannel recording in microvolts, stored channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EegRecording {
    pub data: Vec<Vec<f64>>,
    pub sample_rate: f64,
}

impl EegRecording {
    pub fn new(data: Vec<Vec<f64>>, sample_rate: f64) -> Result<Self> {
        if !(sample_rate > 0.0) || !sample_rate.is_finite() {
            return Err(Error::InvalidConfig(format!("sample rate must be > 0, got {sample_rate}")));
        }
        if let Some(first) = data.first() {
            if data.iter().any(|ch| ch.len() != first.len()) {
                return Err(Error::Shape("channels have different lengths".into()));
            }
        }
        Ok(Self { data, sample_rate })
    }

    pub fn channel_count(&self) -> usize {
        self.data.len()
    }

    pub fn sample_count(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    pub fn duration(&self) -> f64 {
        self.sample_count() as f64 / self.sample_rate
    }

    /// Copy of samples `[start, end)` on every channel.
    pub fn slice(&self, start: usize, end: usize) -> EegRecording {
        EegRecording {
            data: self.data.iter().map(|ch| ch[start..end].to_vec()).collect(),
            sample_rate: self.sample_rate,
        }
    }

    pub fn map_channels<F>(&self, f: F) -> EegRecording
    where
        F: Fn(&[f64]) -> Vec<f64>,
    {
        EegRecording {
            data: self.data.iter().map(|ch| f(ch)).collect(),
            sample_rate: self.sample_rate,
        }
    }
}

/// Subtract the instantaneous mean across channels from every channel.
pub fn average_rereference(rec: &EegRecording) -> Result<EegRecording> {
    let channels = rec.channel_count();
    if channels < 2 {
        return Err(Error::InvalidConfig(format!(
            "average re-reference needs at least 2 channels, got {channels}"
        )));
    }
    let n = rec.sample_count();
    let mut mean = vec![0.0; n];
    for ch in &rec.data {
        for (m, v) in mean.iter_mut().zip(ch) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= channels as f64);
    Ok(rec.map_channels(|ch| ch.iter().zip(&mean).map(|(v, m)| v - m).collect()))
}

/// Sample span of the event window around `click_time`.
pub fn event_span(click_time: f64, sample_rate: f64, total_samples: usize) -> Result<(usize, usize)> {
    let duration = total_samples as f64 / sample_rate;
    let click = (click_time * sample_rate).round();
    let start = click + (EVENT_START_OFFSET * sample_rate).round();
    let len = ((EVENT_END_OFFSET - EVENT_START_OFFSET) * sample_rate).round();
    if !click_time.is_finite() || start < 0.0 || start + len > total_samples as f64 {
        return Err(Error::OutOfBounds { click_time, duration });
    }
    Ok((start as usize, (start + len) as usize))
}

pub fn extract_event(rec: &EegRecording, click_time: f64) -> Result<EegRecording> {
    let (start, end) = event_span(click_time, rec.sample_rate, rec.sample_count())?;
    Ok(rec.slice(start, end))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segments {
    pub baseline: EegRecording,
    pub events: Vec<EegRecording>,
}

/// Baseline span, with its end clamped to the recording length.
pub fn baseline_span(rec: &EegRecording, baseline: (f64, f64)) -> Result<(usize, usize)> {
    let (from, to) = baseline;
    if !(from >= 0.0) || !(to > from) {
        return Err(Error::InvalidConfig(format!("invalid baseline window ({from}, {to})")));
    }
    let n = rec.sample_count();
    let start = (from * rec.sample_rate).round() as usize;
    let end = ((to * rec.sample_rate).round() as usize).min(n);
    if start >= end {
        return Err(Error::OutOfBounds {
            click_time: from,
            duration: rec.duration(),
        });
    }
    Ok((start, end))
}

/// Cut the baseline and one 7 s window per click. Any click whose window
/// leaves the recording is an error naming that click.
pub fn extract_segments(rec: &EegRecording, click_times: &[f64], baseline: (f64, f64)) -> Result<Segments> {
    let (b0, b1) = baseline_span(rec, baseline)?;
    let events = click_times
        .iter()
        .map(|&t| extract_event(rec, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(Segments {
        baseline: rec.slice(b0, b1),
        events,
    })
}

/// Per-channel peak absolute amplitude, for manual channel rejection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelQc {
    pub channel: usize,
    pub peak_abs: f64,
    pub flagged: bool,
}

pub fn channel_qc(rec: &EegRecording, threshold: f64) -> Vec<ChannelQc> {
    rec.data
        .iter()
        .enumerate()
        .map(|(channel, ch)| {
            let peak_abs = ch.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            ChannelQc {
                channel,
                peak_abs,
                flagged: peak_abs > threshold,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(channels: usize, seconds: f64) -> EegRecording {
        let n = (seconds * DEFAULT_SAMPLE_RATE) as usize;
        let data = (0..channels)
            .map(|c| (0..n).map(|i| (i + c) as f64).collect())
            .collect();
        EegRecording::new(data, DEFAULT_SAMPLE_RATE).unwrap()
    }

    #[test]
    fn rereference_fixtures() {
        let rec = EegRecording::new(vec![vec![1.0; 10], vec![-1.0; 10]], 250.0).unwrap();
        assert_eq!(average_rereference(&rec).unwrap(), rec);
        let same = EegRecording::new(vec![vec![3.0, 4.0]; 3], 250.0).unwrap();
        let out = average_rereference(&same).unwrap();
        assert!(out.data.iter().flatten().all(|v| *v == 0.0));
        let single = EegRecording::new(vec![vec![1.0; 4]], 250.0).unwrap();
        assert!(average_rereference(&single).is_err());
    }

    #[test]
    fn event_window_is_sample_exact() {
        let rec = ramp(2, 60.0);
        let seg = extract_segments(&rec, &[30.0], DEFAULT_BASELINE).unwrap();
        assert_eq!(seg.events.len(), 1);
        assert_eq!(seg.events[0].sample_count(), 1750);
        assert_eq!(seg.events[0].data[0][0], (24 * 250) as f64);
        assert_eq!(*seg.events[0].data[0].last().unwrap(), (31 * 250 - 1) as f64);
        // baseline clamps to the 60 s recording
        assert_eq!(seg.baseline.sample_count(), 50 * 250);
    }

    #[test]
    fn early_click_is_out_of_bounds() {
        let rec = ramp(2, 60.0);
        match extract_segments(&rec, &[3.0], DEFAULT_BASELINE) {
            Err(Error::OutOfBounds { click_time, .. }) => assert_eq!(click_time, 3.0),
            other => panic!("unexpected {other:?}"),
        }
        assert!(extract_event(&rec, 59.5).is_err());
    }

    #[test]
    fn two_clicks_two_segments() {
        let rec = ramp(3, 60.0);
        let seg = extract_segments(&rec, &[20.0, 45.5], DEFAULT_BASELINE).unwrap();
        assert_eq!(seg.events.len(), 2);
        for e in &seg.events {
            assert_eq!(e.channel_count(), 3);
            assert_eq!(e.sample_count(), 1750);
        }
        assert_ne!(seg.events[0], seg.events[1]);
    }

    #[test]
    fn ragged_recording_rejected() {
        assert!(EegRecording::new(vec![vec![0.0; 3], vec![0.0; 4]], 250.0).is_err());
        assert!(EegRecording::new(vec![], 0.0).is_err());
    }

    #[test]
    fn qc_flags_large_channels() {
        let rec = EegRecording::new(vec![vec![1.0, -5.0], vec![500.0, 0.0]], 250.0).unwrap();
        let qc = channel_qc(&rec, 100.0);
        assert_eq!(qc[0].peak_abs, 5.0);
        assert!(!qc[0].flagged && qc[1].flagged);
    }
}
