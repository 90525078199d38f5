use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::EegRecording;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    /// Periodic Hann taper.
    Hann,
    Hamming,
    Rectangular,
}

impl WindowKind {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        let n = len as f64;
        (0..len)
            .map(|k| {
                let phase = 2.0 * PI * k as f64 / n;
                match self {
                    WindowKind::Hann => 0.5 - 0.5 * phase.cos(),
                    WindowKind::Hamming => 0.54 - 0.46 * phase.cos(),
                    WindowKind::Rectangular => 1.0,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StftConfig {
    pub window_length: usize,
    pub hop: usize,
    pub window: WindowKind,
    pub fft_length: usize,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            window_length: 128,
            hop: 64,
            window: WindowKind::Hann,
            fft_length: 128,
        }
    }
}

impl StftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_length < 2 || self.hop == 0 {
            return Err(Error::InvalidConfig("window length must be >= 2 and hop > 0".into()));
        }
        if self.hop * 2 != self.window_length {
            return Err(Error::InvalidConfig(format!(
                "hop {} must be half the window length {}",
                self.hop, self.window_length
            )));
        }
        if self.window_length > self.fft_length {
            return Err(Error::InvalidConfig(format!(
                "window length {} exceeds FFT length {}",
                self.window_length, self.fft_length
            )));
        }
        Ok(())
    }

    pub fn bin_count(&self) -> usize {
        self.fft_length / 2 + 1
    }

    /// Number of full frames over `samples`; the partial tail is dropped.
    pub fn frame_count(&self, samples: usize) -> usize {
        if samples < self.window_length {
            0
        } else {
            (samples - self.window_length) / self.hop + 1
        }
    }

    pub fn bin_width(&self, sample_rate: f64) -> f64 {
        sample_rate / self.fft_length as f64
    }
}

/// Complex `bins x frames` matrix, bin-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    pub bins: usize,
    pub frames: usize,
    pub data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn get(&self, bin: usize, frame: usize) -> Complex64 {
        self.data[bin * self.frames + frame]
    }
}

struct StftPlan {
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    cfg: StftConfig,
}

impl StftPlan {
    fn new(cfg: &StftConfig) -> Result<Self> {
        cfg.validate()?;
        let fft = FftPlanner::new().plan_fft_forward(cfg.fft_length);
        Ok(Self {
            fft,
            window: cfg.window.coefficients(cfg.window_length),
            cfg: *cfg,
        })
    }

    fn run(&self, signal: &[f64]) -> Result<ComplexMatrix> {
        let cfg = &self.cfg;
        if signal.len() < cfg.window_length {
            return Err(Error::Shape(format!(
                "signal of {} samples is shorter than the {}-sample window",
                signal.len(),
                cfg.window_length
            )));
        }
        let frames = cfg.frame_count(signal.len());
        let bins = cfg.bin_count();
        let mut data = vec![Complex64::new(0.0, 0.0); bins * frames];
        let mut buf = vec![Complex64::new(0.0, 0.0); cfg.fft_length];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        for frame in 0..frames {
            let start = frame * cfg.hop;
            buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
            for (k, w) in self.window.iter().enumerate() {
                buf[k] = Complex64::new(signal[start + k] * w, 0.0);
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for bin in 0..bins {
                data[bin * frames + frame] = buf[bin];
            }
        }
        Ok(ComplexMatrix { bins, frames, data })
    }
}

/// One-sided STFT: bins `0..=fft_length/2`, frames every `hop` samples.
pub fn stft(signal: &[f64], cfg: &StftConfig) -> Result<ComplexMatrix> {
    StftPlan::new(cfg)?.run(signal)
}

/// Power spectrograms of every channel, stacked channel-major as
/// `channels x bins x frames`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrogramStack {
    pub channels: usize,
    pub bins: usize,
    pub frames: usize,
    pub data: Vec<f64>,
    pub bin_width: f64,
    pub frame_times: Vec<f64>,
}

impl SpectrogramStack {
    pub fn get(&self, channel: usize, bin: usize, frame: usize) -> f64 {
        self.data[(channel * self.bins + bin) * self.frames + frame]
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.channels, self.bins, self.frames]
    }

    /// Re-laid out as `bins x frames x channels`, the image layout the
    /// convolutional stage consumes.
    pub fn to_hwc(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.data.len()];
        for c in 0..self.channels {
            for b in 0..self.bins {
                for f in 0..self.frames {
                    out[(b * self.frames + f) * self.channels + c] = self.get(c, b, f);
                }
            }
        }
        out
    }
}

pub fn spectrogram_stack(segment: &EegRecording, cfg: &StftConfig, max_hz: f64) -> Result<SpectrogramStack> {
    let plan = StftPlan::new(cfg)?;
    let bin_width = cfg.bin_width(segment.sample_rate);
    let kept = ((max_hz / bin_width).floor() as usize + 1).min(cfg.bin_count());
    let frames = cfg.frame_count(segment.sample_count());
    let mut data = Vec::with_capacity(segment.channel_count() * kept * frames);
    for ch in &segment.data {
        let spec = plan.run(ch)?;
        data.extend(spec.data[..kept * frames].iter().map(|c| c.norm_sqr()));
    }
    let frame_times = (0..frames)
        .map(|f| (f * cfg.hop) as f64 / segment.sample_rate)
        .collect();
    Ok(SpectrogramStack {
        channels: segment.channel_count(),
        bins: kept,
        frames,
        data,
        bin_width,
        frame_times,
    })
}
