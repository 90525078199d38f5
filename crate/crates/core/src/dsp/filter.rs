use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::EegRecording;
use crate::error::{Error, Result};

/// One second-order section, `a[0]` normalised to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        (self.b[0] + self.b[1] * z_inv + self.b[2] * z2) / (self.a[0] + self.a[1] * z_inv + self.a[2] * z2)
    }

    /// Roots of `z^2 + a1 z + a2`.
    pub fn poles(&self) -> [Complex64; 2] {
        let a1 = Complex64::new(self.a[1], 0.0);
        let a2 = Complex64::new(self.a[2], 0.0);
        let disc = (a1 * a1 - 4.0 * a2).sqrt();
        [(-a1 + disc) / 2.0, (-a1 - disc) / 2.0]
    }
}

/// Cascade of second-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    pub sections: Vec<Biquad>,
    pub sample_rate: f64,
}

impl SosFilter {
    /// Digital Butterworth bandpass of the given prototype order, designed by
    /// the bilinear transform with pre-warped band edges. The result has
    /// `order` sections (`2 * order` poles) and unit gain at the geometric
    /// centre of the band.
    pub fn butterworth_bandpass(low_hz: f64, high_hz: f64, order: usize, sample_rate: f64) -> Result<Self> {
        let nyquist = sample_rate / 2.0;
        if !(low_hz > 0.0 && low_hz < high_hz && high_hz < nyquist) {
            return Err(Error::InvalidConfig(format!(
                "bandpass cutoffs must satisfy 0 < {low_hz} < {high_hz} < {nyquist}"
            )));
        }
        if order == 0 {
            return Err(Error::InvalidConfig("filter order must be positive".into()));
        }
        let fs2 = 2.0 * sample_rate;
        let w1 = fs2 * (PI * low_hz / sample_rate).tan();
        let w2 = fs2 * (PI * high_hz / sample_rate).tan();
        let bw = w2 - w1;
        let w0_sq = w1 * w2;

        let mut z_poles = Vec::with_capacity(2 * order);
        for k in 0..order {
            let theta = PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
            let p = Complex64::from_polar(1.0, theta);
            let pb = p * bw;
            let disc = (pb * pb - 4.0 * w0_sq).sqrt();
            for s in [(pb + disc) / 2.0, (pb - disc) / 2.0] {
                z_poles.push((fs2 + s) / (fs2 - s));
            }
        }

        let eps = 1e-9;
        let mut complex: Vec<Complex64> = z_poles.iter().copied().filter(|z| z.im > eps).collect();
        let mut real: Vec<f64> = z_poles.iter().filter(|z| z.im.abs() <= eps).map(|z| z.re).collect();
        if complex.len() * 2 + real.len() != z_poles.len() || real.len() % 2 != 0 {
            return Err(Error::Numeric("could not pair bandpass poles".into()));
        }
        complex.sort_by(|a, b| a.arg().total_cmp(&b.arg()));
        real.sort_by(f64::total_cmp);

        let mut sections = Vec::with_capacity(order);
        for p in complex {
            sections.push(Biquad {
                b: [1.0, 0.0, -1.0],
                a: [1.0, -2.0 * p.re, p.norm_sqr()],
            });
        }
        for pair in real.chunks(2) {
            sections.push(Biquad {
                b: [1.0, 0.0, -1.0],
                a: [1.0, -(pair[0] + pair[1]), pair[0] * pair[1]],
            });
        }

        let mut filter = SosFilter { sections, sample_rate };
        let centre = 2.0 * (w0_sq.sqrt() / fs2).atan();
        let gain = filter.response_at_omega(centre).norm();
        if !(gain > 0.0) || !gain.is_finite() {
            return Err(Error::Numeric("degenerate bandpass gain".into()));
        }
        let g = gain.powf(-1.0 / filter.sections.len() as f64);
        for s in &mut filter.sections {
            s.b.iter_mut().for_each(|b| *b *= g);
        }
        Ok(filter)
    }

    fn response_at_omega(&self, omega: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -omega);
        self.sections.iter().map(|s| s.response(z_inv)).product()
    }

    /// Complex frequency response at `freq_hz`.
    pub fn response(&self, freq_hz: f64) -> Complex64 {
        self.response_at_omega(2.0 * PI * freq_hz / self.sample_rate)
    }

    pub fn poles(&self) -> Vec<Complex64> {
        self.sections.iter().flat_map(|s| s.poles()).collect()
    }

    /// Causal single pass, transposed direct form II, zero initial state.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for s in &self.sections {
            let (mut z1, mut z2) = (0.0, 0.0);
            for v in y.iter_mut() {
                let input = *v;
                let out = s.b[0] * input + z1;
                z1 = s.b[1] * input - s.a[1] * out + z2;
                z2 = s.b[2] * input - s.a[2] * out;
                *v = out;
            }
        }
        y
    }

    /// Forward then time-reversed pass; zero phase, squared magnitude.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.filter(x);
        y.reverse();
        let mut y = self.filter(&y);
        y.reverse();
        y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandpassConfig {
    pub low_hz: f64,
    pub high_hz: f64,
    pub order: usize,
    /// Forward-backward filtering instead of a single causal pass.
    #[serde(default)]
    pub zero_phase: bool,
}

impl Default for BandpassConfig {
    fn default() -> Self {
        Self {
            low_hz: 1.0,
            high_hz: 40.0,
            order: 5,
            zero_phase: false,
        }
    }
}

pub fn butterworth_bandpass(rec: &EegRecording, cfg: &BandpassConfig) -> Result<EegRecording> {
    let filter = SosFilter::butterworth_bandpass(cfg.low_hz, cfg.high_hz, cfg.order, rec.sample_rate)?;
    Ok(if cfg.zero_phase {
        rec.map_channels(|ch| filter.filtfilt(ch))
    } else {
        rec.map_channels(|ch| filter.filter(ch))
    })
}

/// Closed-form magnitude of the bilinear-mapped analog Butterworth bandpass:
/// `1 / sqrt(1 + ((W^2 - W0^2) / (W * BW))^(2N))` with pre-warped `W`.
pub fn analog_bandpass_magnitude(freq_hz: f64, low_hz: f64, high_hz: f64, order: usize, sample_rate: f64) -> f64 {
    let warp = |f: f64| 2.0 * sample_rate * (PI * f / sample_rate).tan();
    let (w1, w2, w) = (warp(low_hz), warp(high_hz), warp(freq_hz));
    if w == 0.0 {
        return 0.0;
    }
    let ratio = (w * w - w1 * w2) / (w * (w2 - w1));
    1.0 / (1.0 + ratio.powi(2 * order as i32)).sqrt()
}
