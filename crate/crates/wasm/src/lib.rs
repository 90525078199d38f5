//! Bindings for the static demo page in `www/`.
//!
//! Each export has a plain Rust counterpart returning `fuzzvad::Result`, so
//! the logic can be tested natively.

use fuzzvad::clustering::{sweep_clusters, FcmConfig, Point};
use fuzzvad::dsp::{spectrogram_stack, EegRecording, StftConfig};
use fuzzvad::{Dimension, Error, MembershipParams, Result, Term};
use wasm_bindgen::prelude::*;

/// Type-2 envelopes of one dimension sampled on `[1, 9]`.
///
/// `lower` and `upper` hold the three terms back to back (Low, Med, High),
/// `samples` values each.
#[wasm_bindgen]
pub struct Curves {
    xs: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    means: Vec<f64>,
}

#[wasm_bindgen]
impl Curves {
    #[wasm_bindgen(getter)]
    pub fn xs(&self) -> Vec<f64> {
        self.xs.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn lower(&self) -> Vec<f64> {
        self.lower.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn upper(&self) -> Vec<f64> {
        self.upper.clone()
    }

    /// Shared mean of each term after the FoU adjustment.
    #[wasm_bindgen(getter)]
    pub fn means(&self) -> Vec<f64> {
        self.means.clone()
    }
}

pub fn curves(params_json: Option<&str>, dimension: usize, samples: usize) -> Result<Curves> {
    let params = match params_json {
        Some(text) => MembershipParams::from_json(text)?,
        None => MembershipParams::default(),
    };
    let dim = *Dimension::ALL
        .get(dimension)
        .ok_or_else(|| Error::InvalidConfig(format!("dimension index {dimension} is not 0, 1 or 2")))?;
    if samples < 2 {
        return Err(Error::InvalidConfig("need at least two samples".into()));
    }
    let fz = fuzzvad::fuzzy::Fuzzifier::new(params)?;
    let adjusted = fz.adjusted(dim);
    let xs: Vec<f64> = (0..samples).map(|i| 1.0 + 8.0 * i as f64 / (samples - 1) as f64).collect();
    let mut lower = Vec::with_capacity(3 * samples);
    let mut upper = Vec::with_capacity(3 * samples);
    for term in Term::ALL {
        for &x in &xs {
            let (lo, hi) = adjusted.envelope(term, x)?;
            lower.push(lo);
            upper.push(hi);
        }
    }
    let means = Term::ALL.iter().map(|t| adjusted.term(*t).mean()).collect();
    Ok(Curves { xs, lower, upper, means })
}

/// Fuzzy C-means sweep over `c_min..=c_max`, keeping the count with the
/// highest fuzzy silhouette.
#[wasm_bindgen]
pub struct Clustering {
    clusters: usize,
    centroids: Vec<f64>,
    labels: Vec<u32>,
    confidence: Vec<f64>,
    silhouettes: Vec<f64>,
}

#[wasm_bindgen]
impl Clustering {
    #[wasm_bindgen(getter)]
    pub fn clusters(&self) -> usize {
        self.clusters
    }

    /// `clusters x 3`, row-major.
    #[wasm_bindgen(getter)]
    pub fn centroids(&self) -> Vec<f64> {
        self.centroids.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn labels(&self) -> Vec<u32> {
        self.labels.clone()
    }

    /// Largest membership of each point.
    #[wasm_bindgen(getter)]
    pub fn confidence(&self) -> Vec<f64> {
        self.confidence.clone()
    }

    /// Fuzzy silhouette for each count starting at `c_min`.
    #[wasm_bindgen(getter)]
    pub fn silhouettes(&self) -> Vec<f64> {
        self.silhouettes.clone()
    }
}

pub fn cluster(points: &[f64], c_min: usize, c_max: usize, fuzzifier: f64, seed: u64) -> Result<Clustering> {
    if points.len() % 3 != 0 {
        return Err(Error::Shape(format!("{} values do not form (v, a, d) triples", points.len())));
    }
    if c_min > c_max {
        return Err(Error::InvalidConfig(format!("c_min {c_min} exceeds c_max {c_max}")));
    }
    let pts: Vec<Point> = points.chunks_exact(3).map(|p| [p[0], p[1], p[2]]).collect();
    let template = FcmConfig {
        fuzzifier,
        seed,
        ..FcmConfig::default()
    };
    let rows = sweep_clusters(&pts, c_min..=c_max, &template, 1.0)?;
    let best = rows
        .iter()
        .fold(None::<&fuzzvad::clustering::SweepRow>, |b, r| match b {
            Some(b) if b.fuzzy_silhouette >= r.fuzzy_silhouette => Some(b),
            _ => Some(r),
        })
        .ok_or_else(|| Error::InvalidConfig("empty cluster range".into()))?;
    let fit = &best.result;
    Ok(Clustering {
        clusters: best.clusters,
        centroids: fit.centroids.iter().flatten().copied().collect(),
        labels: fit.hard_assignments().into_iter().map(|l| l as u32).collect(),
        confidence: fit.memberships.iter().map(|r| r.iter().copied().fold(0.0, f64::max)).collect(),
        silhouettes: rows.iter().map(|r| r.fuzzy_silhouette).collect(),
    })
}

/// Power spectrogram in decibels, `bins x frames` row-major.
#[wasm_bindgen]
pub struct Spectrogram {
    bins: usize,
    frames: usize,
    bin_width: f64,
    frame_step: f64,
    db: Vec<f64>,
}

#[wasm_bindgen]
impl Spectrogram {
    #[wasm_bindgen(getter)]
    pub fn bins(&self) -> usize {
        self.bins
    }

    #[wasm_bindgen(getter)]
    pub fn frames(&self) -> usize {
        self.frames
    }

    /// Hz per bin.
    #[wasm_bindgen(getter)]
    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    /// Seconds between frames.
    #[wasm_bindgen(getter)]
    pub fn frame_step(&self) -> f64 {
        self.frame_step
    }

    #[wasm_bindgen(getter)]
    pub fn db(&self) -> Vec<f64> {
        self.db.clone()
    }
}

pub fn spectrogram(signal: &[f64], sample_rate: f64, max_hz: f64) -> Result<Spectrogram> {
    let rec = EegRecording::new(vec![signal.to_vec()], sample_rate)?;
    let cfg = StftConfig::default();
    let stack = spectrogram_stack(&rec, &cfg, max_hz)?;
    Ok(Spectrogram {
        bins: stack.bins,
        frames: stack.frames,
        bin_width: stack.bin_width,
        frame_step: cfg.hop as f64 / sample_rate,
        db: stack.data.iter().map(|p| 10.0 * (p + 1e-12).log10()).collect(),
    })
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = defaultParams)]
pub fn default_params_js() -> String {
    MembershipParams::defaults_json().to_owned()
}

#[wasm_bindgen(js_name = membershipCurves)]
pub fn curves_js(params_json: Option<String>, dimension: usize, samples: usize) -> std::result::Result<Curves, JsError> {
    curves(params_json.as_deref(), dimension, samples).map_err(js)
}

#[wasm_bindgen(js_name = fuzzyCMeans)]
pub fn cluster_js(
    points: &[f64],
    c_min: usize,
    c_max: usize,
    fuzzifier: f64,
    seed: u64,
) -> std::result::Result<Clustering, JsError> {
    cluster(points, c_min, c_max, fuzzifier, seed).map_err(js)
}

#[wasm_bindgen(js_name = spectrogram)]
pub fn spectrogram_js(signal: &[f64], sample_rate: f64, max_hz: f64) -> std::result::Result<Spectrogram, JsError> {
    spectrogram(signal, sample_rate, max_hz).map_err(js)
}
