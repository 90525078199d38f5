use std::collections::HashMap;

use super::FeatureConfig;
use crate::data::Dataset;
use crate::dsp::format::read_eeg;
use crate::dsp::{spectrogram_stack, EegRecording};
use crate::error::{Error, Result};
use crate::fuzzy::VadRating;

/// Log-power spectrogram of one segment, laid out `bins x frames x channels`.
pub fn segment_features(segment: &EegRecording, cfg: &FeatureConfig) -> Result<([usize; 3], Vec<f64>)> {
    let stack = spectrogram_stack(segment, &cfg.stft, cfg.max_hz)?;
    let mut image = stack.to_hwc();
    for v in &mut image {
        *v = (*v + cfg.log_floor).ln();
    }
    Ok(([stack.bins, stack.frames, stack.channels], image))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSample {
    pub sample_id: String,
    pub participant_id: String,
    pub label: usize,
    pub rating: VadRating,
    pub image: Vec<f64>,
}

/// Spectrogram images plus labels and ratings for a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    /// `[bins, frames, channels]`.
    pub shape: [usize; 3],
    pub class_names: Vec<String>,
    pub samples: Vec<FeatureSample>,
}

impl FeatureSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn ratings(&self) -> Vec<VadRating> {
        self.samples.iter().map(|s| s.rating).collect()
    }

    /// The samples of `dataset`, labelled with its vocabulary. Every record
    /// must have been extracted into `self`.
    pub fn select(&self, dataset: &Dataset) -> Result<FeatureSet> {
        let by_id: HashMap<&str, &FeatureSample> =
            self.samples.iter().map(|s| (s.sample_id.as_str(), s)).collect();
        let samples = dataset
            .records
            .iter()
            .zip(dataset.labels())
            .map(|(r, label)| {
                let s = by_id
                    .get(r.sample_id.as_str())
                    .ok_or_else(|| Error::UndefinedIndex(format!("no features for sample {}", r.sample_id)))?;
                Ok(FeatureSample {
                    label,
                    rating: r.rating,
                    ..(*s).clone()
                })
            })
            .collect::<Result<_>>()?;
        Ok(FeatureSet {
            shape: self.shape,
            class_names: dataset.vocabulary.clone(),
            samples,
        })
    }
}

/// Reads every segment of `dataset` and computes its spectrogram image.
pub fn extract_features(dataset: &Dataset, cfg: &FeatureConfig) -> Result<FeatureSet> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let labels = dataset.labels();
    let mut shape = None;
    let mut samples = Vec::with_capacity(dataset.len());
    for (r, label) in dataset.records.iter().zip(labels) {
        let rec = read_eeg(&r.eeg_path)?;
        let (s, image) = segment_features(&rec, cfg)?;
        match shape {
            None => shape = Some(s),
            Some(expected) if expected != s => {
                return Err(Error::Shape(format!(
                    "sample {} has spectrogram shape {s:?}, expected {expected:?}",
                    r.sample_id
                )))
            }
            Some(_) => {}
        }
        samples.push(FeatureSample {
            sample_id: r.sample_id.clone(),
            participant_id: r.participant_id.clone(),
            label,
            rating: r.rating,
            image,
        });
    }
    Ok(FeatureSet {
        shape: shape.expect("non-empty"),
        class_names: dataset.vocabulary.clone(),
        samples,
    })
}

/// Per (bin, channel) standardisation fitted on training images.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScaler {
    pub shape: [usize; 3],
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl FeatureScaler {
    pub fn identity(shape: [usize; 3]) -> Self {
        let n = shape[0] * shape[2];
        Self {
            shape,
            mean: vec![0.0; n],
            std: vec![1.0; n],
        }
    }

    pub fn fit(set: &FeatureSet) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let [h, w, c] = set.shape;
        let mut sum = vec![0.0; h * c];
        let mut sq = vec![0.0; h * c];
        for s in &set.samples {
            for i in 0..h {
                for j in 0..w {
                    for k in 0..c {
                        let v = s.image[(i * w + j) * c + k];
                        sum[i * c + k] += v;
                        sq[i * c + k] += v * v;
                    }
                }
            }
        }
        let count = (set.len() * w) as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / count).collect();
        let std = sq
            .iter()
            .zip(&mean)
            .map(|(q, m)| {
                let var = (q / count - m * m).max(0.0);
                if var > 1e-24 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self {
            shape: set.shape,
            mean,
            std,
        })
    }

    pub fn apply(&self, image: &[f64], out: &mut Vec<f64>) {
        let [_, w, c] = self.shape;
        for (idx, v) in image.iter().enumerate() {
            let k = idx % c;
            let i = idx / (w * c);
            let p = i * c + k;
            out.push((v - self.mean[p]) / self.std[p]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_segment_shape() {
        let seg = EegRecording::new(vec![vec![1.0; 1750]; 32], 250.0).unwrap();
        let (shape, image) = segment_features(&seg, &FeatureConfig::default()).unwrap();
        assert_eq!(shape, [21, 26, 32]);
        assert_eq!(image.len(), 21 * 26 * 32);
        assert!(image.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn scaler_standardises_each_bin_channel() {
        let shape = [2, 3, 2];
        let samples = (0..4)
            .map(|s| FeatureSample {
                sample_id: format!("s{s}"),
                participant_id: "p".into(),
                label: 0,
                rating: VadRating::new(5.0, 5.0, 5.0).unwrap(),
                image: (0..12).map(|i| (i * (s + 1)) as f64).collect(),
            })
            .collect();
        let set = FeatureSet {
            shape,
            class_names: vec!["a".into()],
            samples,
        };
        let scaler = FeatureScaler::fit(&set).unwrap();
        let mut all = Vec::new();
        for s in &set.samples {
            scaler.apply(&s.image, &mut all);
        }
        for i in 0..2 {
            for k in 0..2 {
                let vals: Vec<f64> = (0..4)
                    .flat_map(|s| (0..3).map(move |j| (s, j)))
                    .map(|(s, j)| all[s * 12 + (i * 3 + j) * 2 + k])
                    .collect();
                let m = vals.iter().sum::<f64>() / vals.len() as f64;
                let v = vals.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / vals.len() as f64;
                assert!(m.abs() < 1e-12);
                assert!((v - 1.0).abs() < 1e-9);
            }
        }
    }
}
