//! The fusion classifiers and the experiments built on them.
//!
//! Every variant shares a spatial CNN over the stacked spectrogram and a
//! two-layer LSTM fed by `R` copies of the flattened CNN output. A parallel
//! fuzzy branch turns the VAD rating into a feature vector; the temporal and
//! fuzzy features are concatenated (temporal first) and mapped to class
//! logits by one dense layer.

mod experiments;
mod features;
mod network;
mod training;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clustering::FcmConfig;
use crate::dsp::StftConfig;
use crate::error::{Error, Result};
use crate::fuzzy::MembershipParams;
use crate::lattice::CUBOID_COUNT;
use crate::nn::TrainingConfig;

pub use experiments::{
    ablation_experiment, cluster_sweep_experiment, cross_subject_experiment, AblationRow, ClusterSweepRow,
    CrossSubjectReport, CrossSubjectSplit, GroupPair,
};
pub use features::{extract_features, segment_features, FeatureSample, FeatureScaler, FeatureSet};
pub use network::{Batch, FusionNet, LossParts, NetOutput};
pub use training::{
    train, write_confusion_csv, write_report, Evaluation, FusionModel, TrainReport,
};

/// Which fuzzy representation feeds the branch, or which ablation replaces it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    /// Interval type-2 degrees (18 values).
    Model1Type2,
    /// FCM memberships of the rating against centroids fitted on the
    /// training ratings.
    Model2FcmClusters { clusters: usize },
    /// Type-2 degrees mapped to a 27-way cuboid distribution that is both an
    /// auxiliary output and the fused feature. Loss `CE24 + lambda * CE27`.
    Model3CuboidDual { lambda: f64 },
    /// Raw (valence, arousal, dominance).
    CrispVad,
    /// No fuzzy branch at all.
    NoVad,
    /// Unadjusted UMF degrees only (9 values).
    Type1Umf,
    /// Unadjusted LMF degrees only (9 values).
    Type1Lmf,
}

impl ModelKind {
    /// Model-1 followed by the four ablations, the order used in comparison tables.
    pub const ABLATION_ORDER: [ModelKind; 5] = [
        ModelKind::Model1Type2,
        ModelKind::CrispVad,
        ModelKind::NoVad,
        ModelKind::Type1Umf,
        ModelKind::Type1Lmf,
    ];

    pub fn model2() -> Self {
        ModelKind::Model2FcmClusters { clusters: 4 }
    }

    pub fn model3() -> Self {
        ModelKind::Model3CuboidDual { lambda: 1.0 }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Model1Type2 => "model1",
            ModelKind::Model2FcmClusters { .. } => "model2",
            ModelKind::Model3CuboidDual { .. } => "model3",
            ModelKind::CrispVad => "crisp-vad",
            ModelKind::NoVad => "no-vad",
            ModelKind::Type1Umf => "type1-umf",
            ModelKind::Type1Lmf => "type1-lmf",
        }
    }

    /// Width of the branch input, 0 when there is no branch.
    pub fn fuzzy_input_width(self) -> usize {
        match self {
            ModelKind::Model1Type2 | ModelKind::Model3CuboidDual { .. } => 18,
            ModelKind::Model2FcmClusters { clusters } => clusters,
            ModelKind::CrispVad => 3,
            ModelKind::NoVad => 0,
            ModelKind::Type1Umf | ModelKind::Type1Lmf => 9,
        }
    }

    /// Width of the branch output that is concatenated before the head.
    pub fn fuzzy_output_width(self, arch: &ArchConfig) -> usize {
        match self {
            ModelKind::NoVad => 0,
            ModelKind::Model3CuboidDual { .. } => CUBOID_COUNT,
            _ => arch.fuzzy_out,
        }
    }

    pub fn has_branch(self) -> bool {
        self != ModelKind::NoVad
    }

    pub fn lambda(self) -> Option<f64> {
        match self {
            ModelKind::Model3CuboidDual { lambda } => Some(lambda),
            _ => None,
        }
    }

    pub fn validate(self) -> Result<()> {
        match self {
            ModelKind::Model2FcmClusters { clusters } if clusters < 2 => {
                Err(Error::InvalidConfig(format!("model2 needs >= 2 clusters, got {clusters}")))
            }
            ModelKind::Model3CuboidDual { lambda } if !(lambda >= 0.0 && lambda.is_finite()) => {
                Err(Error::InvalidConfig(format!("model3 lambda must be finite and >= 0, got {lambda}")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    /// Accepts the short names; `model2` and `model3` take default settings.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "model1" => ModelKind::Model1Type2,
            "model2" => ModelKind::model2(),
            "model3" => ModelKind::model3(),
            "crisp-vad" => ModelKind::CrispVad,
            "no-vad" => ModelKind::NoVad,
            "type1-umf" => ModelKind::Type1Umf,
            "type1-lmf" => ModelKind::Type1Lmf,
            other => return Err(Error::InvalidConfig(format!("unknown model {other:?}"))),
        })
    }
}

/// Layer sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchConfig {
    pub conv1_filters: usize,
    pub conv2_filters: usize,
    pub kernel: usize,
    pub pool: usize,
    pub lstm1_units: usize,
    pub lstm2_units: usize,
    pub fuzzy_hidden: usize,
    pub fuzzy_out: usize,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            conv1_filters: 32,
            conv2_filters: 64,
            kernel: 3,
            pool: 2,
            lstm1_units: 128,
            lstm2_units: 64,
            fuzzy_hidden: 64,
            fuzzy_out: 32,
        }
    }
}

impl ArchConfig {
    pub fn validate(&self) -> Result<()> {
        let sizes = [
            self.conv1_filters,
            self.conv2_filters,
            self.kernel,
            self.pool,
            self.lstm1_units,
            self.lstm2_units,
            self.fuzzy_hidden,
            self.fuzzy_out,
        ];
        if sizes.contains(&0) {
            return Err(Error::InvalidConfig("all layer sizes must be positive".into()));
        }
        Ok(())
    }

    /// Spatial shape after each stage for a `h x w` input:
    /// conv1, pool1, conv2, pool2.
    pub fn stage_shapes(&self, h: usize, w: usize) -> Result<[(usize, usize); 4]> {
        let conv = |h: usize, w: usize, stage: &str| {
            if h < self.kernel || w < self.kernel {
                Err(Error::Shape(format!(
                    "{stage}: input {h}x{w} smaller than the {k}x{k} kernel",
                    k = self.kernel
                )))
            } else {
                Ok((h - self.kernel + 1, w - self.kernel + 1))
            }
        };
        let pool = |h: usize, w: usize, stage: &str| {
            if h < self.pool || w < self.pool {
                Err(Error::Shape(format!(
                    "{stage}: input {h}x{w} smaller than the {p}x{p} pooling window",
                    p = self.pool
                )))
            } else {
                Ok((h / self.pool, w / self.pool))
            }
        };
        let c1 = conv(h, w, "conv1")?;
        let p1 = pool(c1.0, c1.1, "pool1")?;
        let c2 = conv(p1.0, p1.1, "conv2")?;
        let p2 = pool(c2.0, c2.1, "pool2")?;
        Ok([c1, p1, c2, p2])
    }
}

/// Spectrogram feature settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureConfig {
    pub stft: StftConfig,
    /// Highest frequency kept, in Hz.
    pub max_hz: f64,
    /// Added to the power before taking the natural log.
    pub log_floor: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            stft: StftConfig::default(),
            max_hz: 40.0,
            log_floor: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub class_count: usize,
    /// Fraction of each class used for training in the stratified split.
    pub train_fraction: f64,
    pub arch: ArchConfig,
    pub training: TrainingConfig,
    pub features: FeatureConfig,
    pub membership: MembershipParams,
    /// Template for Model-2's clustering; `clusters` comes from the kind.
    pub fcm: FcmConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::Model1Type2,
            class_count: 24,
            train_fraction: 0.8,
            arch: ArchConfig::default(),
            training: TrainingConfig::default(),
            features: FeatureConfig::default(),
            membership: MembershipParams::default(),
            fcm: FcmConfig::default(),
        }
    }
}

impl ModelConfig {
    pub fn with_kind(&self, kind: ModelKind) -> Self {
        Self { kind, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        self.kind.validate()?;
        self.arch.validate()?;
        self.training.validate()?;
        self.features.stft.validate()?;
        self.membership.validate()?;
        self.fcm.validate()?;
        if self.class_count < 2 {
            return Err(Error::InvalidConfig("class_count must be >= 2".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!("train_fraction {} not in (0, 1)", self.train_fraction)));
        }
        if !(self.features.max_hz > 0.0) || !(self.features.log_floor > 0.0) {
            return Err(Error::InvalidConfig("max_hz and log_floor must be positive".into()));
        }
        Ok(())
    }

    /// Parameter count derived from the layer sizes alone, for an input of
    /// `bins x frames x channels`.
    pub fn parameter_count(&self, input: [usize; 3]) -> Result<usize> {
        let a = &self.arch;
        let [.., (ph, pw)] = a.stage_shapes(input[0], input[1])?;
        let k2 = a.kernel * a.kernel;
        let conv1 = k2 * input[2] * a.conv1_filters + a.conv1_filters;
        let conv2 = k2 * a.conv1_filters * a.conv2_filters + a.conv2_filters;
        let flat = ph * pw * a.conv2_filters;
        let lstm = |inp: usize, h: usize| 4 * h * (inp + h + 1);
        let temporal = lstm(flat, a.lstm1_units) + lstm(a.lstm1_units, a.lstm2_units);
        let fin = self.kind.fuzzy_input_width();
        let fout = self.kind.fuzzy_output_width(a);
        let branch = if self.kind.has_branch() {
            (fin + 1) * a.fuzzy_hidden + (a.fuzzy_hidden + 1) * fout
        } else {
            0
        };
        let head = (a.lstm2_units + fout + 1) * self.class_count;
        Ok(conv1 + conv2 + temporal + branch + head)
    }
}
