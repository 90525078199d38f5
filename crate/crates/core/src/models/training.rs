use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::features::{FeatureScaler, FeatureSet};
use super::network::{Batch, FusionNet};
use super::{ModelConfig, ModelKind};
use crate::clustering::{cluster_membership_features, fcm_fit, FcmConfig, FcmResult};
use crate::error::{Error, Result};
use crate::fuzzy::{Family, Fuzzifier, VadRating};
use crate::lattice::vad_to_cuboid;
use crate::nn::{read_checkpoint, write_checkpoint, Adam, Mode, NnRng, Optimizer, OptimizerKind, Param, Sgd, Tensor};

const EVAL_BATCH: usize = 64;

/// A network together with everything needed to featurise new samples.
#[derive(Debug, Clone)]
pub struct FusionModel {
    pub config: ModelConfig,
    pub net: FusionNet,
    pub scaler: FeatureScaler,
    pub fuzzifier: Fuzzifier,
    /// Model-2 only.
    pub fcm: Option<FcmResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub predictions: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub model: String,
    pub seed: u64,
    pub config: ModelConfig,
    pub class_names: Vec<String>,
    pub parameter_count: usize,
    pub train_count: usize,
    pub validation_count: usize,
    /// Mean training loss per epoch (the total loss for Model-3).
    pub epoch_losses: Vec<f64>,
    /// Model-3 only: mean 27-way cuboid loss per epoch.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epoch_lattice_losses: Option<Vec<f64>>,
    pub train_accuracy: f64,
    /// Accuracy on the validation set.
    pub accuracy: f64,
    pub confusion: Vec<Vec<usize>>,
}

impl FusionModel {
    /// Builds an initialised model for inputs shaped like `train`. Model-2
    /// fits its clusters on the training ratings here.
    pub fn build(config: &ModelConfig, train: &FeatureSet) -> Result<Self> {
        config.validate()?;
        if train.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let fuzzifier = Fuzzifier::new(config.membership)?;
        let fcm = match config.kind {
            ModelKind::Model2FcmClusters { clusters } => {
                let points: Vec<[f64; 3]> = train.ratings().iter().map(|r| r.to_array()).collect();
                Some(fcm_fit(&points, &FcmConfig { clusters, ..config.fcm })?)
            }
            _ => None,
        };
        let t = &config.training;
        let mut net = FusionNet::new(
            config.kind,
            &config.arch,
            config.class_count,
            train.shape,
            t.dropout_rate,
            t.repeat_count,
        )?;
        net.init(&mut NnRng::seed_from_u64(t.seed));
        Ok(Self {
            config: config.clone(),
            net,
            scaler: FeatureScaler::fit(train)?,
            fuzzifier,
            fcm,
        })
    }

    /// Branch input for one rating, `None` for the no-VAD ablation.
    pub fn phi(&self, rating: &VadRating) -> Result<Option<Vec<f64>>> {
        Ok(match self.config.kind {
            ModelKind::Model1Type2 | ModelKind::Model3CuboidDual { .. } => {
                Some(self.fuzzifier.fuzzify_type2(rating)?.0.to_vec())
            }
            ModelKind::Model2FcmClusters { .. } => {
                let fcm = self.fcm.as_ref().ok_or_else(|| Error::InvalidConfig("model2 has no clusters".into()))?;
                Some(cluster_membership_features(&rating.to_array(), fcm)?)
            }
            ModelKind::CrispVad => Some(rating.to_array().to_vec()),
            ModelKind::NoVad => None,
            ModelKind::Type1Umf => Some(self.fuzzifier.fuzzify_type1(rating, Family::Umf)?.to_vec()),
            ModelKind::Type1Lmf => Some(self.fuzzifier.fuzzify_type1(rating, Family::Lmf)?.to_vec()),
        })
    }

    pub fn batch(&self, set: &FeatureSet, indices: &[usize]) -> Result<Batch> {
        if set.shape != self.net.input_shape {
            return Err(Error::Shape(format!(
                "features shaped {:?}, model expects {:?}",
                set.shape, self.net.input_shape
            )));
        }
        let [h, w, c] = set.shape;
        let n = indices.len();
        let mut images = Vec::with_capacity(n * h * w * c);
        let mut phi = Vec::new();
        let mut labels = Vec::with_capacity(n);
        let mut cuboids = Vec::with_capacity(n);
        let lattice = self.config.kind.lambda().is_some();
        for &i in indices {
            let s = &set.samples[i];
            if s.label >= self.config.class_count {
                return Err(Error::LabelRange {
                    label: s.label,
                    classes: self.config.class_count,
                });
            }
            self.scaler.apply(&s.image, &mut images);
            if let Some(v) = self.phi(&s.rating)? {
                phi.extend(v);
            }
            labels.push(s.label);
            if lattice {
                cuboids.push(vad_to_cuboid(&self.fuzzifier, &s.rating)?.index());
            }
        }
        let width = self.config.kind.fuzzy_input_width();
        Ok(Batch {
            images: Tensor::new(vec![n, h, w, c], images)?,
            phi: if width > 0 { Some(Tensor::new(vec![n, width], phi)?) } else { None },
            labels,
            cuboids,
        })
    }

    /// Class logits for every sample, in order.
    pub fn logits(&mut self, set: &FeatureSet) -> Result<Tensor> {
        let mut data = Vec::with_capacity(set.len() * self.config.class_count);
        let idx: Vec<usize> = (0..set.len()).collect();
        let mut rng = NnRng::seed_from_u64(0);
        for chunk in idx.chunks(EVAL_BATCH) {
            let b = self.batch(set, chunk)?;
            let out = self.net.forward(&b.images, b.phi.as_ref(), Mode::Eval, &mut rng)?;
            data.extend(out.logits.data);
        }
        Tensor::new(vec![set.len(), self.config.class_count], data)
    }

    pub fn predict(&mut self, set: &FeatureSet) -> Result<Vec<usize>> {
        let logits = self.logits(set)?;
        Ok((0..logits.rows()).map(|r| argmax(logits.row(r))).collect())
    }

    /// Accuracy and confusion matrix; does not change the model.
    pub fn evaluate(&mut self, set: &FeatureSet) -> Result<Evaluation> {
        if set.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let predictions = self.predict(set)?;
        Ok(evaluation(&set.labels(), &predictions, self.config.class_count))
    }

    /// Writes a checkpoint: network parameters, the feature scaler and, for
    /// Model-2, the cluster centroids.
    pub fn save(&self, path: &Path) -> Result<()> {
        let [h, w, c] = self.scaler.shape;
        let extra = self.extra_params();
        let mut params = self.net.params();
        params.extend(extra.iter());
        let meta = serde_json::json!({
            "model": self.config,
            "input_shape": [h, w, c],
        });
        write_checkpoint(path, self.config.training.seed, meta, &params)
    }

    fn extra_params(&self) -> Vec<Param> {
        let [h, _, c] = self.scaler.shape;
        let mut mean = Param::zeros("scaler.mean", vec![h, c]);
        mean.value = self.scaler.mean.clone();
        let mut std = Param::zeros("scaler.std", vec![h, c]);
        std.value = self.scaler.std.clone();
        let mut out = vec![mean, std];
        if let Some(fcm) = &self.fcm {
            let mut centroids = Param::zeros("fcm.centroids", vec![fcm.clusters(), 3]);
            centroids.value = fcm.centroids.iter().flatten().copied().collect();
            out.push(centroids);
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (manifest, values) = read_checkpoint(path)?;
        let bad = |message: String| Error::Format {
            path: path.to_path_buf(),
            message,
        };
        let config: ModelConfig = serde_json::from_value(manifest.config["model"].clone())?;
        let shape: [usize; 3] = serde_json::from_value(manifest.config["input_shape"].clone())?;
        config.validate()?;
        let t = &config.training;
        let mut net = FusionNet::new(config.kind, &config.arch, config.class_count, shape, t.dropout_rate, t.repeat_count)?;
        let mut scaler = FeatureScaler::identity(shape);
        let mut fcm = None;
        let mut assigned = 0;
        for (entry, vals) in manifest.params.iter().zip(values) {
            match entry.name.as_str() {
                "scaler.mean" => scaler.mean = vals,
                "scaler.std" => scaler.std = vals,
                "fcm.centroids" => {
                    fcm = Some(FcmResult {
                        centroids: vals.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
                        memberships: Vec::new(),
                        fuzzifier: config.fcm.fuzzifier,
                        iterations_run: 0,
                        objective_trace: Vec::new(),
                    })
                }
                name => {
                    let mut params = net.params_mut();
                    let p = params
                        .iter_mut()
                        .find(|p| p.name == name)
                        .ok_or_else(|| bad(format!("unexpected parameter {name}")))?;
                    if p.shape != entry.shape {
                        return Err(bad(format!("parameter {name} has shape {:?}, expected {:?}", entry.shape, p.shape)));
                    }
                    p.value = vals;
                    assigned += 1;
                }
            }
        }
        if assigned != net.params().len() {
            return Err(bad(format!("checkpoint holds {assigned} of {} parameters", net.params().len())));
        }
        if matches!(config.kind, ModelKind::Model2FcmClusters { .. }) && fcm.is_none() {
            return Err(bad("model2 checkpoint lacks fcm.centroids".into()));
        }
        Ok(Self {
            fuzzifier: Fuzzifier::new(config.membership)?,
            config,
            net,
            scaler,
            fcm,
        })
    }
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

fn evaluation(labels: &[usize], predictions: &[usize], classes: usize) -> Evaluation {
    let mut confusion = vec![vec![0; classes]; classes];
    for (t, p) in labels.iter().zip(predictions) {
        confusion[*t][*p] += 1;
    }
    let correct: usize = (0..classes).map(|c| confusion[c][c]).sum();
    Evaluation {
        accuracy: correct as f64 / labels.len() as f64,
        confusion,
        predictions: predictions.to_vec(),
    }
}

fn optimizer(config: &ModelConfig) -> Box<dyn Optimizer> {
    let t = &config.training;
    match t.optimizer {
        OptimizerKind::Adam => Box::new(Adam::new(t.learning_rate, t.adam)),
        OptimizerKind::Sgd => Box::new(Sgd {
            learning_rate: t.learning_rate,
        }),
    }
}

/// Builds a model on `train`, fits it for the configured epochs and
/// evaluates it on `validation` (or on `train` when none is given).
pub fn train(config: &ModelConfig, train: &FeatureSet, validation: Option<&FeatureSet>) -> Result<(FusionModel, TrainReport)> {
    let mut model = FusionModel::build(config, train)?;
    let labels = train.labels();
    if let Some(&label) = labels.iter().find(|l| **l >= config.class_count) {
        return Err(Error::LabelRange {
            label,
            classes: config.class_count,
        });
    }
    let t = &config.training;
    let mut shuffle_rng = NnRng::seed_from_u64(t.seed);
    shuffle_rng.set_stream(1);
    let mut dropout_rng = NnRng::seed_from_u64(t.seed);
    dropout_rng.set_stream(2);
    let mut opt = optimizer(config);
    let lattice = config.kind.lambda().is_some();
    let mut epoch_losses = Vec::with_capacity(t.epochs);
    let mut lattice_losses = Vec::with_capacity(t.epochs);
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..t.epochs {
        order.shuffle(&mut shuffle_rng);
        let (mut total, mut lattice_total) = (0.0, 0.0);
        for chunk in order.chunks(t.batch_size) {
            let batch = model.batch(train, chunk)?;
            model.net.zero_grad();
            let parts = model.net.forward_backward(&batch, &mut dropout_rng)?;
            if !parts.total.is_finite() {
                return Err(Error::NonFinite(format!("training loss in epoch {}", epoch + 1)));
            }
            opt.step(&mut model.net.params_mut())?;
            total += parts.total * chunk.len() as f64;
            lattice_total += parts.ce_lattice.unwrap_or(0.0) * chunk.len() as f64;
        }
        let n = train.len() as f64;
        epoch_losses.push(total / n);
        lattice_losses.push(lattice_total / n);
        log::info!("{} epoch {}/{}: loss {:.5}", config.kind, epoch + 1, t.epochs, total / n);
    }
    let train_eval = model.evaluate(train)?;
    let (eval, validation_count) = match validation {
        Some(v) => (model.evaluate(v)?, v.len()),
        None => (train_eval.clone(), 0),
    };
    let report = TrainReport {
        model: config.kind.name().to_owned(),
        seed: t.seed,
        config: config.clone(),
        class_names: train.class_names.clone(),
        parameter_count: model.net.parameter_count(),
        train_count: train.len(),
        validation_count,
        epoch_losses,
        epoch_lattice_losses: lattice.then_some(lattice_losses),
        train_accuracy: train_eval.accuracy,
        accuracy: eval.accuracy,
        confusion: eval.confusion,
    };
    Ok((model, report))
}

/// Serialises any report as pretty JSON with a trailing newline.
pub fn write_report<T: Serialize>(path: &Path, report: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(report)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Confusion matrix as CSV: one row per true class, one column per prediction.
pub fn write_confusion_csv(path: &Path, class_names: &[String], confusion: &[Vec<usize>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io_err = |e: csv::Error| Error::io(path, std::io::Error::other(e.to_string()));
    let mut header = vec!["true\\predicted".to_owned()];
    header.extend(class_names.iter().cloned());
    w.write_record(&header).map_err(io_err)?;
    for (name, row) in class_names.iter().zip(confusion) {
        let mut rec = vec![name.clone()];
        rec.extend(row.iter().map(usize::to_string));
        w.write_record(&rec).map_err(io_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
