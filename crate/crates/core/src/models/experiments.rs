use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::features::FeatureSet;
use super::training::{train, TrainReport};
use super::{ModelConfig, ModelKind};
use crate::clustering::sweep_clusters;
use crate::data::{split_by_participant, Dataset, EmotionGroup};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub mode: String,
    pub accuracy: f64,
    pub parameter_count: usize,
}

/// Trains Model-1 and the four ablations on the same split.
pub fn ablation_experiment(
    base: &ModelConfig,
    train_set: &FeatureSet,
    validation: &FeatureSet,
) -> Result<Vec<(AblationRow, TrainReport)>> {
    ModelKind::ABLATION_ORDER
        .iter()
        .map(|kind| {
            let (_, report) = train(&base.with_kind(*kind), train_set, Some(validation))?;
            Ok((
                AblationRow {
                    mode: kind.name().to_owned(),
                    accuracy: report.accuracy,
                    parameter_count: report.parameter_count,
                },
                report,
            ))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSweepRow {
    pub clusters: usize,
    pub fuzzy_silhouette: f64,
    pub accuracy: f64,
}

/// Model-2 accuracy and the fuzzy silhouette of the training ratings for
/// every cluster count in `range`.
pub fn cluster_sweep_experiment(
    base: &ModelConfig,
    train_set: &FeatureSet,
    validation: &FeatureSet,
    range: RangeInclusive<usize>,
) -> Result<Vec<ClusterSweepRow>> {
    let points: Vec<[f64; 3]> = train_set.ratings().iter().map(|r| r.to_array()).collect();
    let sweep = sweep_clusters(&points, range, &base.fcm, 1.0)?;
    sweep
        .into_iter()
        .map(|row| {
            let cfg = base.with_kind(ModelKind::Model2FcmClusters { clusters: row.clusters });
            let (_, report) = train(&cfg, train_set, Some(validation))?;
            Ok(ClusterSweepRow {
                clusters: row.clusters,
                fuzzy_silhouette: row.fuzzy_silhouette,
                accuracy: report.accuracy,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupPair {
    G1vG2,
    G1vG3,
    G2vG3,
}

impl GroupPair {
    pub const ALL: [GroupPair; 3] = [GroupPair::G1vG2, GroupPair::G1vG3, GroupPair::G2vG3];

    pub fn groups(self) -> (EmotionGroup, EmotionGroup) {
        match self {
            GroupPair::G1vG2 => (EmotionGroup::G1, EmotionGroup::G2),
            GroupPair::G1vG3 => (EmotionGroup::G1, EmotionGroup::G3),
            GroupPair::G2vG3 => (EmotionGroup::G2, EmotionGroup::G3),
        }
    }
}

impl fmt::Display for GroupPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.groups();
        write!(f, "{}v{}", a.name(), b.name())
    }
}

impl FromStr for GroupPair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GroupPair::ALL
            .into_iter()
            .find(|p| p.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown group pair {s:?} (G1vG2, G1vG3, G2vG3)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSubjectSplit {
    pub pair: GroupPair,
    pub train_participants: Vec<String>,
    pub validation_participants: Vec<String>,
}

impl CrossSubjectSplit {
    pub fn is_disjoint(&self) -> bool {
        self.train_participants
            .iter()
            .all(|p| !self.validation_participants.contains(p))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSubjectReport {
    pub split: CrossSubjectSplit,
    pub with_fuzzy: bool,
    pub report: TrainReport,
}

/// Binary group classification on a participant-disjoint split. With
/// `with_fuzzy` the configured kind is trained (Model-1 if it is the no-VAD
/// ablation); without, the fuzzy branch is removed.
pub fn cross_subject_experiment(
    dataset: &Dataset,
    features: &FeatureSet,
    pair: GroupPair,
    with_fuzzy: bool,
    config: &ModelConfig,
) -> Result<CrossSubjectReport> {
    let (a, b) = pair.groups();
    let binary = dataset.relabel(vec![a.name().to_owned(), b.name().to_owned()], |label| {
        match EmotionGroup::of(label) {
            Some(g) if g == a || g == b => Some(g.name().to_owned()),
            _ => None,
        }
    })?;
    if binary.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let seed = config.training.seed;
    let (train_ds, valid_ds) = split_by_participant(&binary, config.train_fraction, seed)?;
    let split = CrossSubjectSplit {
        pair,
        train_participants: train_ds.participants().into_iter().collect(),
        validation_participants: valid_ds.participants().into_iter().collect(),
    };
    if !split.is_disjoint() {
        return Err(Error::InfeasibleSplit("train and validation participants overlap".into()));
    }
    if train_ds.is_empty() || valid_ds.is_empty() {
        return Err(Error::InfeasibleSplit(format!("{pair}: a side of the split has no events")));
    }
    let kind = match (with_fuzzy, config.kind) {
        (false, _) => ModelKind::NoVad,
        (true, ModelKind::NoVad) => ModelKind::Model1Type2,
        (true, k) => k,
    };
    let mut cfg = config.with_kind(kind);
    cfg.class_count = 2;
    let (_, report) = train(&cfg, &features.select(&train_ds)?, Some(&features.select(&valid_ds)?))?;
    Ok(CrossSubjectReport {
        split,
        with_fuzzy,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_names() {
        for p in GroupPair::ALL {
            assert_eq!(p.to_string().parse::<GroupPair>().unwrap(), p);
        }
        assert_eq!("g1vg3".parse::<GroupPair>().unwrap(), GroupPair::G1vG3);
        assert!("G1vG4".parse::<GroupPair>().is_err());
    }
}
