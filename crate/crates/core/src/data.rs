//! Dataset manifests, train/validation splits and a seeded synthetic
//! generator that mimics the structure of an emotional-event EEG corpus.
//!
//! A manifest is a CSV with the exact header
//! `sample_id,participant_id,emotion_label,valence,arousal,dominance,eeg_path`.
//! `eeg_path` is resolved relative to the manifest's directory and must name
//! an `EEGS` segment file.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dsp::format::write_eeg;
use crate::dsp::EegRecording;
use crate::error::{Error, Result};
use crate::fuzzy::{VadRating, SCALE_MAX, SCALE_MIN};

pub const MANIFEST_HEADER: [&str; 7] = [
    "sample_id",
    "participant_id",
    "emotion_label",
    "valence",
    "arousal",
    "dominance",
    "eeg_path",
];

/// One emotional event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample_id: String,
    pub participant_id: String,
    pub emotion_label: String,
    pub rating: VadRating,
    /// Segment file, already resolved against the manifest directory.
    pub eeg_path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetStats {
    pub per_label: BTreeMap<String, usize>,
    pub per_participant: BTreeMap<String, usize>,
}

/// Validated records plus the label vocabulary that fixes class indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub vocabulary: Vec<String>,
    pub records: Vec<SampleRecord>,
}

impl Dataset {
    pub fn new(vocabulary: Vec<String>, mut records: Vec<SampleRecord>) -> Result<Self> {
        let known: HashSet<&str> = vocabulary.iter().map(String::as_str).collect();
        if known.len() != vocabulary.len() {
            return Err(Error::InvalidConfig("vocabulary contains duplicate labels".into()));
        }
        let mut seen = HashSet::new();
        for (row, r) in records.iter().enumerate() {
            if !known.contains(r.emotion_label.as_str()) {
                return Err(Error::InvalidRecord {
                    row: row + 1,
                    message: format!("label {:?} is not in the vocabulary", r.emotion_label),
                });
            }
            if !seen.insert(r.sample_id.as_str()) {
                return Err(Error::InvalidRecord {
                    row: row + 1,
                    message: format!("duplicate sample_id {:?}", r.sample_id),
                });
            }
        }
        records.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
        Ok(Self { vocabulary, records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.vocabulary.iter().position(|v| v == label)
    }

    /// Class index of every record, in record order.
    pub fn labels(&self) -> Vec<usize> {
        self.records
            .iter()
            .map(|r| self.label_index(&r.emotion_label).expect("validated label"))
            .collect()
    }

    pub fn ratings(&self) -> Vec<VadRating> {
        self.records.iter().map(|r| r.rating).collect()
    }

    pub fn participants(&self) -> BTreeSet<String> {
        self.records.iter().map(|r| r.participant_id.clone()).collect()
    }

    pub fn stats(&self) -> DatasetStats {
        let mut per_label = BTreeMap::new();
        let mut per_participant = BTreeMap::new();
        for r in &self.records {
            *per_label.entry(r.emotion_label.clone()).or_insert(0) += 1;
            *per_participant.entry(r.participant_id.clone()).or_insert(0) += 1;
        }
        DatasetStats {
            per_label,
            per_participant,
        }
    }

    fn subset(&self, mut indices: Vec<usize>) -> Dataset {
        indices.sort_unstable();
        Dataset {
            vocabulary: self.vocabulary.clone(),
            records: indices.into_iter().map(|i| self.records[i].clone()).collect(),
        }
    }

    /// Keeps the records for which `map` returns a new label, relabelled
    /// onto `vocabulary`.
    pub fn relabel<F>(&self, vocabulary: Vec<String>, mut map: F) -> Result<Dataset>
    where
        F: FnMut(&str) -> Option<String>,
    {
        let records = self
            .records
            .iter()
            .filter_map(|r| {
                map(&r.emotion_label).map(|label| SampleRecord {
                    emotion_label: label,
                    ..r.clone()
                })
            })
            .collect();
        Dataset::new(vocabulary, records)
    }
}

fn parse_rating(field: &str, row: usize, name: &str) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| Error::InvalidRecord {
        row,
        message: format!("{name} {field:?} is not a number"),
    })?;
    if !v.is_finite() || !(SCALE_MIN..=SCALE_MAX).contains(&v) {
        return Err(Error::InvalidRecord {
            row,
            message: format!("{name} {v} is outside [1, 9]"),
        });
    }
    Ok(v)
}

/// Checks the header of a manifest-style CSV. `extra_ok` allows trailing
/// columns after the documented ones.
pub(crate) fn check_header(headers: &csv::StringRecord, path: &Path, extra_ok: bool) -> Result<()> {
    let got: Vec<&str> = headers.iter().collect();
    let matches = if extra_ok {
        got.len() >= MANIFEST_HEADER.len() && got[..MANIFEST_HEADER.len()] == MANIFEST_HEADER
    } else {
        got == MANIFEST_HEADER
    };
    if matches {
        Ok(())
    } else {
        Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header {}, found {}", MANIFEST_HEADER.join(","), got.join(",")),
        })
    }
}

/// A manifest row without file resolution; shared with the fuzzify command.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    /// 1-based data row number (the header is not counted).
    pub row: usize,
    pub line: usize,
    pub fields: Vec<String>,
    pub rating: VadRating,
}

/// Parses manifest rows, validating the header and ratings only.
pub fn read_manifest_rows(path: &Path, extra_columns: bool) -> Result<(Vec<String>, Vec<ManifestRow>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest_rows(&text, path, extra_columns)
}

pub fn parse_manifest_rows(text: &str, path: &Path, extra_columns: bool) -> Result<(Vec<String>, Vec<ManifestRow>)> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| csv_error(e, path))?.clone();
    check_header(&headers, path, extra_columns)?;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(e, path))?;
        let row = i + 1;
        let line = rec.position().map_or(row + 1, |p| p.line() as usize);
        let valence = parse_rating(&rec[3], row, "valence")?;
        let arousal = parse_rating(&rec[4], row, "arousal")?;
        let dominance = parse_rating(&rec[5], row, "dominance")?;
        rows.push(ManifestRow {
            row,
            line,
            fields: rec.iter().map(str::to_owned).collect(),
            rating: VadRating::new(valence, arousal, dominance)?,
        });
    }
    Ok((headers.iter().map(str::to_owned).collect(), rows))
}

fn csv_error(e: csv::Error, path: &Path) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: e.to_string(),
    }
}

/// Loads and validates a manifest. Every referenced segment file must exist.
pub fn load_manifest(path: &Path, vocabulary: &[String]) -> Result<Dataset> {
    let (_, rows) = read_manifest_rows(path, false)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut records = Vec::with_capacity(rows.len());
    for r in rows {
        let [sample_id, participant_id, emotion_label, _, _, _, eeg] = &r.fields[..] else {
            unreachable!("header checked");
        };
        if sample_id.is_empty() || participant_id.is_empty() {
            return Err(Error::InvalidRecord {
                row: r.row,
                message: "sample_id and participant_id must be non-empty".into(),
            });
        }
        let eeg_path = base.join(eeg);
        if !eeg_path.is_file() {
            return Err(Error::io(
                &eeg_path,
                std::io::Error::new(std::io::ErrorKind::NotFound, format!("segment for row {} not found", r.row)),
            ));
        }
        records.push(SampleRecord {
            sample_id: sample_id.clone(),
            participant_id: participant_id.clone(),
            emotion_label: emotion_label.clone(),
            rating: r.rating,
            eeg_path,
        });
    }
    let ds = Dataset::new(vocabulary.to_vec(), records)?;
    log::info!("loaded {} records from {}", ds.len(), path.display());
    Ok(ds)
}

/// Writes a manifest whose `eeg_path` column is relative to `dir`.
pub fn write_manifest(path: &Path, dataset: &Dataset) -> Result<()> {
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut w = csv::Writer::from_writer(Vec::new());
    let io_err = |e: csv::Error| Error::io(path, std::io::Error::other(e.to_string()));
    w.write_record(MANIFEST_HEADER).map_err(io_err)?;
    for r in &dataset.records {
        let rel = r.eeg_path.strip_prefix(base).unwrap_or(&r.eeg_path);
        w.write_record([
            r.sample_id.clone(),
            r.participant_id.clone(),
            r.emotion_label.clone(),
            r.rating.valence.to_string(),
            r.rating.arousal.to_string(),
            r.rating.dominance.to_string(),
            rel.to_string_lossy().replace('\\', "/"),
        ])
        .map_err(io_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Per-class split: `round(train_fraction * n_c)` records of each class go
/// to training. Records are taken in `sample_id` order before shuffling so
/// the result does not depend on input order.
pub fn split_stratified(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    check_fraction(train_fraction)?;
    let labels = dataset.labels();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut valid) = (Vec::new(), Vec::new());
    for class in 0..dataset.class_count() {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|i| labels[*i] == class).collect();
        if idx.is_empty() {
            continue;
        }
        let n_train = (train_fraction * idx.len() as f64).round() as usize;
        if idx.len() < 2 || n_train == 0 || n_train == idx.len() {
            return Err(Error::InfeasibleSplit(format!(
                "class {:?} has {} samples, too few for a {train_fraction} split",
                dataset.vocabulary[class],
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        valid.extend_from_slice(&idx[n_train..]);
        idx.truncate(n_train);
        train.extend(idx);
    }
    Ok((dataset.subset(train), dataset.subset(valid)))
}

/// Participant-disjoint split: `round(train_fraction * P)` participants train.
pub fn split_by_participant(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    check_fraction(train_fraction)?;
    let mut people: Vec<String> = dataset.participants().into_iter().collect();
    let n_train = (train_fraction * people.len() as f64).round() as usize;
    if n_train == 0 || n_train >= people.len() {
        return Err(Error::InfeasibleSplit(format!(
            "{} participants cannot be split {train_fraction}/{}",
            people.len(),
            1.0 - train_fraction
        )));
    }
    people.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let train_people: HashSet<&str> = people[..n_train].iter().map(String::as_str).collect();
    let (train, valid): (Vec<usize>, Vec<usize>) =
        (0..dataset.len()).partition(|i| train_people.contains(dataset.records[*i].participant_id.as_str()));
    Ok((dataset.subset(train), dataset.subset(valid)))
}

fn check_fraction(f: f64) -> Result<()> {
    if f > 0.0 && f < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("train fraction {f} must be in (0, 1)")))
    }
}

/// Emotion groups used for the cross-subject task, with the number of
/// recorded events per emotion in the source corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EmotionGroup {
    G1,
    G2,
    G3,
}

pub const EMOTION_GROUPS: [(EmotionGroup, &[(&str, usize)]); 3] = [
    (
        EmotionGroup::G1,
        &[
            ("Delighted", 11),
            ("Amused", 14),
            ("Happy", 5),
            ("Adventurous", 20),
            ("Joyous", 20),
            ("Excited", 26),
        ],
    ),
    (
        EmotionGroup::G2,
        &[
            ("Melancholic", 5),
            ("Depressed", 6),
            ("Despondent", 10),
            ("Dissatisfied", 10),
            ("Miserable", 19),
            ("Sad", 45),
        ],
    ),
    (
        EmotionGroup::G3,
        &[
            ("Taken Aback", 11),
            ("Startled", 20),
            ("Distress", 22),
            ("Alarmed", 27),
            ("Afraid", 46),
        ],
    ),
];

/// Group totals as printed beneath the table. The first group's rows add up
/// to 96, not 108; both numbers are kept so the discrepancy stays visible.
pub const REPORTED_GROUP_TOTALS: [usize; 3] = [108, 95, 126];

impl EmotionGroup {
    pub const ALL: [EmotionGroup; 3] = [EmotionGroup::G1, EmotionGroup::G2, EmotionGroup::G3];

    pub fn reported_total(self) -> usize {
        REPORTED_GROUP_TOTALS[self as usize]
    }

    pub fn name(self) -> &'static str {
        match self {
            EmotionGroup::G1 => "G1",
            EmotionGroup::G2 => "G2",
            EmotionGroup::G3 => "G3",
        }
    }

    pub fn emotions(self) -> &'static [(&'static str, usize)] {
        EMOTION_GROUPS[self as usize].1
    }

    /// Sum of the per-emotion event counts.
    pub fn event_total(self) -> usize {
        self.emotions().iter().map(|(_, n)| n).sum()
    }

    pub fn of(label: &str) -> Option<EmotionGroup> {
        EMOTION_GROUPS
            .iter()
            .find(|(_, list)| list.iter().any(|(name, _)| *name == label))
            .map(|(g, _)| *g)
    }
}

/// Default 24-emotion vocabulary with one VAD prototype per emotion. Each
/// prototype sits at a level of {2, 5, 8} per axis, so every emotion owns a
/// distinct low/medium/high cuboid.
pub const DEFAULT_EMOTIONS: [(&str, [f64; 3]); 24] = [
    ("Joyous", [8.0, 8.0, 8.0]),
    ("Excited", [8.0, 8.0, 5.0]),
    ("Adventurous", [8.0, 8.0, 2.0]),
    ("Delighted", [8.0, 5.0, 8.0]),
    ("Happy", [8.0, 5.0, 5.0]),
    ("Amused", [8.0, 5.0, 2.0]),
    ("Depressed", [2.0, 2.0, 2.0]),
    ("Melancholic", [2.0, 2.0, 5.0]),
    ("Despondent", [2.0, 2.0, 8.0]),
    ("Sad", [2.0, 5.0, 2.0]),
    ("Miserable", [2.0, 5.0, 5.0]),
    ("Dissatisfied", [2.0, 5.0, 8.0]),
    ("Afraid", [2.0, 8.0, 2.0]),
    ("Alarmed", [2.0, 8.0, 5.0]),
    ("Distress", [2.0, 8.0, 8.0]),
    ("Startled", [5.0, 8.0, 2.0]),
    ("Taken Aback", [5.0, 8.0, 5.0]),
    ("Angry", [5.0, 8.0, 8.0]),
    ("Bored", [5.0, 2.0, 2.0]),
    ("Nostalgic", [5.0, 2.0, 5.0]),
    ("Neutral", [5.0, 5.0, 5.0]),
    ("Curious", [5.0, 5.0, 8.0]),
    ("Calm", [8.0, 2.0, 5.0]),
    ("Content", [8.0, 2.0, 8.0]),
];

pub fn default_vocabulary() -> Vec<String> {
    DEFAULT_EMOTIONS.iter().map(|(n, _)| (*n).to_owned()).collect()
}

/// One sinusoidal component of a class signature. Its amplitude on channel
/// `ch` is `amplitude * exp(-((ch - focus_channel) / spread)^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignatureComponent {
    pub freq_hz: f64,
    pub amplitude: f64,
    pub focus_channel: f64,
    pub spread: f64,
}

impl SignatureComponent {
    fn channel_weight(&self, ch: usize) -> f64 {
        let z = (ch as f64 - self.focus_channel) / self.spread;
        (-z * z).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthClass {
    pub name: String,
    pub vad_mean: [f64; 3],
    pub signature: Vec<SignatureComponent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub classes: Vec<SynthClass>,
    pub participants: usize,
    pub events_per_participant: usize,
    pub channel_count: usize,
    pub sample_rate: f64,
    pub duration_s: f64,
    /// Standard deviation of the rating noise around each class mean.
    pub vad_sigma: f64,
    /// White-noise standard deviation added to every sample.
    pub noise_level: f64,
    /// Standard deviation of each participant's log-gain profile over frequency.
    pub participant_offset_sigma: f64,
    /// Amplitude of the participant-specific background rhythms.
    pub participant_rhythm_amplitude: f64,
    pub seed: u64,
}

const SIGNATURE_FREQS: [f64; 12] = [5.0, 8.0, 11.0, 14.0, 17.0, 20.0, 23.0, 26.0, 29.0, 32.0, 35.0, 38.0];

impl Default for SynthConfig {
    fn default() -> Self {
        let classes = DEFAULT_EMOTIONS
            .iter()
            .enumerate()
            .map(|(c, (name, vad))| {
                let first = c % 12;
                let second = (first + 1 + c / 12 * 5 + (c % 3)) % 12;
                SynthClass {
                    name: (*name).to_owned(),
                    vad_mean: *vad,
                    signature: vec![
                        SignatureComponent {
                            freq_hz: SIGNATURE_FREQS[first],
                            amplitude: 1.0,
                            focus_channel: ((c * 7) % 32) as f64,
                            spread: 6.0,
                        },
                        SignatureComponent {
                            freq_hz: SIGNATURE_FREQS[second],
                            amplitude: 0.8,
                            focus_channel: ((c * 13 + 5) % 32) as f64,
                            spread: 6.0,
                        },
                    ],
                }
            })
            .collect();
        Self {
            classes,
            participants: 40,
            events_per_participant: 12,
            channel_count: 32,
            sample_rate: 250.0,
            duration_s: 7.0,
            vad_sigma: 0.4,
            noise_level: 3.0,
            participant_offset_sigma: 0.3,
            participant_rhythm_amplitude: 0.5,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() || self.participants == 0 || self.events_per_participant == 0 {
            return Err(Error::InvalidConfig("need at least one class, participant and event".into()));
        }
        if self.channel_count == 0 || !(self.sample_rate > 0.0) || !(self.duration_s > 0.0) {
            return Err(Error::InvalidConfig("channel count, sample rate and duration must be positive".into()));
        }
        let nonneg = [
            self.vad_sigma,
            self.noise_level,
            self.participant_offset_sigma,
            self.participant_rhythm_amplitude,
        ];
        if nonneg.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidConfig("noise parameters must be finite and >= 0".into()));
        }
        let mut names = HashSet::new();
        for c in &self.classes {
            if !names.insert(c.name.as_str()) {
                return Err(Error::InvalidConfig(format!("duplicate class name {:?}", c.name)));
            }
            if c.vad_mean.iter().any(|v| !(SCALE_MIN..=SCALE_MAX).contains(v)) {
                return Err(Error::InvalidConfig(format!("VAD mean of {:?} outside [1, 9]", c.name)));
            }
            for s in &c.signature {
                if !(s.freq_hz > 0.0 && s.freq_hz < self.sample_rate / 2.0) || !(s.spread > 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "signature of {:?} needs 0 < freq < Nyquist and spread > 0",
                        c.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn vocabulary(&self) -> Vec<String> {
        self.classes.iter().map(|c| c.name.clone()).collect()
    }

    pub fn sample_count(&self) -> usize {
        self.participants * self.events_per_participant
    }
}

/// Per-sample generator truth written next to the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub class_index: usize,
    pub label: String,
    pub participant_id: String,
    pub vad_mean: [f64; 3],
    pub rating: [f64; 3],
    /// `(frequency, effective amplitude after the participant gain)` per component.
    pub components: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub manifest: PathBuf,
    pub ground_truth: PathBuf,
    pub dataset: Dataset,
}

struct Participant {
    id: String,
    /// Log-gain at evenly spaced anchor frequencies from 0 to Nyquist.
    log_gain: Vec<f64>,
    rhythms: Vec<(f64, f64)>,
}

impl Participant {
    fn gain(&self, freq: f64, nyquist: f64) -> f64 {
        let pos = (freq / nyquist).clamp(0.0, 1.0) * (self.log_gain.len() - 1) as f64;
        let i = (pos.floor() as usize).min(self.log_gain.len() - 2);
        let t = pos - i as f64;
        (self.log_gain[i] * (1.0 - t) + self.log_gain[i + 1] * t).exp()
    }
}

fn id_width(n: usize) -> usize {
    n.to_string().len().max(2)
}

/// Generates segment files under `out_dir/segments`, `manifest.csv` and
/// `ground_truth.json`. Output is a pure function of `cfg`.
pub fn synth_generate(cfg: &SynthConfig, out_dir: &Path) -> Result<SynthOutput> {
    cfg.validate()?;
    let seg_dir = out_dir.join("segments");
    fs::create_dir_all(&seg_dir).map_err(|e| Error::io(&seg_dir, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let nyquist = cfg.sample_rate / 2.0;
    let pw = id_width(cfg.participants);
    let people: Vec<Participant> = (0..cfg.participants)
        .map(|p| Participant {
            id: format!("p{:0pw$}", p + 1),
            log_gain: (0..9)
                .map(|_| cfg.participant_offset_sigma * rng.sample::<f64, _>(StandardNormal))
                .collect(),
            rhythms: (0..3)
                .map(|_| (rng.gen_range(2.0..nyquist.min(45.0)), rng.gen_range(0.5..1.0)))
                .collect(),
        })
        .collect();

    let total = cfg.sample_count();
    let mut labels: Vec<usize> = (0..total).map(|i| i % cfg.classes.len()).collect();
    labels.shuffle(&mut rng);

    let samples = (cfg.duration_s * cfg.sample_rate).round() as usize;
    let ew = id_width(cfg.events_per_participant);
    let mut records = Vec::with_capacity(total);
    let mut truth = BTreeMap::new();
    for (p, person) in people.iter().enumerate() {
        for e in 0..cfg.events_per_participant {
            let class_index = labels[p * cfg.events_per_participant + e];
            let class = &cfg.classes[class_index];
            let sample_id = format!("{}_e{:0ew$}", person.id, e + 1);
            let rating = class.vad_mean.map(|m| {
                let z: f64 = rng.sample(StandardNormal);
                (m + cfg.vad_sigma * z).clamp(SCALE_MIN, SCALE_MAX)
            });
            let components: Vec<(f64, f64)> = class
                .signature
                .iter()
                .map(|s| (s.freq_hz, s.amplitude * person.gain(s.freq_hz, nyquist)))
                .collect();
            let phases: Vec<f64> = class.signature.iter().map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
            let rhythm_phases: Vec<f64> = person.rhythms.iter().map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
            let mut data = vec![vec![0.0; samples]; cfg.channel_count];
            for (ch, row) in data.iter_mut().enumerate() {
                let weights: Vec<f64> = class.signature.iter().map(|s| s.channel_weight(ch)).collect();
                for (i, v) in row.iter_mut().enumerate() {
                    let t = i as f64 / cfg.sample_rate;
                    let mut x = 0.0;
                    for ((w, &(f, amp)), ph) in weights.iter().zip(&components).zip(&phases) {
                        x += amp * w * (2.0 * PI * f * t + ph).sin();
                    }
                    for (&(f, a), ph) in person.rhythms.iter().zip(&rhythm_phases) {
                        x += cfg.participant_rhythm_amplitude * a * (2.0 * PI * f * t + ph).sin();
                    }
                    x += cfg.noise_level * rng.sample::<f64, _>(StandardNormal);
                    *v = x;
                }
            }
            let rec = EegRecording::new(data, cfg.sample_rate)?;
            let eeg_path = seg_dir.join(format!("{sample_id}.eegs"));
            write_eeg(&eeg_path, &rec)?;
            truth.insert(
                sample_id.clone(),
                GroundTruth {
                    class_index,
                    label: class.name.clone(),
                    participant_id: person.id.clone(),
                    vad_mean: class.vad_mean,
                    rating,
                    components,
                },
            );
            records.push(SampleRecord {
                sample_id,
                participant_id: person.id.clone(),
                emotion_label: class.name.clone(),
                rating: VadRating::new(rating[0], rating[1], rating[2])?,
                eeg_path,
            });
        }
    }
    let dataset = Dataset::new(cfg.vocabulary(), records)?;
    let manifest = out_dir.join("manifest.csv");
    write_manifest(&manifest, &dataset)?;
    let ground_truth = out_dir.join("ground_truth.json");
    let text = serde_json::to_string_pretty(&truth)?;
    fs::write(&ground_truth, text + "\n").map_err(|e| Error::io(&ground_truth, e))?;
    log::info!("generated {} synthetic events in {}", dataset.len(), out_dir.display());
    Ok(SynthOutput {
        manifest,
        ground_truth,
        dataset,
    })
}
