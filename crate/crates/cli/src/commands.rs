use std::fs;
use std::path::Path;

use fuzzvad::clustering::{cluster_report, sweep_clusters, ClusterReport, Point};
use fuzzvad::data::{load_manifest, read_manifest_rows, split_stratified, synth_generate, Dataset};
use fuzzvad::dsp::format::{read_eeg, write_eeg, write_spectrogram};
use fuzzvad::dsp::{average_rereference, baseline_span, butterworth_bandpass, channel_qc, event_span, spectrogram_stack, ChannelQc};
use fuzzvad::fuzzy::{type1_column_names, Family, Fuzzifier, MembershipParams, Type2FuzzyVector};
use fuzzvad::models::{
    ablation_experiment, cluster_sweep_experiment, cross_subject_experiment, extract_features, train as train_model,
    write_confusion_csv, write_report, AblationRow, ClusterSweepRow, FeatureSet, FusionModel, GroupPair, TrainReport,
};
use fuzzvad::{Error, ErrorKind, Result};
use serde::Serialize;

use crate::config::CliConfig;
use crate::{EvalSubset, FuzzifyMode, FuzzyArms};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err(path))?;
    for r in rows {
        w.write_record(r).map_err(csv_err(path))?;
    }
    let bytes = w.into_inner().map_err(|e| csv_err(path)(e.into_error().into()))?;
    fs::write(path, bytes).map_err(io_err(path))
}

/// Envelope shared by every JSON report.
#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    command: &'a str,
    seed: u64,
    config: &'a CliConfig,
    inputs: serde_json::Value,
    result: T,
}

fn report<T: Serialize>(path: &Path, command: &str, cfg: &CliConfig, inputs: serde_json::Value, result: T) -> Result<()> {
    write_report(
        path,
        &Report {
            command,
            seed: cfg.model.training.seed,
            config: cfg,
            inputs,
            result,
        },
    )
}

pub fn params(cfg: &CliConfig, membership: bool, out: Option<&Path>) -> Result<()> {
    let (name, text) = if membership {
        ("membership.json", serde_json::to_string_pretty(&cfg.model.membership)?)
    } else {
        ("config.json", serde_json::to_string_pretty(cfg)?)
    };
    println!("{text}");
    if let Some(dir) = out {
        create_dir(dir)?;
        let path = dir.join(name);
        fs::write(&path, text + "\n").map_err(io_err(&path))?;
    }
    Ok(())
}

pub fn fuzzify(cfg: &CliConfig, input: &Path, params: Option<&Path>, mode: FuzzifyMode, out: Option<&Path>) -> Result<()> {
    let membership = match params {
        Some(p) => MembershipParams::from_json(&fs::read_to_string(p).map_err(io_err(p))?)?,
        None => cfg.model.membership,
    };
    let fuzzifier = Fuzzifier::new(membership)?;
    let (mut header, rows) = read_manifest_rows(input, true)?;
    header.extend(match mode {
        FuzzifyMode::Type2 => Type2FuzzyVector::column_names(),
        FuzzifyMode::Type1Umf => type1_column_names(Family::Umf),
        FuzzifyMode::Type1Lmf => type1_column_names(Family::Lmf),
    });
    let mut records = Vec::with_capacity(rows.len());
    for row in rows {
        let degrees: Vec<f64> = match mode {
            FuzzifyMode::Type2 => fuzzifier.fuzzify_type2(&row.rating)?.0.to_vec(),
            FuzzifyMode::Type1Umf => fuzzifier.fuzzify_type1(&row.rating, Family::Umf)?.to_vec(),
            FuzzifyMode::Type1Lmf => fuzzifier.fuzzify_type1(&row.rating, Family::Lmf)?.to_vec(),
        };
        let mut rec = row.fields;
        rec.extend(degrees.iter().map(f64::to_string));
        records.push(rec);
    }
    match out {
        Some(dir) => {
            create_dir(dir)?;
            write_csv(&dir.join("fuzzified.csv"), &header, &records)
        }
        None => {
            let stdout = Path::new("<stdout>");
            let mut w = csv::Writer::from_writer(std::io::stdout().lock());
            w.write_record(&header).map_err(csv_err(stdout))?;
            for r in &records {
                w.write_record(r).map_err(csv_err(stdout))?;
            }
            w.flush().map_err(io_err(stdout))
        }
    }
}

#[derive(Serialize)]
struct SweepEntry {
    clusters: usize,
    fuzzy_silhouette: f64,
    iterations: usize,
    objective: f64,
}

#[derive(Serialize)]
struct ClusterResult {
    sweep: Vec<SweepEntry>,
    best_clusters: usize,
    centroids: Vec<Point>,
    summary: ClusterReport,
}

/// Numeric failures inside the sweep exit with the numeric code.
fn as_numeric(e: Error) -> Error {
    match e.kind() {
        ErrorKind::Usage | ErrorKind::Numeric => e,
        _ => Error::Numeric(e.to_string()),
    }
}

pub fn cluster(cfg: &CliConfig, input: &Path, out: &Path) -> Result<()> {
    let c = &cfg.cluster;
    if c.c_min > c.c_max {
        return Err(Error::InvalidConfig(format!("c_min {} exceeds c_max {}", c.c_min, c.c_max)));
    }
    cfg.model.fcm.validate()?;
    let (_, rows) = read_manifest_rows(input, true)?;
    let points: Vec<Point> = rows.iter().map(|r| r.rating.to_array()).collect();
    let sweep = sweep_clusters(&points, c.c_min..=c.c_max, &cfg.model.fcm, c.alpha).map_err(as_numeric)?;
    let best = sweep
        .iter()
        .fold(None::<&fuzzvad::clustering::SweepRow>, |best, r| match best {
            Some(b) if b.fuzzy_silhouette >= r.fuzzy_silhouette => Some(b),
            _ => Some(r),
        })
        .ok_or_else(|| Error::EmptyDataset)?;
    let labels: Vec<String> = rows.iter().map(|r| r.fields[2].clone()).collect();
    let summary = cluster_report(&best.result, &labels)?;
    create_dir(out)?;

    let header = ["clusters", "fuzzy_silhouette", "iterations", "objective"].map(String::from);
    let table: Vec<Vec<String>> = sweep
        .iter()
        .map(|r| {
            vec![
                r.clusters.to_string(),
                r.fuzzy_silhouette.to_string(),
                r.result.iterations_run.to_string(),
                r.result.objective_trace.last().copied().unwrap_or(f64::NAN).to_string(),
            ]
        })
        .collect();
    write_csv(&out.join("sweep.csv"), &header, &table)?;

    let header = ["cluster", "valence", "arousal", "dominance"].map(String::from);
    let table: Vec<Vec<String>> = best
        .result
        .centroids
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let mut r = vec![k.to_string()];
            r.extend(p.iter().map(f64::to_string));
            r
        })
        .collect();
    write_csv(&out.join("centroids.csv"), &header, &table)?;

    let mut header = vec!["sample_id".to_owned(), "emotion_label".to_owned()];
    header.extend((0..best.clusters).map(|k| format!("u{k}")));
    header.push("cluster".to_owned());
    let table: Vec<Vec<String>> = rows
        .iter()
        .zip(&best.result.memberships)
        .zip(&summary.assignments)
        .map(|((row, u), k)| {
            let mut r = vec![row.fields[0].clone(), row.fields[2].clone()];
            r.extend(u.iter().map(f64::to_string));
            r.push(k.to_string());
            r
        })
        .collect();
    write_csv(&out.join("memberships.csv"), &header, &table)?;

    let result = ClusterResult {
        sweep: sweep
            .iter()
            .map(|r| SweepEntry {
                clusters: r.clusters,
                fuzzy_silhouette: r.fuzzy_silhouette,
                iterations: r.result.iterations_run,
                objective: r.result.objective_trace.last().copied().unwrap_or(f64::NAN),
            })
            .collect(),
        best_clusters: best.clusters,
        centroids: best.result.centroids.clone(),
        summary,
    };
    report(
        &out.join("cluster_report.json"),
        "cluster",
        cfg,
        serde_json::json!({ "input": input }),
        result,
    )
}

/// Click times in seconds: numbers separated by commas, whitespace or
/// newlines. `#` starts a comment; a non-numeric first line is a header.
pub fn parse_clicks(text: &str, path: &Path) -> Result<Vec<f64>> {
    let mut clicks = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        for tok in line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            match tok.parse::<f64>() {
                Ok(v) if v.is_finite() => clicks.push(v),
                _ if clicks.is_empty() && i == 0 => break,
                _ => {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        line: i + 1,
                        message: format!("{tok:?} is not a click time"),
                    })
                }
            }
        }
    }
    Ok(clicks)
}

#[derive(Serialize)]
struct EventEntry {
    index: usize,
    click_time: f64,
    file: String,
    start_sample: usize,
    end_sample: usize,
}

#[derive(Serialize)]
struct SkippedClick {
    click_time: f64,
    reason: String,
}

#[derive(Serialize)]
struct PreprocessResult {
    sample_rate: f64,
    channel_count: usize,
    duration_s: f64,
    baseline: EventEntry,
    events: Vec<EventEntry>,
    skipped: Vec<SkippedClick>,
    channels: Vec<ChannelQc>,
}

pub fn preprocess(cfg: &CliConfig, input: &Path, clicks_path: &Path, out: &Path) -> Result<()> {
    let p = &cfg.preprocess;
    let raw = read_eeg(input)?;
    if raw.sample_count() == 0 {
        return Err(Error::Format {
            path: input.to_path_buf(),
            message: "recording has no samples".into(),
        });
    }
    let clicks = parse_clicks(&fs::read_to_string(clicks_path).map_err(io_err(clicks_path))?, clicks_path)?;
    let rec = butterworth_bandpass(&average_rereference(&raw)?, &p.bandpass)?;
    create_dir(out)?;

    let (b0, b1) = baseline_span(&rec, p.baseline)?;
    write_eeg(&out.join("baseline.eegs"), &rec.slice(b0, b1))?;
    let baseline = EventEntry {
        index: 0,
        click_time: p.baseline.0,
        file: "baseline.eegs".into(),
        start_sample: b0,
        end_sample: b1,
    };

    let mut events = Vec::new();
    let mut skipped = Vec::new();
    for &t in &clicks {
        match event_span(t, rec.sample_rate, rec.sample_count()) {
            Ok((start, end)) => {
                let index = events.len() + 1;
                let file = format!("event_{index:03}.eegs");
                let segment = rec.slice(start, end);
                write_eeg(&out.join(&file), &segment)?;
                if p.spectrograms {
                    let stack = spectrogram_stack(&segment, &cfg.model.features.stft, cfg.model.features.max_hz)?;
                    write_spectrogram(&out.join(format!("event_{index:03}.spgs")), &stack, rec.sample_rate)?;
                }
                events.push(EventEntry {
                    index,
                    click_time: t,
                    file,
                    start_sample: start,
                    end_sample: end,
                });
            }
            Err(e) => {
                log::warn!("skipping click at {t} s: {e}");
                skipped.push(SkippedClick {
                    click_time: t,
                    reason: e.to_string(),
                });
            }
        }
    }
    let result = PreprocessResult {
        sample_rate: rec.sample_rate,
        channel_count: rec.channel_count(),
        duration_s: rec.duration(),
        baseline,
        events,
        skipped,
        channels: channel_qc(&rec, p.qc_threshold),
    };
    report(
        &out.join("qc.json"),
        "preprocess",
        cfg,
        serde_json::json!({ "input": input, "clicks": clicks_path }),
        result,
    )
}

#[derive(Serialize)]
struct SynthResult {
    samples: usize,
    classes: usize,
    participants: usize,
    manifest: &'static str,
    ground_truth: &'static str,
}

pub fn synth(cfg: &CliConfig, out: &Path) -> Result<()> {
    let generated = synth_generate(&cfg.synth, out)?;
    let stats = generated.dataset.stats();
    log::info!("wrote {} samples to {}", generated.dataset.len(), out.display());
    report(
        &out.join("synth_report.json"),
        "synth",
        cfg,
        serde_json::json!({}),
        SynthResult {
            samples: generated.dataset.len(),
            classes: stats.per_label.len(),
            participants: stats.per_participant.len(),
            manifest: "manifest.csv",
            ground_truth: "ground_truth.json",
        },
    )
}

/// Loads a manifest against the configured vocabulary and extracts its
/// spectrogram features.
fn load_features(cfg: &CliConfig, manifest: &Path) -> Result<(Dataset, FeatureSet)> {
    let dataset = load_manifest(manifest, &cfg.vocabulary)?;
    let features = extract_features(&dataset, &cfg.model.features)?;
    Ok((dataset, features))
}

fn sync_class_count(cfg: &mut CliConfig) -> Result<()> {
    cfg.model.class_count = cfg.vocabulary.len();
    cfg.model.validate()
}

pub fn train(cfg: &mut CliConfig, manifest: &Path, out: &Path) -> Result<()> {
    sync_class_count(cfg)?;
    let (dataset, features) = load_features(cfg, manifest)?;
    let (tr, va) = split_stratified(&dataset, cfg.model.train_fraction, cfg.model.training.seed)?;
    let (model, result) = train_model(&cfg.model, &features.select(&tr)?, Some(&features.select(&va)?))?;
    create_dir(out)?;
    model.save(&out.join("model.json"))?;
    write_confusion_csv(&out.join("confusion.csv"), &result.class_names, &result.confusion)?;
    log::info!("{} validation accuracy {:.4}", result.model, result.accuracy);
    report(
        &out.join("train_report.json"),
        "train",
        cfg,
        serde_json::json!({ "manifest": manifest }),
        result,
    )
}

#[derive(Serialize)]
struct Prediction {
    sample_id: String,
    label: String,
    predicted: String,
}

#[derive(Serialize)]
struct EvalResult {
    model: String,
    subset: &'static str,
    count: usize,
    accuracy: f64,
    confusion: Vec<Vec<usize>>,
    predictions: Vec<Prediction>,
}

pub fn eval(cfg: &CliConfig, model_path: &Path, manifest: &Path, subset: EvalSubset, out: &Path) -> Result<()> {
    let mut model = FusionModel::load(model_path)?;
    if model.config.class_count != cfg.vocabulary.len() {
        return Err(Error::InvalidConfig(format!(
            "model has {} classes but the vocabulary has {}",
            model.config.class_count,
            cfg.vocabulary.len()
        )));
    }
    let dataset = load_manifest(manifest, &cfg.vocabulary)?;
    let (dataset, subset_name) = match subset {
        EvalSubset::All => (dataset, "all"),
        EvalSubset::Validation => {
            let m = &model.config;
            (split_stratified(&dataset, m.train_fraction, m.training.seed)?.1, "validation")
        }
    };
    let features = extract_features(&dataset, &model.config.features)?;
    let evaluation = model.evaluate(&features)?;
    let names = &cfg.vocabulary;
    let predictions = features
        .samples
        .iter()
        .zip(&evaluation.predictions)
        .map(|(s, &p)| Prediction {
            sample_id: s.sample_id.clone(),
            label: names[s.label].clone(),
            predicted: names[p].clone(),
        })
        .collect();
    create_dir(out)?;
    write_confusion_csv(&out.join("eval_confusion.csv"), names, &evaluation.confusion)?;
    report(
        &out.join("eval_report.json"),
        "eval",
        cfg,
        serde_json::json!({ "model": model_path, "manifest": manifest, "model_config": model.config }),
        EvalResult {
            model: model.config.kind.name().to_owned(),
            subset: subset_name,
            count: features.len(),
            accuracy: evaluation.accuracy,
            confusion: evaluation.confusion,
            predictions,
        },
    )
}

#[derive(Serialize)]
struct CrossSubjectRun {
    pair: String,
    with_fuzzy: bool,
    accuracy: f64,
    train_participants: Vec<String>,
    validation_participants: Vec<String>,
    disjoint: bool,
    report: TrainReport,
}

pub fn crosssub(cfg: &CliConfig, manifest: &Path, pairs: &[GroupPair], arms: FuzzyArms, out: &Path) -> Result<()> {
    cfg.model.validate()?;
    let (dataset, features) = load_features(cfg, manifest)?;
    let arms: &[bool] = match arms {
        FuzzyArms::On => &[true],
        FuzzyArms::Off => &[false],
        FuzzyArms::Both => &[true, false],
    };
    let mut runs = Vec::new();
    for &pair in pairs {
        for &with_fuzzy in arms {
            let r = cross_subject_experiment(&dataset, &features, pair, with_fuzzy, &cfg.model)?;
            log::info!("{pair} fuzzy={with_fuzzy}: {:.4}", r.report.accuracy);
            runs.push(CrossSubjectRun {
                pair: pair.to_string(),
                with_fuzzy,
                accuracy: r.report.accuracy,
                disjoint: r.split.is_disjoint(),
                train_participants: r.split.train_participants,
                validation_participants: r.split.validation_participants,
                report: r.report,
            });
        }
    }
    create_dir(out)?;
    let header = ["pair", "with_fuzzy", "model", "accuracy"].map(String::from);
    let table: Vec<Vec<String>> = runs
        .iter()
        .map(|r| vec![r.pair.clone(), r.with_fuzzy.to_string(), r.report.model.clone(), r.accuracy.to_string()])
        .collect();
    write_csv(&out.join("crosssub.csv"), &header, &table)?;
    report(
        &out.join("crosssub_report.json"),
        "crosssub",
        cfg,
        serde_json::json!({ "manifest": manifest }),
        runs,
    )
}

#[derive(Serialize)]
struct AblateResult {
    rows: Vec<AblationRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cluster_sweep: Option<Vec<ClusterSweepRow>>,
    reports: Vec<TrainReport>,
}

pub fn ablate(cfg: &mut CliConfig, manifest: &Path, cluster_sweep: bool, out: &Path) -> Result<()> {
    sync_class_count(cfg)?;
    let c = &cfg.cluster;
    if cluster_sweep && c.c_min > c.c_max {
        return Err(Error::InvalidConfig(format!("c_min {} exceeds c_max {}", c.c_min, c.c_max)));
    }
    let (dataset, features) = load_features(cfg, manifest)?;
    let (tr, va) = split_stratified(&dataset, cfg.model.train_fraction, cfg.model.training.seed)?;
    let (tr, va) = (features.select(&tr)?, features.select(&va)?);
    let (rows, reports): (Vec<_>, Vec<_>) = ablation_experiment(&cfg.model, &tr, &va)?.into_iter().unzip();
    create_dir(out)?;
    let header = ["mode", "accuracy", "parameter_count"].map(String::from);
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.mode.clone(), r.accuracy.to_string(), r.parameter_count.to_string()])
        .collect();
    write_csv(&out.join("ablation.csv"), &header, &table)?;
    let sweep = if cluster_sweep {
        let rows = cluster_sweep_experiment(&cfg.model, &tr, &va, c.c_min..=c.c_max)?;
        let header = ["clusters", "fuzzy_silhouette", "accuracy"].map(String::from);
        let table: Vec<Vec<String>> = rows
            .iter()
            .map(|r| vec![r.clusters.to_string(), r.fuzzy_silhouette.to_string(), r.accuracy.to_string()])
            .collect();
        write_csv(&out.join("cluster_sweep.csv"), &header, &table)?;
        Some(rows)
    } else {
        None
    };
    report(
        &out.join("ablation_report.json"),
        "ablate",
        cfg,
        serde_json::json!({ "manifest": manifest }),
        AblateResult {
            rows,
            cluster_sweep: sweep,
            reports,
        },
    )
}
