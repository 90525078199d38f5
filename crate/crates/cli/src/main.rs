//! `fuzzvad` command-line front end.
//!
//! Exit codes: 0 success, 1 usage, 2 I/O or parse, 3 domain, 4 numeric.
//! Failures print one JSON object on stderr.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fuzzvad::models::{GroupPair, ModelKind};
use fuzzvad::{Error, ErrorKind};
use serde_json::json;

use crate::config::CliConfig;

#[derive(Debug, Parser)]
#[command(name = "fuzzvad", version, about = "Fuzzy VAD emotion representation and EEG fusion models")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON file merged over the built-in defaults (see `fuzzvad params`).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed for every random component.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FuzzifyMode {
    Type2,
    Type1Umf,
    Type1Lmf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FuzzyArms {
    On,
    Off,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalSubset {
    /// Every record in the manifest.
    All,
    /// The validation part of the training split, recomputed from the model's seed.
    Validation,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the effective configuration (or only the membership parameters) as JSON.
    Params {
        #[arg(long)]
        membership: bool,
    },
    /// Append membership degrees to a manifest-style CSV.
    Fuzzify {
        #[arg(long, value_name = "CSV")]
        input: PathBuf,
        /// Membership parameter file; defaults to the configured parameters.
        #[arg(long, value_name = "JSON")]
        params: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "type2")]
        mode: FuzzifyMode,
    },
    /// Fuzzy C-means sweep over the ratings of a manifest-style CSV.
    Cluster {
        #[arg(long, value_name = "CSV")]
        input: PathBuf,
        #[arg(long)]
        c_min: Option<usize>,
        #[arg(long)]
        c_max: Option<usize>,
        /// Fuzzifier exponent.
        #[arg(long)]
        m: Option<f64>,
    },
    /// Re-reference, filter and cut a raw EEGS recording into event segments.
    Preprocess {
        #[arg(long, value_name = "EEGS")]
        input: PathBuf,
        /// Click times in seconds, one per line or comma separated.
        #[arg(long, value_name = "PATH")]
        clicks: PathBuf,
    },
    /// Generate the synthetic benchmark (default output directory `synth`).
    Synth,
    /// Train one model on a stratified split of a manifest.
    Train {
        #[arg(long, value_name = "CSV", default_value = "synth/manifest.csv")]
        manifest: PathBuf,
        /// model1, model2, model3, crisp-vad, no-vad, type1-umf or type1-lmf.
        #[arg(long)]
        kind: Option<ModelKind>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Evaluate a saved model on a manifest.
    Eval {
        #[arg(long, value_name = "JSON", default_value = "out/model.json")]
        model: PathBuf,
        #[arg(long, value_name = "CSV", default_value = "synth/manifest.csv")]
        manifest: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        subset: EvalSubset,
    },
    /// Binary emotion-group classification on participant-disjoint splits.
    Crosssub {
        #[arg(long, value_name = "CSV", default_value = "synth/manifest.csv")]
        manifest: PathBuf,
        /// G1vG2, G1vG3 or G2vG3; repeatable. Defaults to all three.
        #[arg(long)]
        pair: Vec<GroupPair>,
        #[arg(long, value_enum, default_value = "both")]
        fuzzy: FuzzyArms,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Model-1 and the four ablations on one split.
    Ablate {
        #[arg(long, value_name = "CSV", default_value = "synth/manifest.csv")]
        manifest: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        /// Also train Model-2 for every cluster count in the configured range.
        #[arg(long)]
        cluster_sweep: bool,
    },
}

fn fail(kind: ErrorKind, message: String, extra: serde_json::Value) -> ExitCode {
    let mut err = json!({
        "kind": kind.as_str(),
        "exit_code": kind.exit_code(),
        "message": message,
    });
    if let (Some(obj), Some(more)) = (err.as_object_mut(), extra.as_object()) {
        obj.extend(more.clone());
    }
    eprintln!("{}", json!({ "error": err }));
    ExitCode::from(kind.exit_code() as u8)
}

fn error_exit(e: &Error) -> ExitCode {
    let extra = match e {
        Error::InvalidRecord { row, .. } => json!({ "row": row }),
        Error::Parse { path, line, .. } => json!({ "path": path, "line": line }),
        Error::Io { path, .. } | Error::Format { path, .. } => json!({ "path": path }),
        _ => json!({}),
    };
    fail(e.kind(), e.to_string(), extra)
}

fn run(cli: Cli) -> fuzzvad::Result<()> {
    let mut cfg = CliConfig::load(cli.common.config.as_deref())?;
    if let Some(seed) = cli.common.seed {
        cfg.set_seed(seed);
    }
    let out = |default: &str| cli.common.out.clone().unwrap_or_else(|| PathBuf::from(default));
    match cli.command {
        Command::Params { membership } => commands::params(&cfg, membership, cli.common.out.as_deref()),
        Command::Fuzzify { input, params, mode } => {
            commands::fuzzify(&cfg, &input, params.as_deref(), mode, cli.common.out.as_deref())
        }
        Command::Cluster { input, c_min, c_max, m } => {
            if let Some(c) = c_min {
                cfg.cluster.c_min = c;
            }
            if let Some(c) = c_max {
                cfg.cluster.c_max = c;
            }
            if let Some(m) = m {
                cfg.model.fcm.fuzzifier = m;
            }
            commands::cluster(&cfg, &input, &out("out"))
        }
        Command::Preprocess { input, clicks } => commands::preprocess(&cfg, &input, &clicks, &out("out")),
        Command::Synth => commands::synth(&cfg, &out("synth")),
        Command::Train { manifest, kind, epochs } => {
            if let Some(k) = kind {
                cfg.model.kind = k;
            }
            if let Some(e) = epochs {
                cfg.model.training.epochs = e;
            }
            commands::train(&mut cfg, &manifest, &out("out"))
        }
        Command::Eval { model, manifest, subset } => commands::eval(&cfg, &model, &manifest, subset, &out("out")),
        Command::Crosssub {
            manifest,
            pair,
            fuzzy,
            epochs,
        } => {
            if let Some(e) = epochs {
                cfg.model.training.epochs = e;
            }
            let pairs = if pair.is_empty() { GroupPair::ALL.to_vec() } else { pair };
            commands::crosssub(&cfg, &manifest, &pairs, fuzzy, &out("out"))
        }
        Command::Ablate {
            manifest,
            epochs,
            cluster_sweep,
        } => {
            if let Some(e) = epochs {
                cfg.model.training.epochs = e;
            }
            commands::ablate(&mut cfg, &manifest, cluster_sweep, &out("out"))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FUZZVAD_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(ErrorKind::Usage, e.to_string().trim_end().to_owned(), json!({})),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => error_exit(&e),
    }
}
