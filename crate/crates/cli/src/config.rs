use std::fs;
use std::path::Path;

use fuzzvad::data::{default_vocabulary, SynthConfig};
use fuzzvad::dsp::{BandpassConfig, DEFAULT_BASELINE};
use fuzzvad::models::ModelConfig;
use fuzzvad::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessConfig {
    pub bandpass: BandpassConfig,
    /// Baseline window in seconds from the start of the recording.
    pub baseline: (f64, f64),
    /// Channels whose peak absolute amplitude exceeds this (microvolts) are flagged.
    pub qc_threshold: f64,
    /// Also write an `SPGS` spectrogram next to every event segment.
    pub spectrograms: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            bandpass: BandpassConfig::default(),
            baseline: DEFAULT_BASELINE,
            qc_threshold: 100.0,
            spectrograms: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterConfig {
    pub c_min: usize,
    pub c_max: usize,
    /// Exponent of the fuzzy silhouette weights.
    pub alpha: f64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            c_min: 2,
            c_max: 10,
            alpha: 1.0,
        }
    }
}

/// Everything a subcommand may read. Reports echo the whole effective value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfig {
    /// Class names of the manifest being trained on; `model.class_count`
    /// follows its length.
    pub vocabulary: Vec<String>,
    pub model: ModelConfig,
    pub synth: SynthConfig,
    pub preprocess: PreprocessConfig,
    pub cluster: ClusterConfig,
}

impl Default for CliConfig {
    fn default() -> Self {
        Self {
            vocabulary: default_vocabulary(),
            model: ModelConfig::default(),
            synth: SynthConfig::default(),
            preprocess: PreprocessConfig::default(),
            cluster: ClusterConfig::default(),
        }
    }
}

/// Objects are merged key by key. Tagged values (objects whose `kind` is a
/// string) and everything else are replaced whole.
fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) if !o.get("kind").is_some_and(Value::is_string) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

impl CliConfig {
    /// Defaults with the JSON overrides in `path` merged on top.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_overrides(&text)
    }

    pub fn from_overrides(text: &str) -> Result<Self> {
        let over: Value = serde_json::from_str(text)?;
        if !over.is_object() {
            return Err(Error::InvalidConfig("config file must hold a JSON object".into()));
        }
        let mut value = serde_json::to_value(Self::default())?;
        merge(&mut value, over);
        serde_json::from_value(value)
            .map_err(|e| Error::InvalidConfig(format!("config: {e}")))
    }

    /// Applies `--seed` to every seeded component.
    pub fn set_seed(&mut self, seed: u64) {
        self.model.training.seed = seed;
        self.model.fcm.seed = seed;
        self.synth.seed = seed;
    }
}
