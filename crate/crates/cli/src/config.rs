use std::path::{Path, PathBuf};

use anyhow::Context;
use rtmotion::evaluation::Protocol;
use rtmotion::model::{Architecture, Batching, NetworkConfig, Readout, TrainingConfig};
use rtmotion::pipeline::PrepareConfig;
use rtmotion::segmentation::{DEFAULT_LENGTH, MIN_TAIL, SWEEP_WIDTHS};
use rtmotion::{InputForm, Setting};
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Everything a run depends on. Embedded verbatim in every report so a run
/// can be reconstructed from its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    /// Prepared period-set directory.
    pub data: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub input_form: InputForm,
    pub architecture: Architecture,
    pub protocol: Protocol,
    pub augment: bool,
    pub length: usize,
    pub window: Option<usize>,
    pub widths: Vec<usize>,
    pub min_tail: usize,
    /// Restrict items to one setting before splitting.
    pub setting: Option<Setting>,
    pub hidden: Option<usize>,
    pub hidden2: Option<usize>,
    pub integration: Option<usize>,
    pub readout: Readout,
    pub training: TrainingConfig,
    /// Seed of the NRT subsegment selection.
    pub selection_seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            manifest: None,
            data: None,
            output: None,
            input_form: InputForm::Feats,
            architecture: Architecture::Dd,
            protocol: Protocol::Loso,
            augment: true,
            length: DEFAULT_LENGTH,
            window: None,
            widths: SWEEP_WIDTHS.to_vec(),
            min_tail: MIN_TAIL,
            setting: None,
            hidden: None,
            hidden2: None,
            integration: None,
            readout: Readout::Final,
            training: TrainingConfig::default(),
            selection_seed: 0,
        }
    }
}

impl RunConfig {
    /// Fields present in the JSON file at `path` replace the current ones;
    /// nested objects merge key by key.
    pub fn overlay(self, path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let file: Value = serde_json::from_str(&text).map_err(rtmotion::Error::from)?;
        let mut base = serde_json::to_value(&self).map_err(rtmotion::Error::from)?;
        merge(&mut base, file);
        Ok(serde_json::from_value(base).map_err(rtmotion::Error::from)?)
    }

    pub fn prepare_config(&self, window: Option<usize>) -> PrepareConfig {
        PrepareConfig {
            input_form: self.input_form,
            augment: self.augment,
            length: self.length,
            window,
            min_tail: self.min_tail,
            seed: self.selection_seed,
        }
    }

    pub fn network_config(&self, input_width: usize) -> NetworkConfig {
        let mut cfg = NetworkConfig::default_for(self.architecture, input_width);
        match &mut cfg {
            NetworkConfig::Dd(c) => {
                c.hidden = self.hidden.unwrap_or(c.hidden);
                c.integration = self.integration.unwrap_or(c.integration);
                c.readout = self.readout;
            }
            NetworkConfig::V(c) => {
                c.hidden = [self.hidden.unwrap_or(c.hidden[0]), self.hidden2.unwrap_or(c.hidden[1])];
                c.readout = self.readout;
            }
        }
        cfg
    }

    pub fn require<'a>(&self, field: &'a Option<PathBuf>, name: &str) -> anyhow::Result<&'a Path> {
        field
            .as_deref()
            .ok_or_else(|| rtmotion::Error::Validation(format!("--{name} is required")).into())
    }
}

/// Training flags shared by `train`, `eval` and `sweep-w`.
#[derive(Debug, Clone, clap::Args)]
pub struct TrainFlags {
    #[arg(long, value_parser = parse_arch)]
    pub architecture: Option<Architecture>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    /// Items per mini-batch.
    #[arg(long, conflicts_with = "batch_count")]
    pub batch_size: Option<usize>,
    /// Mini-batches per epoch, as an alternative to --batch-size.
    #[arg(long)]
    pub batch_count: Option<usize>,
    #[arg(long)]
    pub noise_std: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Recurrent width (DD encoder, or first V layer).
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Second V layer width.
    #[arg(long)]
    pub hidden2: Option<usize>,
    /// DD integration layer width.
    #[arg(long)]
    pub integration: Option<usize>,
    #[arg(long, value_parser = parse_readout)]
    pub readout: Option<Readout>,
    #[arg(long, value_parser = parse_setting)]
    pub setting: Option<Setting>,
}

impl TrainFlags {
    pub fn apply(&self, cfg: &mut RunConfig) {
        let t = &mut cfg.training;
        set(&mut cfg.architecture, self.architecture);
        set(&mut t.epochs, self.epochs);
        set(&mut t.learning_rate, self.learning_rate);
        set(&mut t.momentum, self.momentum);
        set(&mut t.input_noise_std, self.noise_std);
        set(&mut t.seed, self.seed);
        if let Some(n) = self.batch_size {
            t.batching = Batching::Size(n);
        }
        if let Some(n) = self.batch_count {
            t.batching = Batching::Count(n);
        }
        cfg.hidden = self.hidden.or(cfg.hidden);
        cfg.hidden2 = self.hidden2.or(cfg.hidden2);
        cfg.integration = self.integration.or(cfg.integration);
        set(&mut cfg.readout, self.readout);
        cfg.setting = self.setting.or(cfg.setting);
    }
}

/// Data preparation flags shared by `prepare` and `sweep-w`.
#[derive(Debug, Clone, clap::Args)]
pub struct PrepareFlags {
    #[arg(long, value_parser = parse_form)]
    pub input_form: Option<InputForm>,
    /// Skip mirror augmentation.
    #[arg(long)]
    pub no_augment: bool,
    /// Resampled period length.
    #[arg(long)]
    pub length: Option<usize>,
    #[arg(long)]
    pub min_tail: Option<usize>,
    #[arg(long)]
    pub selection_seed: Option<u64>,
}

impl PrepareFlags {
    pub fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.input_form, self.input_form);
        if self.no_augment {
            cfg.augment = false;
        }
        set(&mut cfg.length, self.length);
        set(&mut cfg.min_tail, self.min_tail);
        set(&mut cfg.selection_seed, self.selection_seed);
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (slot, v) => *slot = v,
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

pub fn parse_arch(s: &str) -> Result<Architecture, String> {
    s.parse().map_err(|e: rtmotion::Error| e.to_string())
}

pub fn parse_form(s: &str) -> Result<InputForm, String> {
    s.parse().map_err(|e: rtmotion::Error| e.to_string())
}

pub fn parse_protocol(s: &str) -> Result<Protocol, String> {
    s.parse().map_err(|e: rtmotion::Error| e.to_string())
}

pub fn parse_setting(s: &str) -> Result<Setting, String> {
    match s {
        "A" | "a" => Ok(Setting::A),
        "B" | "b" => Ok(Setting::B),
        other => Err(format!("unknown setting '{other}'")),
    }
}

pub fn parse_readout(s: &str) -> Result<Readout, String> {
    match s {
        "final" => Ok(Readout::Final),
        "mean" => Ok(Readout::Mean),
        other => Err(format!("unknown readout '{other}'")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlay_merges_nested_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"training": {"epochs": 9}, "architecture": "v"}"#).unwrap();
        let base = RunConfig {
            min_tail: 11,
            ..RunConfig::default()
        };
        let cfg = base.overlay(&path).unwrap();
        assert_eq!(cfg.training.epochs, 9);
        assert_eq!(cfg.training.learning_rate, TrainingConfig::default().learning_rate);
        assert_eq!(cfg.architecture, Architecture::V);
        assert_eq!(cfg.min_tail, 11);
    }

    #[test]
    fn widths_reach_the_network() {
        let cfg = RunConfig {
            architecture: Architecture::V,
            hidden: Some(3),
            readout: Readout::Mean,
            ..RunConfig::default()
        };
        match cfg.network_config(51) {
            NetworkConfig::V(v) => {
                assert_eq!(v.hidden[0], 3);
                assert_eq!(v.readout, Readout::Mean);
            }
            other => panic!("{other:?}"),
        }
    }
}
