use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};
use serde_json::{Map, Value};

use crate::canonical::serialize_extended_f64;
use crate::coarse::{CoarseConfig, CoarseKind};
use crate::error::{Error, Result};
use crate::eval::{EvalConfig, Protocol, Strategy};
use crate::fusion::{ModelConfig, TrainConfig, Variant};
use crate::kg::synthetic::{kinship, KinshipConfig};
use crate::kg::{load_split, DatasetSplit, Mode};
use crate::pathways::{Activation, AttentionKernel};

/// Everything a run needs, read from a JSON object. Absent keys take the
/// defaults below; unknown keys are an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Directory with `train.txt`, `valid.txt`, `test.txt` (and `facts.txt`
    /// when inductive). `null` selects the built-in synthetic kinship graph.
    pub dataset_dir: Option<PathBuf>,
    pub mode: Mode,
    pub hidden_dim: usize,
    pub encoder_layers: usize,
    pub local_layers: usize,
    pub global_layers: usize,
    pub kernel: AttentionKernel,
    pub activation: Activation,
    pub variant: Variant,
    pub lr: f64,
    pub weight_decay: f64,
    pub negatives: usize,
    pub epochs: usize,
    pub seed: u64,
    pub k: usize,
    #[serde(serialize_with = "serialize_extended_f64", deserialize_with = "extended_f64")]
    pub delta: f64,
    pub strategy: Strategy,
    pub protocol: Protocol,
    pub coarse_kind: CoarseKind,
    pub coarse_dim: usize,
    pub coarse_layers: usize,
    pub coarse_epochs: usize,
    pub coarse_lr: f64,
    pub coarse_negatives: usize,
    pub coarse_seed: u64,
    /// Where outputs go when a command is not given an explicit path.
    pub output_dir: PathBuf,
    /// Largest subgraph the `diagnose` command builds dense operators for.
    pub diagnose_entities: usize,
    pub diagnose_pairs: usize,
    pub diagnose_max_ell: u32,
    pub montecarlo_trials: usize,
    /// Family count of the synthetic graph (ignored with a dataset dir).
    pub synthetic_families: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let coarse = CoarseConfig::default();
        let train = TrainConfig::default();
        Self {
            dataset_dir: None,
            mode: Mode::Transductive,
            hidden_dim: 32,
            encoder_layers: 1,
            local_layers: 3,
            global_layers: 1,
            kernel: AttentionKernel::Softmax,
            activation: Activation::Relu,
            variant: Variant::Dual,
            lr: train.lr,
            weight_decay: train.weight_decay,
            negatives: train.negatives,
            epochs: train.epochs,
            seed: train.seed,
            k: 4,
            delta: 8.0,
            strategy: Strategy::CoarseToFine,
            protocol: Protocol::Filtered,
            coarse_kind: coarse.kind,
            coarse_dim: coarse.dim,
            coarse_layers: coarse.layers,
            coarse_epochs: coarse.epochs,
            coarse_lr: coarse.lr,
            coarse_negatives: coarse.negatives,
            coarse_seed: coarse.seed,
            output_dir: PathBuf::from("."),
            diagnose_entities: 200,
            diagnose_pairs: 100,
            diagnose_max_ell: 64,
            montecarlo_trials: 100_000,
            synthetic_families: KinshipConfig::default().families,
        }
    }
}

/// Accepts a number or one of `"inf"`, `"+inf"`, `"-inf"`.
fn extended_f64<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Num {
        F(f64),
        S(String),
    }
    match Num::deserialize(d)? {
        Num::F(x) => Ok(x),
        Num::S(s) => match s.as_str() {
            "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
            "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
            other => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {other:?}"))),
        },
    }
}

fn known_keys() -> Vec<String> {
    match serde_json::to_value(RunConfig::default()) {
        Ok(Value::Object(m)) => m.keys().cloned().collect(),
        _ => Vec::new(),
    }
}

impl RunConfig {
    /// Parses a JSON object, listing every unknown key on failure.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("malformed JSON: {e}")))?;
        let Value::Object(map) = value else {
            return Err(Error::Config("the config must be a JSON object".into()));
        };
        Self::from_map(map)
    }

    fn from_map(map: Map<String, Value>) -> Result<Self> {
        let known = known_keys();
        let unknown: Vec<&String> = map.keys().filter(|k| !known.contains(k)).collect();
        if !unknown.is_empty() {
            let list: Vec<String> = unknown.iter().map(|k| format!("{k:?}")).collect();
            return Err(Error::Config(format!("unknown config keys: {}", list.join(", "))));
        }
        let config: RunConfig =
            serde_json::from_value(Value::Object(map)).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let mut at_least = |name: &str, v: usize, min: usize| {
            if v < min {
                problems.push(format!("{name} = {v} must be at least {min}"));
            }
        };
        at_least("hidden_dim", self.hidden_dim, 1);
        at_least("negatives", self.negatives, 1);
        at_least("epochs", self.epochs, 1);
        at_least("k", self.k, 1);
        at_least("coarse_dim", self.coarse_dim, 1);
        at_least("coarse_negatives", self.coarse_negatives, 1);
        at_least("coarse_epochs", self.coarse_epochs, 1);
        at_least("diagnose_entities", self.diagnose_entities, 2);
        at_least("diagnose_pairs", self.diagnose_pairs, 1);
        at_least("montecarlo_trials", self.montecarlo_trials, crate::spectral::MIN_TRIALS);
        at_least("synthetic_families", self.synthetic_families, 1);
        for (name, v) in [
            ("encoder_layers", self.encoder_layers),
            ("local_layers", self.local_layers),
            ("global_layers", self.global_layers),
            ("coarse_layers", self.coarse_layers),
        ] {
            if v > 16 {
                problems.push(format!("{name} = {v} exceeds 16"));
            }
        }
        if self.diagnose_entities > crate::pathways::DIAGNOSTIC_CAP {
            problems.push(format!(
                "diagnose_entities = {} exceeds {}",
                self.diagnose_entities,
                crate::pathways::DIAGNOSTIC_CAP
            ));
        }
        for (name, v) in [("lr", self.lr), ("coarse_lr", self.coarse_lr)] {
            if !(v.is_finite() && v > 0.0) {
                problems.push(format!("{name} = {v} must be positive"));
            }
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            problems.push(format!("weight_decay = {} must be non-negative", self.weight_decay));
        }
        if self.delta.is_nan() {
            problems.push("delta must not be NaN".into());
        }
        if self.mode == Mode::Inductive && self.dataset_dir.is_none() {
            problems.push("inductive mode needs a dataset_dir".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }

    pub fn model_config(&self, num_relations: usize) -> ModelConfig {
        ModelConfig {
            num_relations,
            hidden: self.hidden_dim,
            encoder_layers: self.encoder_layers,
            local_layers: self.local_layers,
            global_layers: self.global_layers,
            kernel: self.kernel,
            activation: self.activation,
            variant: self.variant,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lr: self.lr,
            weight_decay: self.weight_decay,
            negatives: self.negatives,
            epochs: self.epochs,
            seed: self.seed,
        }
    }

    pub fn coarse_config(&self) -> CoarseConfig {
        CoarseConfig {
            kind: self.coarse_kind,
            dim: self.coarse_dim,
            layers: self.coarse_layers,
            epochs: self.coarse_epochs,
            lr: self.coarse_lr,
            weight_decay: 0.0,
            negatives: self.coarse_negatives,
            seed: self.coarse_seed,
        }
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            k: self.k,
            delta: self.delta,
            strategy: self.strategy,
            protocol: self.protocol,
            ..EvalConfig::default()
        }
    }

    /// Loads the configured dataset, or builds the synthetic one.
    pub fn load_dataset(&self) -> Result<DatasetSplit> {
        match &self.dataset_dir {
            Some(dir) => load_split(dir, self.mode),
            None => kinship(KinshipConfig {
                families: self.synthetic_families,
                ..KinshipConfig::default()
            }),
        }
    }
}

/// Reads and validates a config file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    RunConfig::from_json_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        let c = RunConfig::from_json_str("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!((c.lr, c.weight_decay, c.hidden_dim, c.negatives, c.k, c.delta, c.seed), (5e-4, 1e-5, 32, 128, 4, 8.0, 42));
    }

    #[test]
    fn overrides_and_ranges() {
        let c = RunConfig::from_json_str(r#"{"hidden_dim": 64}"#).unwrap();
        assert_eq!(c.hidden_dim, 64);
        assert_eq!(RunConfig { hidden_dim: 32, ..c }, RunConfig::default());
        let err = RunConfig::from_json_str(r#"{"k": 0}"#).unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("k = 0")), "{err}");
        assert!(RunConfig::from_json_str(r#"{"lr": -1}"#).is_err());
        assert!(RunConfig::from_json_str(r#"{"mode": "inductive"}"#).is_err());
    }

    #[test]
    fn unknown_keys_are_listed() {
        let err = RunConfig::from_json_str(r#"{"hiden_dim": 3, "k": 2, "zeta": 1}"#).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("\"hiden_dim\"") && msg.contains("\"zeta\""), "{msg}");
        assert!(RunConfig::from_json_str("[1]").is_err());
        assert!(RunConfig::from_json_str("{").is_err());
    }

    #[test]
    fn infinite_delta_round_trips() {
        let c = RunConfig::from_json_str(r#"{"delta": "inf", "strategy": "fine-only"}"#).unwrap();
        assert_eq!(c.delta, f64::INFINITY);
        assert_eq!(c.strategy, Strategy::FineOnly);
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_json_str(&json).unwrap(), c);
    }
}
