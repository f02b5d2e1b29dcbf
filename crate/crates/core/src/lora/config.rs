use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fine-tuning hyperparameters. Only `learning_rate`, `warmup_fraction`,
/// `max_steps` and `clip_norm` drive computation here; the rest are kept as a
/// record of the training setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub rank: usize,
    pub alpha: f64,
    pub dropout: f64,
    pub learning_rate: f64,
    pub warmup_fraction: f64,
    pub weight_decay: f64,
    pub max_steps: u64,
    pub clip_norm: f64,
    pub max_seq_len: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub eval_every: u64,
    pub checkpoint_every: u64,
    pub checkpoint_retention: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            rank: 64,
            alpha: 2.0,
            dropout: 0.0,
            learning_rate: 4e-5,
            warmup_fraction: 0.10,
            weight_decay: 0.05,
            max_steps: 500,
            clip_norm: 1.0,
            max_seq_len: 2048,
            batch_size: 2,
            seed: 42,
            eval_every: 50,
            checkpoint_every: 100,
            checkpoint_retention: 3,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive_int = [
            ("rank", self.rank as u64),
            ("max_steps", self.max_steps),
            ("max_seq_len", self.max_seq_len as u64),
            ("batch_size", self.batch_size as u64),
            ("eval_every", self.eval_every),
            ("checkpoint_every", self.checkpoint_every),
            ("checkpoint_retention", self.checkpoint_retention as u64),
        ];
        for (name, v) in positive_int {
            if v == 0 {
                return Err(Error::Validation(format!("{name} must be positive")));
            }
        }
        for (name, v) in [
            ("alpha", self.alpha),
            ("learning_rate", self.learning_rate),
            ("clip_norm", self.clip_norm),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.warmup_fraction > 0.0 && self.warmup_fraction < 1.0) {
            return Err(Error::Validation(format!(
                "warmup_fraction must be in (0, 1), got {}",
                self.warmup_fraction
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Validation(format!("dropout must be in [0, 1), got {}", self.dropout)));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::Validation("weight_decay must be non-negative".into()));
        }
        Ok(())
    }

    /// `ceil(warmup_fraction * max_steps)`.
    pub fn warmup_steps(&self) -> u64 {
        let w = self.warmup_fraction * self.max_steps as f64;
        // absorb representation error such as 0.1 * 500 = 50.000000000000004
        (w - 1e-9).ceil().max(1.0) as u64
    }

    /// Flat `key = value` TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: TrainConfig =
            toml::from_str(text).map_err(|e| Error::Schema(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}
