//! Declarative experiment configuration.
//!
//! Text form is one `key = value` per line; `#` starts a comment. Keys:
//!
//! | key             | value                                   | default                |
//! |-----------------|-----------------------------------------|------------------------|
//! | `data`          | dataset path                            | required               |
//! | `overlay`       | overlay path (exclusive with `corrupt`) |                        |
//! | `corrupt`       | `flip` or `scorer`                      | clean labels           |
//! | `q`             | corruption level                        | required with `corrupt`|
//! | `scorer_epochs` | scorer gradient steps                   | 300                    |
//! | `scorer_lr`     | scorer step size                        | 0.5                    |
//! | `folds`         | CV folds                                | 5                      |
//! | `lambda_grid`   | comma-separated λ values in (0, 1]      | 0.02,…,1               |
//! | `methods`       | comma-separated `propml`, `bce`         | propml,bce             |
//! | `criterion`     | metric used to pick λ                   | average_precision      |
//! | `epochs`        | training epochs                         | 500                    |
//! | `batch_size`    |                                         | 128                    |
//! | `lr`            | Adam step size                          | 0.001                  |
//! | `hidden`        | `h1,h2`                                 | 256,256                |
//! | `epsilon`       | probability clamp                       | 1e-7                   |
//! | `seed`          | root seed                               | 0                      |
//! | `jobs`          | worker threads, 0 = all cores           | 0                      |
//!
//! Seed substreams: 0 → fold plan, 1/f → training for fold `f`, 2 → inline corruption.

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::corrupt::{CorruptionConfig, CorruptionMode};
use crate::error::{Error, Result};
use crate::loss::{LossConfig, LossKind, DEFAULT_EPSILON};
use crate::metrics::MetricName;
use crate::model::TrainConfig;
use crate::tensor::StreamRng;

pub const DEFAULT_LAMBDA_GRID: [f64; 8] = [0.02, 0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0];

#[derive(Debug, Clone, PartialEq)]
pub enum LabelSource {
    Clean,
    Overlay(PathBuf),
    /// Corrupt once before splitting; `q` and the scorer settings apply, the
    /// seed is derived from the experiment seed.
    Corrupt {
        mode: CorruptionMode,
        q: f64,
        scorer_epochs: usize,
        scorer_lr: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub data: PathBuf,
    pub labels: LabelSource,
    pub folds: usize,
    pub lambda_grid: Vec<f64>,
    pub methods: Vec<LossKind>,
    pub criterion: MetricName,
    /// `seed` and `loss` are overwritten per cell.
    pub train: TrainConfig,
    pub epsilon: f64,
    pub seed: u64,
    /// Worker threads; 0 means one per available core. Does not affect results.
    pub jobs: usize,
}

impl ExperimentConfig {
    pub fn new(data: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            data: data.into(),
            labels: LabelSource::Clean,
            folds: 5,
            lambda_grid: DEFAULT_LAMBDA_GRID.to_vec(),
            methods: vec![LossKind::ProPml, LossKind::BceCandidates],
            criterion: MetricName::AveragePrecision,
            train: TrainConfig::default(),
            epsilon: DEFAULT_EPSILON,
            seed: 0,
            jobs: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::invalid(format!(
                "need at least 2 folds, got {}",
                self.folds
            )));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid("no methods configured"));
        }
        let mut sorted = self.methods.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.methods.len() {
            return Err(Error::invalid("duplicate method"));
        }
        if self.methods.contains(&LossKind::ProPml) && self.lambda_grid.is_empty() {
            return Err(Error::invalid("empty lambda grid for propml"));
        }
        if let Some(l) = self.lambda_grid.iter().find(|&&l| !(l > 0.0 && l <= 1.0)) {
            return Err(Error::invalid(format!("lambda {l} outside (0, 1]")));
        }
        if let LabelSource::Corrupt { .. } = self.labels {
            self.corruption().expect("corrupt source").validate()?;
        }
        let mut train = self.train.clone();
        train.loss = LossConfig {
            epsilon: self.epsilon,
            ..LossConfig::bce()
        };
        train.validate()
    }

    /// Inline corruption settings, if any.
    pub fn corruption(&self) -> Option<CorruptionConfig> {
        match self.labels {
            LabelSource::Corrupt {
                mode,
                q,
                scorer_epochs,
                scorer_lr,
            } => Some(CorruptionConfig {
                mode,
                q,
                seed: StreamRng::new(self.seed).substream(2).seed(),
                scorer_epochs,
                scorer_lr,
            }),
            _ => None,
        }
    }

    pub fn split_seed(&self) -> u64 {
        StreamRng::new(self.seed).substream(0).seed()
    }

    pub fn fold_seed(&self, fold: usize) -> u64 {
        StreamRng::new(self.seed)
            .substream_path(&[1, fold as u64])
            .seed()
    }

    pub fn loss_for(&self, method: LossKind, lambda: Option<f64>) -> LossConfig {
        LossConfig {
            kind: method,
            lambda: lambda.unwrap_or(1.0),
            epsilon: self.epsilon,
        }
    }

    /// Canonical key/value text; `jobs` is omitted because it never changes results.
    pub fn to_text(&self) -> String {
        let join = |v: &[String]| v.join(",");
        let mut lines = vec![format!("data = {}", self.data.display())];
        match &self.labels {
            LabelSource::Clean => {}
            LabelSource::Overlay(p) => lines.push(format!("overlay = {}", p.display())),
            LabelSource::Corrupt {
                mode,
                q,
                scorer_epochs,
                scorer_lr,
            } => {
                lines.push(format!("corrupt = {}", mode.name()));
                lines.push(format!("q = {q}"));
                lines.push(format!("scorer_epochs = {scorer_epochs}"));
                lines.push(format!("scorer_lr = {scorer_lr}"));
            }
        }
        lines.push(format!("folds = {}", self.folds));
        lines.push(format!(
            "lambda_grid = {}",
            join(
                &self
                    .lambda_grid
                    .iter()
                    .map(f64::to_string)
                    .collect::<Vec<_>>()
            )
        ));
        lines.push(format!(
            "methods = {}",
            join(
                &self
                    .methods
                    .iter()
                    .map(|m| m.name().to_string())
                    .collect::<Vec<_>>()
            )
        ));
        lines.push(format!("criterion = {}", self.criterion));
        lines.push(format!("epochs = {}", self.train.epochs));
        lines.push(format!("batch_size = {}", self.train.batch_size));
        lines.push(format!("lr = {}", self.train.adam.lr));
        lines.push(format!(
            "hidden = {},{}",
            self.train.hidden[0], self.train.hidden[1]
        ));
        lines.push(format!("epsilon = {}", self.epsilon));
        lines.push(format!("seed = {}", self.seed));
        let mut text = lines.join("\n");
        text.push('\n');
        text
    }

    pub fn config_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }

    pub fn from_text(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg = ExperimentConfig::new(PathBuf::new());
        let mut data = None;
        let mut overlay = None;
        let mut corrupt = None;
        let mut q = None;
        let mut scorer_epochs = 300;
        let mut scorer_lr = 0.5;
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::parse(origin, no + 1, msg);
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let num = |v: &str| {
                v.parse::<f64>()
                    .map_err(|_| err(format!("bad number `{v}` for {key}")))
            };
            let count = |v: &str| {
                v.parse::<usize>()
                    .map_err(|_| err(format!("bad count `{v}` for {key}")))
            };
            match key {
                "data" => data = Some(PathBuf::from(value)),
                "overlay" => overlay = Some(PathBuf::from(value)),
                "corrupt" => {
                    corrupt = Some(
                        CorruptionMode::parse(value)
                            .ok_or_else(|| err(format!("unknown corruption mode `{value}`")))?,
                    )
                }
                "q" => q = Some(num(value)?),
                "scorer_epochs" => scorer_epochs = count(value)?,
                "scorer_lr" => scorer_lr = num(value)?,
                "folds" => cfg.folds = count(value)?,
                "lambda_grid" => {
                    cfg.lambda_grid = value
                        .split(',')
                        .map(|v| num(v.trim()))
                        .collect::<Result<_>>()?
                }
                "methods" => {
                    cfg.methods = value
                        .split(',')
                        .map(|m| {
                            LossKind::parse(m.trim())
                                .ok_or_else(|| err(format!("unknown method `{m}`")))
                        })
                        .collect::<Result<_>>()?
                }
                "criterion" => {
                    cfg.criterion = value.parse().map_err(|e: Error| err(e.to_string()))?
                }
                "epochs" => cfg.train.epochs = count(value)?,
                "batch_size" => cfg.train.batch_size = count(value)?,
                "lr" => cfg.train.adam.lr = num(value)?,
                "hidden" => {
                    let widths: Vec<usize> = value
                        .split(',')
                        .map(|v| count(v.trim()))
                        .collect::<Result<_>>()?;
                    cfg.train.hidden = widths
                        .try_into()
                        .map_err(|_| err("hidden needs exactly two widths".into()))?;
                }
                "epsilon" => cfg.epsilon = num(value)?,
                "seed" => {
                    cfg.seed = value
                        .parse()
                        .map_err(|_| err(format!("bad seed `{value}`")))?
                }
                "jobs" => cfg.jobs = count(value)?,
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        cfg.data = data.ok_or_else(|| Error::parse(origin, 0, "missing `data`"))?;
        cfg.labels = match (overlay, corrupt) {
            (Some(_), Some(_)) => {
                return Err(Error::parse(
                    origin,
                    0,
                    "`overlay` and `corrupt` are exclusive",
                ))
            }
            (Some(p), None) => LabelSource::Overlay(p),
            (None, Some(mode)) => LabelSource::Corrupt {
                mode,
                q: q.ok_or_else(|| Error::parse(origin, 0, "`corrupt` needs `q`"))?,
                scorer_epochs,
                scorer_lr,
            },
            (None, None) => LabelSource::Clean,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut cfg = ExperimentConfig::new("data/scene.ml");
        cfg.labels = LabelSource::Corrupt {
            mode: CorruptionMode::Scorer,
            q: 1.5,
            scorer_epochs: 100,
            scorer_lr: 0.25,
        };
        cfg.lambda_grid = vec![0.1, 0.5];
        cfg.train.hidden = [32, 16];
        cfg.seed = 99;
        let back = ExperimentConfig::from_text(&cfg.to_text(), Path::new("cfg")).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.config_hash(), cfg.config_hash());
    }

    #[test]
    fn jobs_do_not_change_the_hash() {
        let a = ExperimentConfig::new("x");
        let b = ExperimentConfig {
            jobs: 4,
            ..a.clone()
        };
        assert_eq!(a.config_hash(), b.config_hash());
        let c = ExperimentConfig {
            seed: 1,
            ..a.clone()
        };
        assert_ne!(a.config_hash(), c.config_hash());
    }

    #[test]
    fn rejects_bad_configs() {
        let p = Path::new("cfg");
        assert!(ExperimentConfig::from_text("folds = 5\n", p).is_err());
        assert!(ExperimentConfig::from_text("data = x\nfolds = 1\n", p).is_err());
        assert!(ExperimentConfig::from_text("data = x\nlambda_grid = 0,0.5\n", p).is_err());
        assert!(ExperimentConfig::from_text("data = x\ncorrupt = flip\n", p).is_err());
        assert!(ExperimentConfig::from_text("data = x\ncorrupt = flip\nq = 2\n", p).is_err());
        assert!(ExperimentConfig::from_text("data = x\nwidth = 3\n", p).is_err());
        assert!(ExperimentConfig::from_text("data = x\nmethods = propml,propml\n", p).is_err());
        assert!(ExperimentConfig::from_text("data = x # comment\nmethods = bce\n", p).is_ok());
    }
}
