use rand::seq::SliceRandom;

use super::adam::{adam_step, AdamConfig, AdamState};
use super::mlp::{backward, forward, init_model, MlpModel};
use crate::data::{CandidateOverlay, Dataset};
use crate::error::{Error, Result};
use crate::loss::LossConfig;
use crate::tensor::StreamRng;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub hidden: [usize; 2],
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    /// Substream 0 initializes the weights, substream `1/e` shuffles epoch `e`.
    pub seed: u64,
    pub loss: LossConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: [256, 256],
            epochs: 500,
            batch_size: 128,
            adam: AdamConfig::default(),
            seed: 0,
            loss: LossConfig::propml(1.0),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be >= 1"));
        }
        if !(self.adam.lr >= 0.0 && self.adam.lr.is_finite()) {
            return Err(Error::invalid(format!(
                "learning rate must be >= 0, got {}",
                self.adam.lr
            )));
        }
        if self.hidden.contains(&0) {
            return Err(Error::invalid("hidden widths must be positive"));
        }
        self.loss.validate()
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub model: MlpModel,
    /// Mean training loss of each epoch, weighted by batch size.
    pub loss_trace: Vec<f64>,
}

/// Mini-batch Adam on the candidate labels of `train_indices`.
pub fn train(
    dataset: &Dataset,
    overlay: &CandidateOverlay,
    train_indices: &[usize],
    config: &TrainConfig,
) -> Result<TrainOutput> {
    config.validate()?;
    if train_indices.is_empty() {
        return Err(Error::invalid("empty training set"));
    }
    if overlay.len() != dataset.len() {
        return Err(Error::data("overlay does not match dataset"));
    }
    if let Some(&bad) = train_indices.iter().find(|&&i| i >= dataset.len()) {
        return Err(Error::invalid(format!("training index {bad} out of range")));
    }

    let root = StreamRng::new(config.seed);
    let dims = [
        dataset.dim(),
        config.hidden[0],
        config.hidden[1],
        dataset.num_classes(),
    ];
    let mut model = init_model(dims, root.substream(0).seed())?;
    let lengths: Vec<usize> = model.parameters_mut().iter().map(|p| p.len()).collect();
    let mut state = AdamState::new(&lengths);
    let shuffles = root.substream(1);

    let mut order = train_indices.to_vec();
    let mut loss_trace = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffles.substream(epoch as u64));
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let x = dataset.features().select_rows(batch);
            let s = overlay.select(batch);
            let (logits, cache) = forward(&model, &x)?;
            let loss = config.loss.evaluate(&logits, &s)?;
            let grads = backward(&model, &cache, &loss.grad_logits)?;
            adam_step(
                &mut model.parameters_mut(),
                &grads.tensors(),
                &mut state,
                &config.adam,
            )?;
            epoch_loss += loss.value * batch.len() as f64;
        }
        let mean = epoch_loss / order.len() as f64;
        if !mean.is_finite() || !model.is_finite() {
            return Err(Error::NonFinite(format!(
                "training diverged at epoch {epoch}"
            )));
        }
        loss_trace.push(mean);
    }
    Ok(TrainOutput { model, loss_trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_generate, SynthConfig};
    use crate::model::predict_proba;

    fn separable() -> Dataset {
        synth_generate(&SynthConfig {
            num_instances: 120,
            num_classes: 4,
            dim: 8,
            labels_min: 1,
            labels_max: 2,
            noise_std: 0.0,
            seed: 5,
        })
        .unwrap()
    }

    fn small_config() -> TrainConfig {
        TrainConfig {
            hidden: [16, 16],
            epochs: 30,
            batch_size: 32,
            seed: 3,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_learning_rate_keeps_initial_parameters() {
        let ds = separable();
        let overlay = CandidateOverlay::clean(&ds);
        let cfg = TrainConfig {
            adam: AdamConfig {
                lr: 0.0,
                ..AdamConfig::default()
            },
            epochs: 3,
            ..small_config()
        };
        let idx: Vec<usize> = (0..ds.len()).collect();
        let out = train(&ds, &overlay, &idx, &cfg).unwrap();
        let init =
            init_model([8, 16, 16, 4], StreamRng::new(cfg.seed).substream(0).seed()).unwrap();
        assert_eq!(out.model, init);
    }

    #[test]
    fn same_seed_same_trace() {
        let ds = separable();
        let overlay = CandidateOverlay::clean(&ds);
        let idx: Vec<usize> = (0..ds.len()).collect();
        let a = train(&ds, &overlay, &idx, &small_config()).unwrap();
        let b = train(&ds, &overlay, &idx, &small_config()).unwrap();
        assert_eq!(a.loss_trace, b.loss_trace);
        assert_eq!(a.model, b.model);
        assert!(a.loss_trace.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn fits_separable_data() {
        let ds = separable();
        let overlay = CandidateOverlay::clean(&ds);
        let idx: Vec<usize> = (0..ds.len()).collect();
        let cfg = TrainConfig {
            epochs: 200,
            adam: AdamConfig {
                lr: 3e-3,
                ..AdamConfig::default()
            },
            loss: LossConfig::bce(),
            ..small_config()
        };
        let out = train(&ds, &overlay, &idx, &cfg).unwrap();
        let p = predict_proba(&out.model, ds.features()).unwrap();
        let exact = (0..ds.len())
            .filter(|&i| {
                let y = &ds.true_labels()[i];
                (0..4).all(|c| (p.get(i, c) > 0.5) == y.contains(c))
            })
            .count();
        assert!(
            exact as f64 / ds.len() as f64 >= 0.99,
            "subset accuracy {exact}/{}",
            ds.len()
        );
    }

    #[test]
    fn full_batch_small_lr_loss_decreases() {
        let ds = synth_generate(&SynthConfig {
            num_instances: 80,
            num_classes: 5,
            dim: 10,
            labels_min: 1,
            labels_max: 3,
            noise_std: 0.3,
            seed: 8,
        })
        .unwrap();
        let overlay = CandidateOverlay::clean(&ds);
        let idx: Vec<usize> = (0..ds.len()).collect();
        let cfg = TrainConfig {
            epochs: 200,
            batch_size: ds.len(),
            adam: AdamConfig {
                lr: 1e-4,
                ..AdamConfig::default()
            },
            loss: LossConfig::propml(0.5),
            ..small_config()
        };
        let trace = train(&ds, &overlay, &idx, &cfg).unwrap().loss_trace;
        let head: f64 = trace[..20].iter().sum::<f64>() / 20.0;
        let tail: f64 = trace[trace.len() - 20..].iter().sum::<f64>() / 20.0;
        assert!(tail < head, "head {head} tail {tail}");
    }

    #[test]
    fn rejects_empty_training_set_and_bad_config() {
        let ds = separable();
        let overlay = CandidateOverlay::clean(&ds);
        assert!(train(&ds, &overlay, &[], &small_config()).is_err());
        let cfg = TrainConfig {
            epochs: 0,
            ..small_config()
        };
        assert!(train(&ds, &overlay, &[0, 1], &cfg).is_err());
        assert!(train(&ds, &overlay, &[ds.len()], &small_config()).is_err());
    }
}
