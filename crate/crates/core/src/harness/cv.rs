use rayon::prelude::*;

use super::config::{ExperimentConfig, LabelSource};
use crate::data::{load_dataset, load_overlay, make_splits, CandidateOverlay, Dataset, LabelSet};
use crate::error::{Error, Result};
use crate::loss::LossKind;
use crate::metrics::{MetricName, MetricReport};
use crate::model::{predict_proba, train, TrainConfig};

/// One trained-and-evaluated cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultEntry {
    pub method: LossKind,
    /// `None` for methods without a λ.
    pub lambda: Option<f64>,
    pub fold: usize,
    pub report: MetricReport,
}

/// Mean and sample standard deviation (n − 1) over folds.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub method: LossKind,
    pub lambda: Option<f64>,
    pub metric: MetricName,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultsTable {
    pub config_hash: String,
    pub seed: u64,
    pub folds: usize,
    pub criterion: MetricName,
    pub entries: Vec<ResultEntry>,
    pub aggregates: Vec<Aggregate>,
}

/// Best-λ fold means for one method.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: LossKind,
    pub lambda: Option<f64>,
    pub aggregates: Vec<Aggregate>,
}

impl MethodSummary {
    pub fn mean(&self, metric: MetricName) -> f64 {
        self.aggregates
            .iter()
            .find(|a| a.metric == metric)
            .map_or(f64::NAN, |a| a.mean)
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

impl ResultsTable {
    /// Builds the table and its aggregates from raw entries, grouping by
    /// `(method, λ)` in first-appearance order.
    pub fn from_entries(
        config_hash: String,
        seed: u64,
        folds: usize,
        criterion: MetricName,
        entries: Vec<ResultEntry>,
    ) -> Self {
        let mut groups: Vec<(LossKind, Option<f64>)> = Vec::new();
        for e in &entries {
            if !groups.contains(&(e.method, e.lambda)) {
                groups.push((e.method, e.lambda));
            }
        }
        let mut aggregates = Vec::new();
        for (method, lambda) in groups {
            let cells: Vec<&ResultEntry> = entries
                .iter()
                .filter(|e| e.method == method && e.lambda == lambda)
                .collect();
            for metric in MetricName::ALL {
                let values: Vec<f64> = cells.iter().map(|e| e.report.get(metric)).collect();
                let (mean, std) = mean_std(&values);
                aggregates.push(Aggregate {
                    method,
                    lambda,
                    metric,
                    mean,
                    std,
                });
            }
        }
        ResultsTable {
            config_hash,
            seed,
            folds,
            criterion,
            entries,
            aggregates,
        }
    }

    pub fn methods(&self) -> Vec<LossKind> {
        let mut out: Vec<LossKind> = Vec::new();
        for e in &self.entries {
            if !out.contains(&e.method) {
                out.push(e.method);
            }
        }
        out
    }

    pub fn aggregate(
        &self,
        method: LossKind,
        lambda: Option<f64>,
        metric: MetricName,
    ) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.method == method && a.lambda == lambda && a.metric == metric)
    }

    /// λ with the best mean `criterion` for `method`; ties go to the smaller λ.
    /// `None` for a method that was run without λ.
    pub fn best_lambda(&self, method: LossKind, criterion: MetricName) -> Result<Option<f64>> {
        let mut candidates: Vec<(Option<f64>, f64)> = self
            .aggregates
            .iter()
            .filter(|a| a.method == method && a.metric == criterion)
            .map(|a| (a.lambda, a.mean))
            .collect();
        if candidates.is_empty() {
            return Err(Error::invalid(format!(
                "no results for method {}",
                method.name()
            )));
        }
        candidates.sort_by(|a, b| a.0.unwrap_or(0.0).total_cmp(&b.0.unwrap_or(0.0)));
        let mut best = candidates[0];
        for &c in &candidates[1..] {
            if criterion.is_better(c.1, best.1) {
                best = c;
            }
        }
        Ok(best.0)
    }

    /// One summary per method at its selected λ, using the table's criterion.
    pub fn summaries(&self) -> Result<Vec<MethodSummary>> {
        self.methods()
            .into_iter()
            .map(|method| {
                let lambda = self.best_lambda(method, self.criterion)?;
                let aggregates = MetricName::ALL
                    .iter()
                    .filter_map(|&m| self.aggregate(method, lambda, m).cloned())
                    .collect();
                Ok(MethodSummary {
                    method,
                    lambda,
                    aggregates,
                })
            })
            .collect()
    }
}

/// The λ maximizing (or, for loss-type metrics, minimizing) the fold mean of
/// `criterion` among ProPML rows.
pub fn select_lambda(table: &ResultsTable, criterion: &str) -> Result<f64> {
    let metric: MetricName = criterion.parse()?;
    table
        .best_lambda(LossKind::ProPml, metric)?
        .ok_or_else(|| Error::invalid("propml rows carry no lambda"))
}

/// Loads the dataset, resolves the candidate labels and runs every cell.
pub fn run_cv(config: &ExperimentConfig) -> Result<ResultsTable> {
    config.validate()?;
    let (dataset, _) = load_dataset(&config.data)?;
    let overlay = match &config.labels {
        LabelSource::Clean => CandidateOverlay::clean(&dataset),
        LabelSource::Overlay(path) => load_overlay(path, &dataset)?,
        LabelSource::Corrupt { .. } => config
            .corruption()
            .expect("corrupt source")
            .apply(&dataset)?,
    };
    run_cv_with(&dataset, &overlay, config)
}

/// Runs `(fold × method × λ)` cells on an already-loaded dataset and overlay.
/// `config.data` and `config.labels` are only used for the config hash.
pub fn run_cv_with(
    dataset: &Dataset,
    overlay: &CandidateOverlay,
    config: &ExperimentConfig,
) -> Result<ResultsTable> {
    config.validate()?;
    overlay.validate(dataset)?;
    let plan = make_splits(dataset.len(), config.folds, config.split_seed())?;

    let mut cells: Vec<(LossKind, Option<f64>, usize)> = Vec::new();
    for &method in &config.methods {
        let lambdas: Vec<Option<f64>> = match method {
            LossKind::ProPml => config.lambda_grid.iter().copied().map(Some).collect(),
            LossKind::BceCandidates => vec![None],
        };
        for lambda in lambdas {
            for fold in 0..config.folds {
                cells.push((method, lambda, fold));
            }
        }
    }

    let run_cell =
        |&(method, lambda, fold): &(LossKind, Option<f64>, usize)| -> Result<ResultEntry> {
            let train_idx = plan.train_indices(fold);
            let test_idx = plan.test_indices(fold);
            let cfg = TrainConfig {
                seed: config.fold_seed(fold),
                loss: config.loss_for(method, lambda),
                ..config.train.clone()
            };
            let fitted = train(dataset, overlay, &train_idx, &cfg)?;
            let x_test = dataset.features().select_rows(&test_idx);
            let probs = predict_proba(&fitted.model, &x_test)?;
            let truth: Vec<LabelSet> = test_idx
                .iter()
                .map(|&i| dataset.true_labels()[i].clone())
                .collect();
            Ok(ResultEntry {
                method,
                lambda,
                fold,
                report: MetricReport::evaluate(&probs, &truth)?,
            })
        };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    let entries: Vec<ResultEntry> =
        pool.install(|| cells.par_iter().map(run_cell).collect::<Result<Vec<_>>>())?;

    Ok(ResultsTable::from_entries(
        config.config_hash(),
        config.seed,
        config.folds,
        config.criterion,
        entries,
    ))
}
