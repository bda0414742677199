//! Turning clean multi-label data into partial multi-label data.
//!
//! Two protocols, both of which only ever add false candidates:
//!
//! * **flip**: every negative label independently becomes a candidate with
//!   probability `q`.
//! * **scorer**: a one-vs-rest logistic scorer is fit on the clean labels and
//!   each instance receives about `q·|Y|` distractors, the highest-scoring
//!   labels outside `Y`. Per-instance counts are rounded cumulatively so the
//!   dataset total stays within half a label of the target.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{CandidateOverlay, Dataset, LabelSet, OverlaySource};
use crate::error::{Error, Result};
use crate::tensor::{matmul, matmul_tn, sigmoid_scalar, Matrix, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorruptionMode {
    Flip,
    Scorer,
}

impl CorruptionMode {
    pub fn name(&self) -> &'static str {
        match self {
            CorruptionMode::Flip => "flip",
            CorruptionMode::Scorer => "scorer",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "flip" => Some(CorruptionMode::Flip),
            "scorer" => Some(CorruptionMode::Scorer),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorruptionConfig {
    pub mode: CorruptionMode,
    /// Flip probability, or false:true ratio for the scorer protocol.
    pub q: f64,
    pub seed: u64,
    pub scorer_epochs: usize,
    pub scorer_lr: f64,
}

impl CorruptionConfig {
    pub fn new(mode: CorruptionMode, q: f64, seed: u64) -> Self {
        CorruptionConfig {
            mode,
            q,
            seed,
            scorer_epochs: 300,
            scorer_lr: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.mode {
            CorruptionMode::Flip if !(0.0..=1.0).contains(&self.q) => Err(Error::invalid(format!(
                "flip probability must lie in [0, 1], got {}",
                self.q
            ))),
            CorruptionMode::Scorer if !(self.q >= 0.0 && self.q.is_finite()) => Err(
                Error::invalid(format!("scorer ratio must be >= 0, got {}", self.q)),
            ),
            _ if self.scorer_epochs == 0 || !(self.scorer_lr > 0.0) => Err(Error::invalid(
                "scorer epochs and learning rate must be positive",
            )),
            _ => Ok(()),
        }
    }

    /// Runs the configured protocol, fitting the scorer when needed.
    pub fn apply(&self, dataset: &Dataset) -> Result<CandidateOverlay> {
        self.validate()?;
        match self.mode {
            CorruptionMode::Flip => corrupt_flip(dataset, self.q, self.seed),
            CorruptionMode::Scorer => {
                let scorer = fit_scorer(dataset, self.scorer_epochs, self.scorer_lr, self.seed)?;
                corrupt_scorer(dataset, &scorer, self.q, self.seed)
            }
        }
    }
}

/// Instance `i` draws from substream `i` of `seed`, one uniform per negative
/// label in ascending order, so a larger `q` yields a superset under the same seed.
pub fn corrupt_flip(dataset: &Dataset, q: f64, seed: u64) -> Result<CandidateOverlay> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::invalid(format!(
            "flip probability must lie in [0, 1], got {q}"
        )));
    }
    let root = StreamRng::new(seed);
    let c = dataset.num_classes();
    let candidates = dataset
        .true_labels()
        .iter()
        .enumerate()
        .map(|(i, y)| {
            let mut rng = root.substream(i as u64);
            (0..c)
                .filter(|&l| {
                    if y.contains(l) {
                        return true;
                    }
                    let u: f64 = rng.random();
                    u < q
                })
                .collect::<LabelSet>()
        })
        .collect();
    Ok(CandidateOverlay {
        candidates,
        source: OverlaySource::Flip { q },
        seed,
    })
}

/// Linear one-vs-rest scorer: `scores = x · W + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearScorer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl LinearScorer {
    pub fn scores(&self, x: &Matrix) -> Result<Matrix> {
        let mut s = matmul(x, &self.weights)?;
        s.add_row_vector(&self.bias);
        Ok(s)
    }
}

/// Full-batch gradient descent on the mean per-class logistic loss against
/// the clean labels. Weights start from `N(0, 0.01²)` drawn from `seed`.
pub fn fit_scorer(dataset: &Dataset, epochs: usize, lr: f64, seed: u64) -> Result<LinearScorer> {
    if dataset.is_empty() {
        return Err(Error::invalid("cannot fit a scorer on an empty dataset"));
    }
    let x = dataset.features();
    let (n, d) = x.shape();
    let c = dataset.num_classes();
    let mut rng = StreamRng::new(seed);
    let init = Normal::new(0.0, 0.01).expect("valid normal");
    let mut scorer = LinearScorer {
        weights: Matrix::from_vec(d, c, (0..d * c).map(|_| init.sample(&mut rng)).collect())?,
        bias: vec![0.0; c],
    };
    let targets: Vec<Vec<bool>> = dataset.true_labels().iter().map(|y| y.mask(c)).collect();
    let scale = 1.0 / n as f64;

    for _ in 0..epochs {
        let mut residual = scorer.scores(x)?;
        for (r, t) in targets.iter().enumerate() {
            for (v, &pos) in residual.row_mut(r).iter_mut().zip(t) {
                *v = (sigmoid_scalar(*v) - if pos { 1.0 } else { 0.0 }) * scale;
            }
        }
        let grad_w = matmul_tn(x, &residual)?;
        for (w, g) in scorer
            .weights
            .as_mut_slice()
            .iter_mut()
            .zip(grad_w.as_slice())
        {
            *w -= lr * g;
        }
        for r in 0..n {
            for (b, g) in scorer.bias.iter_mut().zip(residual.row(r)) {
                *b -= lr * g;
            }
        }
    }
    if !scorer.weights.is_finite() || scorer.bias.iter().any(|b| !b.is_finite()) {
        return Err(Error::NonFinite("scorer training diverged".into()));
    }
    Ok(scorer)
}

/// Number of distractors per instance: cumulative rounding of the capped
/// targets `min(q·|Y_i|, C − |Y_i|)`, so that every count is the floor or
/// ceiling of its target and the running total never drifts by more than 1/2.
pub fn distractor_counts(label_counts: &[usize], num_classes: usize, q: f64) -> Vec<usize> {
    let mut cumulative = 0.0;
    let mut assigned = 0usize;
    label_counts
        .iter()
        .map(|&k| {
            let cap = num_classes.saturating_sub(k);
            cumulative += (q * k as f64).min(cap as f64);
            let total = (cumulative + 0.5).floor() as usize;
            let m = total.saturating_sub(assigned).min(cap);
            assigned += m;
            m
        })
        .collect()
}

/// Adds the top-scoring non-true labels to each instance; equal scores go to
/// the lower label index. `seed` is recorded in the overlay header only.
pub fn corrupt_scorer(
    dataset: &Dataset,
    scorer: &LinearScorer,
    q: f64,
    seed: u64,
) -> Result<CandidateOverlay> {
    if !(q >= 0.0 && q.is_finite()) {
        return Err(Error::invalid(format!(
            "scorer ratio must be >= 0, got {q}"
        )));
    }
    let scores = scorer.scores(dataset.features())?;
    let c = dataset.num_classes();
    if scores.cols() != c {
        return Err(Error::shape("scorer class count differs from dataset"));
    }
    let counts: Vec<usize> = dataset.true_labels().iter().map(LabelSet::len).collect();
    let extra = distractor_counts(&counts, c, q);
    let candidates = dataset
        .true_labels()
        .iter()
        .zip(extra)
        .enumerate()
        .map(|(i, (y, m))| pick_distractors(scores.row(i), y, m))
        .collect();
    Ok(CandidateOverlay {
        candidates,
        source: OverlaySource::Scorer { q },
        seed,
    })
}

fn pick_distractors(scores: &[f64], truth: &LabelSet, m: usize) -> LabelSet {
    let mut negatives: Vec<usize> = (0..scores.len()).filter(|&l| !truth.contains(l)).collect();
    negatives.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    truth.iter().chain(negatives.into_iter().take(m)).collect()
}
