//! Datasets, candidate-set overlays, their text formats, fold plans and a
//! synthetic generator.
//!
//! Dataset file:
//!
//! ```text
//! #ml C=4 d=5
//! 0,2 1:0.5 3:1
//! 1 0:-0.25
//! ```
//!
//! Overlay file (one candidate set per dataset row, same order):
//!
//! ```text
//! #cand source=flip q=0.2 seed=7
//! 0,2,3
//! 1
//! ```

mod format;
mod split;
mod synth;

use std::fmt;

use crate::error::{Error, Result};
use crate::tensor::Matrix;

pub(crate) use format::write_to_file;
pub use format::{
    load_dataset, load_overlay, read_dataset, read_overlay, save_dataset, save_overlay,
    write_dataset, write_overlay, LoadReport,
};
pub use split::{make_splits, SplitPlan};
pub use synth::{synth_generate, SynthConfig};

/// Sorted, duplicate-free set of label indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct LabelSet(Vec<usize>);

impl LabelSet {
    pub fn new(mut labels: Vec<usize>) -> Self {
        labels.sort_unstable();
        labels.dedup();
        LabelSet(labels)
    }

    pub fn full(num_classes: usize) -> Self {
        LabelSet((0..num_classes).collect())
    }

    #[inline]
    pub fn contains(&self, label: usize) -> bool {
        self.0.binary_search(&label).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn max(&self) -> Option<usize> {
        self.0.last().copied()
    }

    pub fn is_subset(&self, other: &LabelSet) -> bool {
        self.0.iter().all(|&l| other.contains(l))
    }

    /// Membership mask of length `num_classes`.
    pub fn mask(&self, num_classes: usize) -> Vec<bool> {
        let mut m = vec![false; num_classes];
        for &l in &self.0 {
            m[l] = true;
        }
        m
    }
}

impl FromIterator<usize> for LabelSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        LabelSet::new(iter.into_iter().collect())
    }
}

impl fmt::Display for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

/// Features plus clean ground-truth label sets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    true_labels: Vec<LabelSet>,
    num_classes: usize,
}

impl Dataset {
    /// Validates that every instance has at least one label, all labels are
    /// below `num_classes`, and the features are finite.
    pub fn new(features: Matrix, true_labels: Vec<LabelSet>, num_classes: usize) -> Result<Self> {
        if features.rows() != true_labels.len() {
            return Err(Error::shape(format!(
                "{} feature rows but {} label sets",
                features.rows(),
                true_labels.len()
            )));
        }
        if !features.is_finite() {
            return Err(Error::NonFinite("dataset features".into()));
        }
        for (i, y) in true_labels.iter().enumerate() {
            if y.is_empty() {
                return Err(Error::data(format!("instance {i} has no true labels")));
            }
            if let Some(m) = y.max().filter(|&m| m >= num_classes) {
                return Err(Error::data(format!(
                    "instance {i} has label {m} but C={num_classes}"
                )));
            }
        }
        Ok(Dataset {
            features,
            true_labels,
            num_classes,
        })
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn true_labels(&self) -> &[LabelSet] {
        &self.true_labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.true_labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.true_labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn mean_label_count(&self) -> f64 {
        mean_set_size(&self.true_labels)
    }
}

/// Where a candidate overlay came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OverlaySource {
    Clean,
    Flip { q: f64 },
    Scorer { q: f64 },
}

impl OverlaySource {
    pub fn name(&self) -> &'static str {
        match self {
            OverlaySource::Clean => "clean",
            OverlaySource::Flip { .. } => "flip",
            OverlaySource::Scorer { .. } => "scorer",
        }
    }

    pub fn q(&self) -> f64 {
        match *self {
            OverlaySource::Clean => 0.0,
            OverlaySource::Flip { q } | OverlaySource::Scorer { q } => q,
        }
    }
}

/// Per-instance candidate sets aligned to a [`Dataset`].
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateOverlay {
    pub candidates: Vec<LabelSet>,
    pub source: OverlaySource,
    pub seed: u64,
}

impl CandidateOverlay {
    /// Overlay whose candidates are exactly the true labels.
    pub fn clean(dataset: &Dataset) -> Self {
        CandidateOverlay {
            candidates: dataset.true_labels().to_vec(),
            source: OverlaySource::Clean,
            seed: 0,
        }
    }

    /// Checks row count, label range, nonemptiness and `Y ⊆ S` against `dataset`.
    pub fn validate(&self, dataset: &Dataset) -> Result<()> {
        if self.candidates.len() != dataset.len() {
            return Err(Error::data(format!(
                "overlay has {} rows, dataset has {}",
                self.candidates.len(),
                dataset.len()
            )));
        }
        for (i, (s, y)) in self
            .candidates
            .iter()
            .zip(dataset.true_labels())
            .enumerate()
        {
            if s.is_empty() {
                return Err(Error::data(format!("candidate set {i} is empty")));
            }
            if let Some(m) = s.max().filter(|&m| m >= dataset.num_classes()) {
                return Err(Error::data(format!("candidate set {i} has label {m} >= C")));
            }
            if !y.is_subset(s) {
                return Err(Error::data(format!(
                    "candidate set {i} {{{s}}} does not contain true labels {{{y}}}"
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// Mean candidate-set size 𝔼|S|.
    pub fn mean_size(&self) -> f64 {
        mean_set_size(&self.candidates)
    }

    pub fn select(&self, indices: &[usize]) -> Vec<LabelSet> {
        indices
            .iter()
            .map(|&i| self.candidates[i].clone())
            .collect()
    }
}

fn mean_set_size(sets: &[LabelSet]) -> f64 {
    if sets.is_empty() {
        return 0.0;
    }
    sets.iter().map(LabelSet::len).sum::<usize>() as f64 / sets.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        Dataset::new(
            Matrix::zeros(2, 3),
            vec![LabelSet::new(vec![1]), LabelSet::new(vec![0, 2])],
            4,
        )
        .unwrap()
    }

    #[test]
    fn label_set_is_sorted_and_deduped() {
        let s = LabelSet::new(vec![3, 1, 3, 0]);
        assert_eq!(s.as_slice(), &[0, 1, 3]);
        assert_eq!(s.to_string(), "0,1,3");
        assert!(s.contains(3) && !s.contains(2));
    }

    #[test]
    fn dataset_rejects_out_of_range_and_empty_labels() {
        let bad = Dataset::new(Matrix::zeros(1, 1), vec![LabelSet::new(vec![4])], 4);
        assert!(matches!(bad, Err(Error::Data(_))));
        let empty = Dataset::new(Matrix::zeros(1, 1), vec![LabelSet::default()], 4);
        assert!(matches!(empty, Err(Error::Data(_))));
    }

    #[test]
    fn overlay_superset_check() {
        let ds = tiny();
        let mut o = CandidateOverlay::clean(&ds);
        assert!(o.validate(&ds).is_ok());
        o.candidates[0] = LabelSet::new(vec![1, 3]);
        assert!(o.validate(&ds).is_ok());
        o.candidates[0] = LabelSet::new(vec![3]);
        assert!(o.validate(&ds).is_err());
        o.candidates.pop();
        assert!(o.validate(&ds).is_err());
    }

    #[test]
    fn mean_sizes() {
        let ds = tiny();
        assert_eq!(ds.mean_label_count(), 1.5);
        assert_eq!(CandidateOverlay::clean(&ds).mean_size(), 1.5);
    }
}
