//! Partial multi-label learning toolkit.
//!
//! * [`loss`]: the ProPML loss and the BCE-on-candidates baseline with exact
//!   logit gradients.
//! * [`model`]: a two-hidden-layer MLP trained with mini-batch Adam.
//! * [`corrupt`]: flip and scorer-guided protocols that turn clean
//!   multi-label data into candidate-set data.
//! * [`metrics`]: average precision, coverage, Hamming loss, ranking loss,
//!   one-error, mAP, CF1 and OF1.
//! * [`harness`]: k-fold cross-validation over a λ grid and Friedman /
//!   Nemenyi rank statistics.
//! * [`data`] and [`tensor`]: file formats, splits, a synthetic generator,
//!   and the dense `f64` kernel underneath everything.

pub mod corrupt;
pub mod data;
pub mod error;
pub mod harness;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod tensor;

pub use corrupt::{CorruptionConfig, CorruptionMode, LinearScorer};
pub use data::{CandidateOverlay, Dataset, LabelSet, OverlaySource, SplitPlan};
pub use error::{Error, Result};
pub use harness::{ExperimentConfig, RankStats, ResultsTable};
pub use loss::{LossConfig, LossKind, LossResult};
pub use metrics::{MetricName, MetricReport};
pub use model::{MlpModel, TrainConfig};
pub use tensor::{Matrix, StreamRng};
