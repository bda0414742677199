//! Corruption → k-fold CV → λ grid → aggregated reports, plus Friedman /
//! Nemenyi rank statistics across datasets.

mod config;
mod cv;
mod report;
mod stats;

pub use config::{ExperimentConfig, LabelSource, DEFAULT_LAMBDA_GRID};
pub use cv::{
    run_cv, run_cv_with, select_lambda, Aggregate, MethodSummary, ResultEntry, ResultsTable,
};
pub use report::{
    emit_report, parse_report, render_cd_plot, render_report, ParsedReport, SummaryLine,
    CD_PLOT_FILE, RESULTS_FILE,
};
pub use stats::{friedman_nemenyi, nemenyi_q, Alpha, Better, RankStats};
