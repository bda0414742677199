//! Example-based ranking metrics and the class-wise vision metrics, always
//! evaluated against clean ground truth.
//!
//! Ranks are pessimistic: `rank(y) = |{y' : score(y') ≥ score(y)}|`, which is
//! `1 + |{y' : score(y') > score(y)}|` whenever scores are distinct and keeps
//! average precision in `[0, 1]` under ties. Ranking-loss ties count one half.
//! Thresholded metrics predict positive on a strict `>`.
//!
//! Per-instance values are summed in instance order and divided by the count,
//! so results are bit-stable for a given input.

use std::fmt;
use std::str::FromStr;

use crate::data::LabelSet;
use crate::error::{Error, Result};
use crate::tensor::Matrix;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetricName {
    AveragePrecision,
    Coverage,
    HammingLoss,
    RankingLoss,
    OneError,
    Map,
    Cf1,
    Of1,
}

impl MetricName {
    pub const ALL: [MetricName; 8] = [
        MetricName::AveragePrecision,
        MetricName::Coverage,
        MetricName::HammingLoss,
        MetricName::RankingLoss,
        MetricName::OneError,
        MetricName::Map,
        MetricName::Cf1,
        MetricName::Of1,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MetricName::AveragePrecision => "average_precision",
            MetricName::Coverage => "coverage",
            MetricName::HammingLoss => "hamming_loss",
            MetricName::RankingLoss => "ranking_loss",
            MetricName::OneError => "one_error",
            MetricName::Map => "map",
            MetricName::Cf1 => "cf1",
            MetricName::Of1 => "of1",
        }
    }

    pub fn higher_is_better(&self) -> bool {
        matches!(
            self,
            MetricName::AveragePrecision | MetricName::Map | MetricName::Cf1 | MetricName::Of1
        )
    }

    /// True when `a` is strictly better than `b` for this metric.
    pub fn is_better(&self, a: f64, b: f64) -> bool {
        if self.higher_is_better() {
            a > b
        } else {
            a < b
        }
    }
}

impl fmt::Display for MetricName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricName::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown metric `{s}`")))
    }
}

fn check_inputs(scores: &Matrix, truths: &[LabelSet], need_labels: bool) -> Result<()> {
    if scores.rows() != truths.len() {
        return Err(Error::shape(format!(
            "{} score rows but {} truth sets",
            scores.rows(),
            truths.len()
        )));
    }
    for (i, y) in truths.iter().enumerate() {
        if need_labels && y.is_empty() {
            return Err(Error::invalid(format!(
                "instance {i} has an empty truth set"
            )));
        }
        if y.max().is_some_and(|m| m >= scores.cols()) {
            return Err(Error::invalid(format!(
                "instance {i} has a label outside 0..{}",
                scores.cols()
            )));
        }
    }
    Ok(())
}

fn mean(sum: f64, count: usize) -> f64 {
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

#[inline]
fn rank_of(scores: &[f64], label: usize) -> usize {
    let s = scores[label];
    scores.iter().filter(|&&v| v >= s).count()
}

/// Precision at each positive, averaged: used both per instance (over labels)
/// and per class (over instances).
fn precision_at_positives(scores: &[f64], positive: &[bool]) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (k, &is_pos) in positive.iter().enumerate() {
        if !is_pos {
            continue;
        }
        let s = scores[k];
        let mut above = 0usize;
        let mut above_pos = 0usize;
        for (&v, &p) in scores.iter().zip(positive) {
            if v >= s {
                above += 1;
                above_pos += usize::from(p);
            }
        }
        sum += above_pos as f64 / above as f64;
        count += 1;
    }
    sum / count as f64
}

pub fn average_precision(scores: &Matrix, truths: &[LabelSet]) -> Result<f64> {
    check_inputs(scores, truths, true)?;
    let c = scores.cols();
    let total: f64 = truths
        .iter()
        .enumerate()
        .map(|(i, y)| precision_at_positives(scores.row(i), &y.mask(c)))
        .sum();
    Ok(mean(total, truths.len()))
}

/// `(max_{y∈Y} rank(y) − 1) / C`, averaged over instances.
pub fn coverage(scores: &Matrix, truths: &[LabelSet]) -> Result<f64> {
    check_inputs(scores, truths, true)?;
    let c = scores.cols();
    let total: f64 = truths
        .iter()
        .enumerate()
        .map(|(i, y)| {
            let deepest = y
                .iter()
                .map(|l| rank_of(scores.row(i), l))
                .max()
                .unwrap_or(1);
            (deepest - 1) as f64 / c as f64
        })
        .sum();
    Ok(mean(total, truths.len()))
}

pub fn hamming_loss(probs: &Matrix, truths: &[LabelSet], threshold: f64) -> Result<f64> {
    check_inputs(probs, truths, false)?;
    let c = probs.cols();
    let total: f64 = truths
        .iter()
        .enumerate()
        .map(|(i, y)| {
            let mask = y.mask(c);
            let wrong = probs
                .row(i)
                .iter()
                .zip(&mask)
                .filter(|&(&p, &t)| (p > threshold) != t)
                .count();
            wrong as f64 / c as f64
        })
        .sum();
    Ok(mean(total, truths.len()))
}

/// Mean fraction of misordered (true, false) pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankingLoss {
    pub value: f64,
    /// Instances whose truth set is empty or covers every label.
    pub skipped: usize,
}

pub fn ranking_loss(scores: &Matrix, truths: &[LabelSet]) -> Result<RankingLoss> {
    check_inputs(scores, truths, false)?;
    let c = scores.cols();
    let mut total = 0.0;
    let mut used = 0usize;
    for (i, y) in truths.iter().enumerate() {
        let mask = y.mask(c);
        let row = scores.row(i);
        let negatives = c - y.len();
        if y.is_empty() || negatives == 0 {
            continue;
        }
        let mut violations = 0.0;
        for t in y.iter() {
            for f in (0..c).filter(|&f| !mask[f]) {
                if row[t] < row[f] {
                    violations += 1.0;
                } else if row[t] == row[f] {
                    violations += 0.5;
                }
            }
        }
        total += violations / (y.len() * negatives) as f64;
        used += 1;
    }
    Ok(RankingLoss {
        value: mean(total, used),
        skipped: truths.len() - used,
    })
}

/// Fraction of instances whose top label (lowest index on ties) is not true.
pub fn one_error(scores: &Matrix, truths: &[LabelSet]) -> Result<f64> {
    check_inputs(scores, truths, true)?;
    let misses = truths
        .iter()
        .enumerate()
        .filter(|(i, y)| {
            let row = scores.row(*i);
            let top = (1..row.len()).fold(0, |best, k| if row[k] > row[best] { k } else { best });
            !y.contains(top)
        })
        .count();
    Ok(mean(misses as f64, truths.len()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisionMetrics {
    pub map: f64,
    pub cf1: f64,
    pub of1: f64,
    /// Classes without any positive instance, left out of the mAP mean.
    pub skipped_classes: usize,
}

fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        (2 * tp) as f64 / denom as f64
    }
}

/// Class-wise mAP, class-averaged F1 and micro-averaged F1.
pub fn map_cf1_of1(probs: &Matrix, truths: &[LabelSet], threshold: f64) -> Result<VisionMetrics> {
    check_inputs(probs, truths, false)?;
    let (n, c) = probs.shape();
    let masks: Vec<Vec<bool>> = truths.iter().map(|y| y.mask(c)).collect();
    let mut ap_sum = 0.0;
    let mut ap_classes = 0usize;
    let mut f1_sum = 0.0;
    let (mut tp_all, mut fp_all, mut fn_all) = (0usize, 0usize, 0usize);
    let mut column = vec![0.0; n];
    let mut positive = vec![false; n];
    for k in 0..c {
        let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
        for i in 0..n {
            column[i] = probs.get(i, k);
            positive[i] = masks[i][k];
            match (column[i] > threshold, positive[i]) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
        if positive.contains(&true) {
            ap_sum += precision_at_positives(&column, &positive);
            ap_classes += 1;
        }
        f1_sum += f1(tp, fp, fn_);
        tp_all += tp;
        fp_all += fp;
        fn_all += fn_;
    }
    Ok(VisionMetrics {
        map: mean(ap_sum, ap_classes),
        cf1: mean(f1_sum, c),
        of1: f1(tp_all, fp_all, fn_all),
        skipped_classes: c - ap_classes,
    })
}

/// All metrics for one evaluation, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub average_precision: f64,
    pub coverage: f64,
    pub hamming_loss: f64,
    pub ranking_loss: f64,
    pub one_error: f64,
    pub map: f64,
    pub cf1: f64,
    pub of1: f64,
    pub n_instances: usize,
}

impl MetricReport {
    /// Evaluates probabilities against clean truth with the 0.5 threshold.
    pub fn evaluate(probs: &Matrix, truths: &[LabelSet]) -> Result<Self> {
        let vision = map_cf1_of1(probs, truths, DEFAULT_THRESHOLD)?;
        Ok(MetricReport {
            average_precision: average_precision(probs, truths)?,
            coverage: coverage(probs, truths)?,
            hamming_loss: hamming_loss(probs, truths, DEFAULT_THRESHOLD)?,
            ranking_loss: ranking_loss(probs, truths)?.value,
            one_error: one_error(probs, truths)?,
            map: vision.map,
            cf1: vision.cf1,
            of1: vision.of1,
            n_instances: truths.len(),
        })
    }

    pub fn get(&self, metric: MetricName) -> f64 {
        match metric {
            MetricName::AveragePrecision => self.average_precision,
            MetricName::Coverage => self.coverage,
            MetricName::HammingLoss => self.hamming_loss,
            MetricName::RankingLoss => self.ranking_loss,
            MetricName::OneError => self.one_error,
            MetricName::Map => self.map,
            MetricName::Cf1 => self.cf1,
            MetricName::Of1 => self.of1,
        }
    }

    pub fn set(&mut self, metric: MetricName, value: f64) {
        let slot = match metric {
            MetricName::AveragePrecision => &mut self.average_precision,
            MetricName::Coverage => &mut self.coverage,
            MetricName::HammingLoss => &mut self.hamming_loss,
            MetricName::RankingLoss => &mut self.ranking_loss,
            MetricName::OneError => &mut self.one_error,
            MetricName::Map => &mut self.map,
            MetricName::Cf1 => &mut self.cf1,
            MetricName::Of1 => &mut self.of1,
        };
        *slot = value;
    }

    /// `name=value` lines with six decimals, ending with `n_instances`.
    pub fn to_record(&self) -> String {
        let mut out = String::new();
        for m in MetricName::ALL {
            out.push_str(&format!("{}={:.6}\n", m, self.get(m)));
        }
        out.push_str(&format!("n_instances={}\n", self.n_instances));
        out
    }

    pub fn from_record(text: &str) -> Result<Self> {
        let mut report = MetricReport {
            average_precision: f64::NAN,
            coverage: f64::NAN,
            hamming_loss: f64::NAN,
            ranking_loss: f64::NAN,
            one_error: f64::NAN,
            map: f64::NAN,
            cf1: f64::NAN,
            of1: f64::NAN,
            n_instances: 0,
        };
        let mut seen_n = false;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::data(format!("bad metric line `{line}`")))?;
            if key == "n_instances" {
                report.n_instances = value
                    .parse()
                    .map_err(|_| Error::data(format!("bad instance count `{value}`")))?;
                seen_n = true;
            } else {
                let v: f64 = value
                    .parse()
                    .map_err(|_| Error::data(format!("bad metric value `{value}`")))?;
                report.set(key.parse()?, v);
            }
        }
        if !seen_n || MetricName::ALL.iter().any(|&m| report.get(m).is_nan()) {
            return Err(Error::data("metric record is incomplete"));
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    fn ys(sets: &[&[usize]]) -> Vec<LabelSet> {
        sets.iter().map(|s| LabelSet::new(s.to_vec())).collect()
    }

    #[test]
    fn average_precision_examples() {
        let s = scores(&[&[0.9, 0.8, 0.1]]);
        let ap = average_precision(&s, &ys(&[&[0, 2]])).unwrap();
        assert!((ap - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
        assert!((ap - 0.8333).abs() < 5e-5);
        assert_eq!(average_precision(&s, &ys(&[&[0, 1]])).unwrap(), 1.0);
        assert_eq!(
            average_precision(&scores(&[&[0.3]]), &ys(&[&[0]])).unwrap(),
            1.0
        );
    }

    #[test]
    fn coverage_examples() {
        let s = scores(&[&[0.9, 0.8, 0.1]]);
        assert!((coverage(&s, &ys(&[&[0, 2]])).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(coverage(&s, &ys(&[&[0]])).unwrap(), 0.0);
        let worst = scores(&[&[0.9, 0.8, 0.7, 0.1]]);
        assert_eq!(coverage(&worst, &ys(&[&[3]])).unwrap(), 0.75);
    }

    #[test]
    fn hamming_examples() {
        assert_eq!(
            hamming_loss(&scores(&[&[0.6, 0.4]]), &ys(&[&[0]]), 0.5).unwrap(),
            0.0
        );
        assert_eq!(
            hamming_loss(&scores(&[&[0.6, 0.7]]), &ys(&[&[0]]), 0.5).unwrap(),
            0.5
        );
        let half = scores(&[&[0.5, 0.5, 0.5, 0.5]]);
        assert_eq!(hamming_loss(&half, &ys(&[&[1, 2]]), 0.5).unwrap(), 0.5);
    }

    #[test]
    fn ranking_loss_examples() {
        let s = scores(&[&[0.9, 0.8, 0.1]]);
        assert_eq!(ranking_loss(&s, &ys(&[&[0, 2]])).unwrap().value, 0.5);
        assert_eq!(ranking_loss(&s, &ys(&[&[0, 1]])).unwrap().value, 0.0);
        assert_eq!(
            ranking_loss(&scores(&[&[0.3, 0.3]]), &ys(&[&[1]]))
                .unwrap()
                .value,
            0.5
        );
        let full = ranking_loss(&s, &ys(&[&[0, 1, 2]])).unwrap();
        assert_eq!((full.value, full.skipped), (0.0, 1));
    }

    #[test]
    fn one_error_examples() {
        let s = scores(&[&[0.9, 0.1, 0.2], &[0.1, 0.9, 0.2]]);
        let y = ys(&[&[0], &[0]]);
        assert_eq!(
            one_error(&scores(&[&[0.9, 0.1, 0.2]]), &y[..1]).unwrap(),
            0.0
        );
        assert_eq!(
            one_error(&scores(&[&[0.1, 0.9, 0.2]]), &y[..1]).unwrap(),
            1.0
        );
        assert_eq!(one_error(&s, &y).unwrap(), 0.5);
        // ties pick the lowest index
        assert_eq!(
            one_error(&scores(&[&[0.5, 0.5]]), &ys(&[&[0]])).unwrap(),
            0.0
        );
    }

    #[test]
    fn vision_metric_examples() {
        let probs = scores(&[&[0.9, 0.1], &[0.2, 0.8]]);
        let v = map_cf1_of1(&probs, &ys(&[&[0], &[1]]), 0.5).unwrap();
        assert_eq!((v.map, v.cf1, v.of1), (1.0, 1.0, 1.0));

        let col = scores(&[&[0.9], &[0.8], &[0.3]]);
        let v = map_cf1_of1(&col, &ys(&[&[0], &[], &[0]]), 0.5).unwrap();
        assert!((v.map - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);

        let none = scores(&[&[0.1, 0.2], &[0.3, 0.4]]);
        let v = map_cf1_of1(&none, &ys(&[&[0], &[1]]), 0.5).unwrap();
        assert_eq!((v.cf1, v.of1), (0.0, 0.0));

        let v = map_cf1_of1(&none, &ys(&[&[0], &[0]]), 0.5).unwrap();
        assert_eq!(v.skipped_classes, 1);
    }

    #[test]
    fn empty_truth_rejected_for_ranking_metrics() {
        let s = scores(&[&[0.1, 0.2]]);
        assert!(average_precision(&s, &ys(&[&[]])).is_err());
        assert!(coverage(&s, &ys(&[&[]])).is_err());
        assert!(one_error(&s, &ys(&[&[]])).is_err());
        assert!(average_precision(&s, &ys(&[&[0], &[1]])).is_err());
    }

    #[test]
    fn record_round_trip() {
        let probs = scores(&[&[0.9, 0.1, 0.6], &[0.2, 0.8, 0.7]]);
        let r = MetricReport::evaluate(&probs, &ys(&[&[0, 2], &[1]])).unwrap();
        let text = r.to_record();
        assert!(text.starts_with("average_precision="));
        assert_eq!(text.lines().count(), 9);
        let back = MetricReport::from_record(&text).unwrap();
        for m in MetricName::ALL {
            assert!((back.get(m) - r.get(m)).abs() <= 5e-7);
        }
        assert_eq!(back.n_instances, 2);
        assert!(MetricReport::from_record("coverage=0.1\n").is_err());
    }

    #[test]
    fn metric_names_parse() {
        for m in MetricName::ALL {
            assert_eq!(m.as_str().parse::<MetricName>().unwrap(), m);
        }
        assert!("accuracy".parse::<MetricName>().is_err());
        assert!(MetricName::OneError.is_better(0.1, 0.2));
        assert!(MetricName::Map.is_better(0.2, 0.1));
    }
}
