use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Better {
    Higher,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alpha {
    P05,
    P10,
}

impl Alpha {
    pub fn value(&self) -> f64 {
        match self {
            Alpha::P05 => 0.05,
            Alpha::P10 => 0.10,
        }
    }

    pub fn from_value(v: f64) -> Option<Self> {
        if v == 0.05 {
            Some(Alpha::P05)
        } else if v == 0.10 {
            Some(Alpha::P10)
        } else {
            None
        }
    }
}

// Two-tailed Nemenyi critical values q_α = studentized range / √2 for
// k = 2..=10 methods (Demšar, JMLR 7 (2006), Table 5a).
const Q_05: [f64; 9] = [
    1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164,
];
const Q_10: [f64; 9] = [
    1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920,
];

pub fn nemenyi_q(k: usize, alpha: Alpha) -> Result<f64> {
    if !(2..=10).contains(&k) {
        return Err(Error::invalid(format!(
            "Nemenyi table covers 2..=10 methods, got {k}"
        )));
    }
    Ok(match alpha {
        Alpha::P05 => Q_05[k - 2],
        Alpha::P10 => Q_10[k - 2],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankStats {
    pub methods: Vec<String>,
    /// Average rank per method, 1 = best.
    pub mean_ranks: Vec<f64>,
    pub friedman_chi2: f64,
    pub nemenyi_cd: f64,
    pub alpha: f64,
    pub k_methods: usize,
    pub n_datasets: usize,
}

/// Ranks of one row (1 = best), averaging tied positions.
fn rank_row(row: &[f64], better: Better) -> Vec<f64> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| match better {
        Better::Higher => row[b].total_cmp(&row[a]),
        Better::Lower => row[a].total_cmp(&row[b]),
    });
    let mut ranks = vec![0.0; row.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && row[order[end]] == row[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end share their average
        let shared = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = shared;
        }
        start = end;
    }
    ranks
}

/// Friedman statistic and Nemenyi critical difference for an
/// `n_datasets × k_methods` score matrix. Methods are named `m0, m1, …`;
/// override `methods` on the result to label them.
pub fn friedman_nemenyi(scores: &[Vec<f64>], better: Better, alpha: Alpha) -> Result<RankStats> {
    let n = scores.len();
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 datasets, got {n}")));
    }
    let k = scores[0].len();
    if k < 2 {
        return Err(Error::invalid(format!("need at least 2 methods, got {k}")));
    }
    if scores.iter().any(|r| r.len() != k) {
        return Err(Error::shape("score rows have different lengths"));
    }
    if scores.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("score matrix".into()));
    }
    let q = nemenyi_q(k, alpha)?;

    let mut sums = vec![0.0; k];
    for row in scores {
        for (s, r) in sums.iter_mut().zip(rank_row(row, better)) {
            *s += r;
        }
    }
    let mean_ranks: Vec<f64> = sums.iter().map(|s| s / n as f64).collect();
    let (nf, kf) = (n as f64, k as f64);
    let sum_sq: f64 = mean_ranks.iter().map(|r| r * r).sum();
    let chi2 = 12.0 * nf / (kf * (kf + 1.0)) * (sum_sq - kf * (kf + 1.0).powi(2) / 4.0);
    let cd = q * (kf * (kf + 1.0) / (6.0 * nf)).sqrt();

    Ok(RankStats {
        methods: (0..k).map(|i| format!("m{i}")).collect(),
        mean_ranks,
        friedman_chi2: chi2,
        nemenyi_cd: cd,
        alpha: alpha.value(),
        k_methods: k,
        n_datasets: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn consistent_ranking_gives_chi2_six() {
        let rows = vec![vec![0.9, 0.8, 0.7]; 3];
        let s = friedman_nemenyi(&rows, Better::Higher, Alpha::P05).unwrap();
        assert_eq!(s.mean_ranks, vec![1.0, 2.0, 3.0]);
        assert!((s.friedman_chi2 - 6.0).abs() < 1e-12);
    }

    #[test]
    fn all_ties_give_zero() {
        let rows = vec![vec![0.5; 4]; 5];
        let s = friedman_nemenyi(&rows, Better::Higher, Alpha::P05).unwrap();
        assert!(s.mean_ranks.iter().all(|&r| r == 2.5));
        assert_eq!(s.friedman_chi2, 0.0);
    }

    #[test]
    fn critical_difference_k6_n25() {
        let rows = vec![vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]; 25];
        let s = friedman_nemenyi(&rows, Better::Lower, Alpha::P05).unwrap();
        assert!((s.nemenyi_cd - 1.508).abs() < 1e-3);
        assert!((s.nemenyi_cd - 2.850 * (42.0f64 / 150.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn lower_is_better_flips_ranks() {
        let rows = vec![vec![0.1, 0.2], vec![0.3, 0.4]];
        let s = friedman_nemenyi(&rows, Better::Lower, Alpha::P10).unwrap();
        assert_eq!(s.mean_ranks, vec![1.0, 2.0]);
        assert_eq!(s.nemenyi_cd, 1.645 * (6.0f64 / 12.0).sqrt());
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(friedman_nemenyi(&[vec![1.0, 2.0]], Better::Higher, Alpha::P05).is_err());
        assert!(
            friedman_nemenyi(&[vec![1.0; 11], vec![1.0; 11]], Better::Higher, Alpha::P05).is_err()
        );
        assert!(friedman_nemenyi(&[vec![1.0], vec![1.0]], Better::Higher, Alpha::P05).is_err());
        assert!(
            friedman_nemenyi(&[vec![1.0, 2.0], vec![1.0]], Better::Higher, Alpha::P05).is_err()
        );
    }

    proptest! {
        #[test]
        fn rank_sums_are_fixed(rows in prop::collection::vec(prop::collection::vec(0u8..4, 5), 2..8)) {
            let rows: Vec<Vec<f64>> = rows.into_iter().map(|r| r.into_iter().map(f64::from).collect()).collect();
            let s = friedman_nemenyi(&rows, Better::Higher, Alpha::P05).unwrap();
            prop_assert!((s.mean_ranks.iter().sum::<f64>() - 15.0).abs() < 1e-12);
            prop_assert!(s.friedman_chi2 >= -1e-12);
        }

        #[test]
        fn dominant_method_has_rank_one(rows in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 4), 2..8)) {
            let rows: Vec<Vec<f64>> = rows.into_iter().map(|mut r| { r[2] = 2.0; r }).collect();
            let s = friedman_nemenyi(&rows, Better::Higher, Alpha::P05).unwrap();
            prop_assert_eq!(s.mean_ranks[2], 1.0);
        }
    }
}
