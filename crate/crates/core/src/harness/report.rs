//! Line-oriented results file and CD plot-data file.
//!
//! Results (`results.txt`), one record per line, `kind key=value ...`:
//!
//! ```text
//! # propml-results v1
//! config_hash=<sha256 hex>
//! seed=<u64>
//! folds=<k>
//! criterion=<metric>
//! entry method=propml lambda=0.02 fold=0 average_precision=... n_instances=400
//! aggregate method=propml lambda=0.02 metric=average_precision mean=... std=...
//! summary method=propml lambda=0.35 metric=average_precision mean=... std=...
//! friedman k=2 n=5 alpha=0.05 chi2=... cd=...
//! rank method=propml mean_rank=...
//! ```
//!
//! `lambda=-` marks methods without λ. Floats use the shortest representation
//! that parses back to the same value. `std` is over folds (n − 1).
//! `friedman`/`rank` lines only appear when rank statistics are supplied.
//!
//! Plot data (`cd_plot.txt`) carries what a CD diagram needs:
//!
//! ```text
//! # cd-plot v1
//! alpha=0.05
//! k=6
//! n=25
//! chi2=...
//! cd=...
//! method name=propml mean_rank=...
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::cv::{Aggregate, ResultEntry, ResultsTable};
use super::stats::RankStats;
use crate::error::{Error, Result};
use crate::loss::LossKind;
use crate::metrics::{MetricName, MetricReport};

pub const RESULTS_FILE: &str = "results.txt";
pub const CD_PLOT_FILE: &str = "cd_plot.txt";

fn fmt_lambda(l: Option<f64>) -> String {
    l.map_or_else(|| "-".to_string(), |v| v.to_string())
}

pub fn render_report(table: &ResultsTable, stats: Option<&RankStats>) -> Result<String> {
    let mut out = String::new();
    let w = &mut out;
    // fmt::Write into a String cannot fail
    let _ = writeln!(w, "# propml-results v1");
    let _ = writeln!(w, "config_hash={}", table.config_hash);
    let _ = writeln!(w, "seed={}", table.seed);
    let _ = writeln!(w, "folds={}", table.folds);
    let _ = writeln!(w, "criterion={}", table.criterion);
    for e in &table.entries {
        let _ = write!(
            w,
            "entry method={} lambda={} fold={}",
            e.method.name(),
            fmt_lambda(e.lambda),
            e.fold
        );
        for m in MetricName::ALL {
            let _ = write!(w, " {}={}", m, e.report.get(m));
        }
        let _ = writeln!(w, " n_instances={}", e.report.n_instances);
    }
    for a in &table.aggregates {
        let _ = writeln!(
            w,
            "aggregate method={} lambda={} metric={} mean={} std={}",
            a.method.name(),
            fmt_lambda(a.lambda),
            a.metric,
            a.mean,
            a.std
        );
    }
    for s in table.summaries()? {
        for a in &s.aggregates {
            let _ = writeln!(
                w,
                "summary method={} lambda={} metric={} mean={} std={}",
                s.method.name(),
                fmt_lambda(s.lambda),
                a.metric,
                a.mean,
                a.std
            );
        }
    }
    if let Some(st) = stats {
        let _ = writeln!(
            w,
            "friedman k={} n={} alpha={} chi2={} cd={}",
            st.k_methods, st.n_datasets, st.alpha, st.friedman_chi2, st.nemenyi_cd
        );
        for (m, r) in st.methods.iter().zip(&st.mean_ranks) {
            let _ = writeln!(w, "rank method={m} mean_rank={r}");
        }
    }
    Ok(out)
}

pub fn render_cd_plot(stats: &RankStats) -> String {
    let mut out = String::from("# cd-plot v1\n");
    let _ = writeln!(out, "alpha={}", stats.alpha);
    let _ = writeln!(out, "k={}", stats.k_methods);
    let _ = writeln!(out, "n={}", stats.n_datasets);
    let _ = writeln!(out, "chi2={}", stats.friedman_chi2);
    let _ = writeln!(out, "cd={}", stats.nemenyi_cd);
    for (m, r) in stats.methods.iter().zip(&stats.mean_ranks) {
        let _ = writeln!(out, "method name={m} mean_rank={r}");
    }
    out
}

/// Writes `results.txt` into `dir`, plus `cd_plot.txt` when `stats` is given.
pub fn emit_report(table: &ResultsTable, stats: Option<&RankStats>, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let results = dir.join(RESULTS_FILE);
    std::fs::write(&results, render_report(table, stats)?).map_err(|e| Error::io(&results, e))?;
    if let Some(st) = stats {
        let plot = dir.join(CD_PLOT_FILE);
        std::fs::write(&plot, render_cd_plot(st)).map_err(|e| Error::io(&plot, e))?;
    }
    Ok(())
}

/// A `summary` line; method names are kept as text so files from other
/// tools can be ranked too.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryLine {
    pub method: String,
    pub lambda: Option<f64>,
    pub metric: MetricName,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedReport {
    pub table: ResultsTable,
    pub summaries: Vec<SummaryLine>,
    pub stats: Option<RankStats>,
}

impl ParsedReport {
    /// Method order as first seen in the summary lines.
    pub fn summary_methods(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for s in &self.summaries {
            if !out.contains(&s.method) {
                out.push(s.method.clone());
            }
        }
        out
    }

    pub fn summary_mean(&self, method: &str, metric: MetricName) -> Option<f64> {
        self.summaries
            .iter()
            .find(|s| s.method == method && s.metric == metric)
            .map(|s| s.mean)
    }
}

struct Fields<'a> {
    map: HashMap<&'a str, &'a str>,
    line: usize,
}

impl<'a> Fields<'a> {
    fn parse(rest: &'a str, line: usize) -> Result<Self> {
        let mut map = HashMap::new();
        for tok in rest.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| bad(line, format!("expected key=value, got `{tok}`")))?;
            map.insert(k, v);
        }
        Ok(Fields { map, line })
    }

    fn str(&self, key: &str) -> Result<&'a str> {
        self.map
            .get(key)
            .copied()
            .ok_or_else(|| bad(self.line, format!("missing `{key}`")))
    }

    fn num<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let v = self.str(key)?;
        v.parse()
            .map_err(|_| bad(self.line, format!("bad value `{v}` for `{key}`")))
    }

    fn lambda(&self) -> Result<Option<f64>> {
        match self.str("lambda")? {
            "-" => Ok(None),
            _ => self.num("lambda").map(Some),
        }
    }

    fn method(&self) -> Result<LossKind> {
        let m = self.str("method")?;
        LossKind::parse(m).ok_or_else(|| bad(self.line, format!("unknown method `{m}`")))
    }

    fn metric(&self) -> Result<MetricName> {
        self.str("metric")?.parse()
    }
}

fn bad(line: usize, msg: String) -> Error {
    Error::parse("<report>", line, msg)
}

pub fn parse_report(text: &str) -> Result<ParsedReport> {
    let mut config_hash = None;
    let mut seed = None;
    let mut folds = None;
    let mut criterion = MetricName::AveragePrecision;
    let mut entries = Vec::new();
    let mut aggregates = Vec::new();
    let mut summaries = Vec::new();
    let mut friedman: Option<(usize, usize, f64, f64, f64)> = None;
    let mut ranks: Vec<(String, f64)> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(v) = line.strip_prefix("config_hash=") {
            config_hash = Some(v.to_string());
            continue;
        }
        if let Some(v) = line.strip_prefix("seed=") {
            seed = Some(v.parse().map_err(|_| bad(no, format!("bad seed `{v}`")))?);
            continue;
        }
        if let Some(v) = line.strip_prefix("folds=") {
            folds = Some(v.parse().map_err(|_| bad(no, format!("bad folds `{v}`")))?);
            continue;
        }
        if let Some(v) = line.strip_prefix("criterion=") {
            criterion = v.parse()?;
            continue;
        }
        let (kind, rest) = line.split_once(' ').unwrap_or((line, ""));
        let f = Fields::parse(rest, no)?;
        match kind {
            "entry" => {
                let mut report = MetricReport {
                    average_precision: 0.0,
                    coverage: 0.0,
                    hamming_loss: 0.0,
                    ranking_loss: 0.0,
                    one_error: 0.0,
                    map: 0.0,
                    cf1: 0.0,
                    of1: 0.0,
                    n_instances: f.num("n_instances")?,
                };
                for m in MetricName::ALL {
                    report.set(m, f.num(m.as_str())?);
                }
                entries.push(ResultEntry {
                    method: f.method()?,
                    lambda: f.lambda()?,
                    fold: f.num("fold")?,
                    report,
                });
            }
            "aggregate" => aggregates.push(Aggregate {
                method: f.method()?,
                lambda: f.lambda()?,
                metric: f.metric()?,
                mean: f.num("mean")?,
                std: f.num("std")?,
            }),
            "summary" => summaries.push(SummaryLine {
                method: f.str("method")?.to_string(),
                lambda: f.lambda()?,
                metric: f.metric()?,
                mean: f.num("mean")?,
                std: f.num("std")?,
            }),
            "friedman" => {
                friedman = Some((
                    f.num("k")?,
                    f.num("n")?,
                    f.num("alpha")?,
                    f.num("chi2")?,
                    f.num("cd")?,
                ))
            }
            "rank" => ranks.push((f.str("method")?.to_string(), f.num("mean_rank")?)),
            other => return Err(bad(no, format!("unknown record `{other}`"))),
        }
    }

    let table = ResultsTable {
        config_hash: config_hash.ok_or_else(|| bad(0, "missing config_hash".into()))?,
        seed: seed.ok_or_else(|| bad(0, "missing seed".into()))?,
        folds: folds.ok_or_else(|| bad(0, "missing folds".into()))?,
        criterion,
        entries,
        aggregates,
    };
    let stats = friedman.map(|(k, n, alpha, chi2, cd)| RankStats {
        methods: ranks.iter().map(|r| r.0.clone()).collect(),
        mean_ranks: ranks.iter().map(|r| r.1).collect(),
        friedman_chi2: chi2,
        nemenyi_cd: cd,
        alpha,
        k_methods: k,
        n_datasets: n,
    });
    Ok(ParsedReport {
        table,
        summaries,
        stats,
    })
}
