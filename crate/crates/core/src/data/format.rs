use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{CandidateOverlay, Dataset, LabelSet, OverlaySource};
use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// Side information from [`load_dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LoadReport {
    /// Instances dropped because their label field was empty.
    pub dropped: usize,
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<(Dataset, LoadReport)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(BufReader::new(file), path)
}

/// Parses the dataset format from any reader; `origin` only labels errors.
pub fn read_dataset<R: BufRead>(reader: R, origin: &Path) -> Result<(Dataset, LoadReport)> {
    let mut lines = numbered_lines(reader, origin);
    let (header_no, header) = match lines.next() {
        Some(r) => r?,
        None => return Err(Error::parse(origin, 1, "missing `#ml` header")),
    };
    let fields = header_fields(&header, "#ml", &["C", "d"])
        .ok_or_else(|| Error::parse(origin, header_no, "header must be `#ml C=<int> d=<int>`"))?;
    let parse_count = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::parse(origin, header_no, format!("bad header count `{s}`")))
    };
    let num_classes = parse_count(fields[0])?;
    let dim = parse_count(fields[1])?;

    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut report = LoadReport::default();
    for item in lines {
        let (line_no, line) = item?;
        let err = |msg: String| Error::parse(origin, line_no, msg);
        let mut tokens = line.split_whitespace().peekable();
        let label_field = match tokens.peek() {
            Some(t) if !t.contains(':') => tokens.next(),
            _ => None,
        };
        let mut y = Vec::new();
        if let Some(field) = label_field {
            for tok in field.split(',') {
                let l: usize = tok
                    .parse()
                    .map_err(|_| err(format!("bad label index `{tok}`")))?;
                if l >= num_classes {
                    return Err(err(format!("label {l} out of range for C={num_classes}")));
                }
                y.push(l);
            }
        }

        let mut row = vec![0.0; dim];
        let mut last: Option<usize> = None;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| err(format!("expected `<idx>:<val>`, got `{tok}`")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| err(format!("bad feature index `{idx}`")))?;
            if idx >= dim {
                return Err(err(format!("feature index {idx} out of range for d={dim}")));
            }
            if last.is_some_and(|p| idx <= p) {
                return Err(err(format!(
                    "feature indices not strictly ascending at {idx}"
                )));
            }
            let v: f64 = val
                .parse()
                .map_err(|_| err(format!("bad feature value `{val}`")))?;
            if !v.is_finite() {
                return Err(err(format!("non-finite feature value `{val}`")));
            }
            row[idx] = v;
            last = Some(idx);
        }

        if y.is_empty() {
            report.dropped += 1;
            continue;
        }
        data.extend_from_slice(&row);
        labels.push(LabelSet::new(y));
    }

    let features = Matrix::from_vec(labels.len(), dim, data)?;
    Ok((Dataset::new(features, labels, num_classes)?, report))
}

pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_to_file(path, |w| write_dataset(dataset, w))
}

pub fn write_dataset<W: Write>(dataset: &Dataset, w: &mut W) -> std::io::Result<()> {
    writeln!(w, "#ml C={} d={}", dataset.num_classes(), dataset.dim())?;
    for (i, y) in dataset.true_labels().iter().enumerate() {
        write!(w, "{y}")?;
        for (j, &v) in dataset.features().row(i).iter().enumerate() {
            if v != 0.0 {
                write!(w, " {j}:{v}")?;
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn save_overlay(overlay: &CandidateOverlay, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_to_file(path, |w| write_overlay(overlay, w))
}

pub fn write_overlay<W: Write>(overlay: &CandidateOverlay, w: &mut W) -> std::io::Result<()> {
    writeln!(
        w,
        "#cand source={} q={} seed={}",
        overlay.source.name(),
        overlay.source.q(),
        overlay.seed
    )?;
    for s in &overlay.candidates {
        writeln!(w, "{s}")?;
    }
    Ok(())
}

/// Loads an overlay and validates it against the dataset it annotates.
pub fn load_overlay(path: impl AsRef<Path>, dataset: &Dataset) -> Result<CandidateOverlay> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_overlay(BufReader::new(file), path, dataset)
}

pub fn read_overlay<R: BufRead>(
    reader: R,
    origin: &Path,
    dataset: &Dataset,
) -> Result<CandidateOverlay> {
    let mut lines = numbered_lines(reader, origin);
    let (header_no, header) = match lines.next() {
        Some(r) => r?,
        None => return Err(Error::parse(origin, 1, "missing `#cand` header")),
    };
    let bad_header = || {
        Error::parse(
            origin,
            header_no,
            "header must be `#cand source=<flip|scorer|clean> q=<float> seed=<int>`",
        )
    };
    let fields =
        header_fields(&header, "#cand", &["source", "q", "seed"]).ok_or_else(bad_header)?;
    let q: f64 = fields[1].parse().map_err(|_| bad_header())?;
    let seed: u64 = fields[2].parse().map_err(|_| bad_header())?;
    let source = match fields[0] {
        "clean" => OverlaySource::Clean,
        "flip" => OverlaySource::Flip { q },
        "scorer" => OverlaySource::Scorer { q },
        _ => return Err(bad_header()),
    };

    let mut candidates = Vec::with_capacity(dataset.len());
    for item in lines {
        let (line_no, line) = item?;
        let row = candidates.len();
        let s = line
            .trim()
            .split(',')
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| {
                Error::parse(
                    origin,
                    line_no,
                    format!("bad candidate list `{}`", line.trim()),
                )
            })?;
        let s = LabelSet::new(s);
        if let Some(y) = dataset.true_labels().get(row) {
            if !y.is_subset(&s) {
                return Err(Error::parse(
                    origin,
                    line_no,
                    format!("candidates {{{s}}} do not contain true labels {{{y}}}"),
                ));
            }
        }
        candidates.push(s);
    }
    let overlay = CandidateOverlay {
        candidates,
        source,
        seed,
    };
    overlay.validate(dataset)?;
    Ok(overlay)
}

/// Non-blank lines with 1-based line numbers.
fn numbered_lines<'a, R: BufRead + 'a>(
    reader: R,
    origin: &'a Path,
) -> impl Iterator<Item = Result<(usize, String)>> + 'a {
    reader
        .lines()
        .enumerate()
        .filter_map(move |(i, line)| match line {
            Ok(l) if l.trim().is_empty() => None,
            Ok(l) => Some(Ok((i + 1, l))),
            Err(e) => Some(Err(Error::io(origin, e))),
        })
}

/// Splits `<tag> k1=v1 k2=v2 ...` with keys in exactly the given order.
fn header_fields<'a>(line: &'a str, tag: &str, keys: &[&str]) -> Option<Vec<&'a str>> {
    let mut tokens = line.split_whitespace();
    if tokens.next()? != tag {
        return None;
    }
    let mut out = Vec::with_capacity(keys.len());
    for key in keys {
        let (k, v) = tokens.next()?.split_once('=')?;
        if k != *key {
            return None;
        }
        out.push(v);
    }
    tokens.next().is_none().then_some(out)
}

pub(crate) fn write_to_file(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}
