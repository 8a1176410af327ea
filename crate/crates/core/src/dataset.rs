//! Labeled data: loading, cleaning, shuffling and k-fold assignment.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{Result, WlossError};
use crate::rng::seeded_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Classification,
    Regression,
}

/// One labeled example. For classification `y` is exactly `-1.0` or `+1.0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    dim: usize,
    task: Task,
    removed_duplicates: usize,
    removed_inconsistent: usize,
}

impl Dataset {
    /// Builds a dataset, checking that every sample has `dim` features and
    /// that classification labels are `±1`.
    pub fn new(samples: Vec<Sample>, dim: usize, task: Task) -> Result<Self> {
        for s in &samples {
            if s.features.len() != dim {
                return Err(WlossError::DimensionMismatch {
                    expected: dim,
                    found: s.features.len(),
                });
            }
            if task == Task::Classification && s.y != 1.0 && s.y != -1.0 {
                return Err(WlossError::InvalidParameter(format!(
                    "classification label {} is not -1 or +1",
                    s.y
                )));
            }
        }
        Ok(Dataset {
            samples,
            dim,
            task,
            removed_duplicates: 0,
            removed_inconsistent: 0,
        })
    }

    /// Convenience constructor from parallel feature/label vectors.
    pub fn from_xy(x: Vec<Vec<f64>>, y: Vec<f64>, task: Task) -> Result<Self> {
        if x.len() != y.len() {
            return Err(WlossError::LengthMismatch {
                what: "labels",
                expected: x.len(),
                found: y.len(),
            });
        }
        let dim = x.first().map_or(0, Vec::len);
        let samples = x
            .into_iter()
            .zip(y)
            .map(|(features, y)| Sample { features, y })
            .collect();
        Dataset::new(samples, dim, task)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn removed_duplicates(&self) -> usize {
        self.removed_duplicates
    }

    pub fn removed_inconsistent(&self) -> usize {
        self.removed_inconsistent
    }

    pub fn features(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(|s| s.features.clone()).collect()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.y).collect()
    }

    /// Samples at `indices`, in that order. Cleaning counters are carried over.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        self.with_samples(indices.iter().map(|&i| self.samples[i].clone()).collect())
    }

    pub fn has_both_classes(&self) -> bool {
        has_both_classes(self.samples.iter().map(|s| s.y))
    }

    fn with_samples(&self, samples: Vec<Sample>) -> Dataset {
        Dataset {
            samples,
            dim: self.dim,
            task: self.task,
            removed_duplicates: self.removed_duplicates,
            removed_inconsistent: self.removed_inconsistent,
        }
    }

    /// Writes the dataset as headerless CSV with the label in the last column.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for s in &self.samples {
            for v in &s.features {
                out.push_str(&format!("{v},"));
            }
            out.push_str(&format!("{}\n", s.y));
        }
        let mut f = File::create(path).map_err(|e| WlossError::io(path, e))?;
        f.write_all(out.as_bytes())
            .map_err(|e| WlossError::io(path, e))
    }
}

pub(crate) fn has_both_classes(labels: impl IntoIterator<Item = f64>) -> bool {
    let (mut pos, mut neg) = (false, false);
    for y in labels {
        if y > 0.0 {
            pos = true;
        } else {
            neg = true;
        }
        if pos && neg {
            return true;
        }
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    LibSvm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelColumn {
    Last,
    /// Zero-based column index.
    Index(usize),
}

/// How raw label strings become `±1`.
#[derive(Debug, Clone, PartialEq)]
pub enum LabelMap {
    /// Two distinct labels; the smaller one maps to `-1`. Labels are compared
    /// numerically when they all parse as numbers, lexicographically otherwise.
    Auto,
    Explicit(Vec<(String, f64)>),
}

impl LabelMap {
    /// Parses `g=1,b=-1`.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, value) = part.split_once('=').ok_or_else(|| {
                WlossError::InvalidParameter(format!("label map entry {part:?} is not name=value"))
            })?;
            let value: f64 = value.trim().parse().map_err(|_| {
                WlossError::InvalidParameter(format!("label map value {value:?} is not a number"))
            })?;
            if value != 1.0 && value != -1.0 {
                return Err(WlossError::InvalidParameter(format!(
                    "label map value {value} must be 1 or -1"
                )));
            }
            pairs.push((name.trim().to_string(), value));
        }
        if pairs.is_empty() {
            return Err(WlossError::InvalidParameter("empty label map".into()));
        }
        Ok(LabelMap::Explicit(pairs))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadOptions {
    pub format: Format,
    pub task: Task,
    pub has_header: bool,
    pub delimiter: u8,
    pub label_column: LabelColumn,
    pub label_map: LabelMap,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            format: Format::Csv,
            task: Task::Classification,
            has_header: false,
            delimiter: b',',
            label_column: LabelColumn::Last,
            label_map: LabelMap::Auto,
        }
    }
}

pub fn load(path: &Path, opts: &LoadOptions) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| WlossError::io(path, e))?;
    parse(BufReader::new(file), opts)
}

pub fn parse_str(text: &str, opts: &LoadOptions) -> Result<Dataset> {
    parse(text.as_bytes(), opts)
}

pub fn parse<R: Read>(reader: R, opts: &LoadOptions) -> Result<Dataset> {
    let rows = match opts.format {
        Format::Csv => read_csv(reader, opts)?,
        Format::LibSvm => read_libsvm(BufReader::new(reader))?,
    };
    if rows.is_empty() {
        return Err(WlossError::NoSamples);
    }
    let dim = rows[0].features.len();
    let targets = map_targets(&rows, opts)?;
    let samples = rows
        .into_iter()
        .zip(targets)
        .map(|(r, y)| Sample {
            features: r.features,
            y,
        })
        .collect();
    Dataset::new(samples, dim, opts.task)
}

struct RawRow {
    line: usize,
    features: Vec<f64>,
    label: String,
}

fn parse_real(field: &str, line: usize) -> Result<f64> {
    match field.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(WlossError::Parse {
            line,
            message: format!("{field:?} is not a finite number"),
        }),
    }
}

fn read_csv<R: Read>(reader: R, opts: &LoadOptions) -> Result<Vec<RawRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(opts.has_header)
        .delimiter(opts.delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = Vec::new();
    let mut width = None;
    for record in rdr.records() {
        let record = record.map_err(|e| WlossError::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(WlossError::RaggedRow {
                line,
                expected,
                found: record.len(),
            });
        }
        if expected < 2 {
            return Err(WlossError::Parse {
                line,
                message: "need at least one feature and a label".into(),
            });
        }
        let label_idx = match opts.label_column {
            LabelColumn::Last => expected - 1,
            LabelColumn::Index(i) if i < expected => i,
            LabelColumn::Index(i) => {
                return Err(WlossError::Parse {
                    line,
                    message: format!("label column {i} out of range for {expected} fields"),
                })
            }
        };
        let mut features = Vec::with_capacity(expected - 1);
        for (c, field) in record.iter().enumerate() {
            if c != label_idx {
                features.push(parse_real(field, line)?);
            }
        }
        rows.push(RawRow {
            line,
            features,
            label: record[label_idx].to_string(),
        });
    }
    Ok(rows)
}

fn read_libsvm<R: BufRead>(reader: R) -> Result<Vec<RawRow>> {
    let mut rows = Vec::new();
    let mut sparse: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut dim = 0;
    for (n, text) in reader.lines().enumerate() {
        let line = n + 1;
        let text = text.map_err(|e| WlossError::Parse {
            line,
            message: e.to_string(),
        })?;
        let text = text.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let mut tokens = text.split_whitespace();
        let label = tokens.next().unwrap_or_default().to_string();
        let mut entries = Vec::new();
        for tok in tokens {
            let (idx, val) = tok.split_once(':').ok_or_else(|| WlossError::Parse {
                line,
                message: format!("{tok:?} is not index:value"),
            })?;
            let idx: usize = match idx.parse() {
                Ok(i) if i >= 1 => i,
                _ => {
                    return Err(WlossError::Parse {
                        line,
                        message: format!("feature index {idx:?} must be a positive integer"),
                    })
                }
            };
            dim = dim.max(idx);
            entries.push((idx - 1, parse_real(val, line)?));
        }
        sparse.push(entries);
        rows.push(RawRow {
            line,
            features: Vec::new(),
            label,
        });
    }
    for (row, entries) in rows.iter_mut().zip(sparse) {
        row.features = vec![0.0; dim];
        for (i, v) in entries {
            row.features[i] = v;
        }
    }
    Ok(rows)
}

fn map_targets(rows: &[RawRow], opts: &LoadOptions) -> Result<Vec<f64>> {
    match opts.task {
        Task::Regression => rows
            .iter()
            .map(|r| {
                parse_real(&r.label, r.line).map_err(|_| WlossError::UnmappableLabel {
                    line: r.line,
                    label: r.label.clone(),
                })
            })
            .collect(),
        Task::Classification => {
            let table = match &opts.label_map {
                LabelMap::Explicit(pairs) => pairs.clone(),
                LabelMap::Auto => auto_label_map(rows)?,
            };
            rows.iter()
                .map(|r| {
                    table
                        .iter()
                        .find(|(name, _)| *name == r.label)
                        .map(|&(_, v)| v)
                        .ok_or_else(|| WlossError::UnmappableLabel {
                            line: r.line,
                            label: r.label.clone(),
                        })
                })
                .collect()
        }
    }
}

fn auto_label_map(rows: &[RawRow]) -> Result<Vec<(String, f64)>> {
    let mut distinct: Vec<&str> = Vec::new();
    for r in rows {
        if !distinct.contains(&r.label.as_str()) {
            if distinct.len() == 2 {
                return Err(WlossError::UnmappableLabel {
                    line: r.line,
                    label: r.label.clone(),
                });
            }
            distinct.push(&r.label);
        }
    }
    let numeric: Option<Vec<f64>> = distinct.iter().map(|s| s.parse::<f64>().ok()).collect();
    let order = match &numeric {
        Some(v) if v.len() == 2 => v[0].total_cmp(&v[1]),
        _ => distinct[0].cmp(distinct[1 % distinct.len()]),
    };
    let mut table: Vec<(String, f64)> = match distinct.len() {
        1 => {
            let y = match &numeric {
                Some(v) if v[0] > 0.0 => 1.0,
                _ => -1.0,
            };
            vec![(distinct[0].to_string(), y)]
        }
        _ => {
            let (lo, hi) = if order.is_le() {
                (distinct[0], distinct[1])
            } else {
                (distinct[1], distinct[0])
            };
            vec![(lo.to_string(), -1.0), (hi.to_string(), 1.0)]
        }
    };
    table.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(table)
}

/// Bit pattern used for exact feature equality; `-0.0` and `0.0` compare equal.
fn feature_key(features: &[f64]) -> Vec<u64> {
    features
        .iter()
        .map(|&v| if v == 0.0 { 0 } else { v.to_bits() })
        .collect()
}

/// Collapses exact duplicates and drops groups whose identical feature
/// vectors carry conflicting labels. For regression only exact
/// feature+target duplicates are collapsed. Kept samples stay in the order of
/// their first occurrence; removal counts accumulate on the result.
pub fn clean(ds: &Dataset) -> Dataset {
    let mut groups: HashMap<Vec<u64>, Vec<usize>> = HashMap::new();
    let mut order = Vec::new();
    for (i, s) in ds.samples.iter().enumerate() {
        let mut key = feature_key(&s.features);
        if ds.task == Task::Regression {
            key.push(s.y.to_bits());
        }
        let entry = groups.entry(key).or_default();
        if entry.is_empty() {
            order.push(i);
        }
        entry.push(i);
    }

    let mut out = ds.with_samples(Vec::with_capacity(order.len()));
    for first in order {
        let key = {
            let mut k = feature_key(&ds.samples[first].features);
            if ds.task == Task::Regression {
                k.push(ds.samples[first].y.to_bits());
            }
            k
        };
        let members = &groups[&key];
        let y0 = ds.samples[first].y;
        if members.iter().all(|&m| ds.samples[m].y == y0) {
            out.removed_duplicates += members.len() - 1;
            out.samples.push(ds.samples[first].clone());
        } else {
            out.removed_inconsistent += members.len();
        }
    }
    out
}

/// Seeded permutation of the samples.
pub fn shuffle(ds: &Dataset, seed: u64) -> Dataset {
    let mut samples = ds.samples.clone();
    samples.shuffle(&mut seeded_rng(seed));
    ds.with_samples(samples)
}

/// Fold index for every sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    k: usize,
    assignment: Vec<usize>,
    seed: u64,
}

impl FoldAssignment {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] != fold)
            .collect()
    }
}

/// Balanced random k-fold assignment: a seeded permutation dealt round-robin.
pub fn kfold(ds: &Dataset, k: usize, seed: u64) -> Result<FoldAssignment> {
    kfold_len(ds.len(), k, seed)
}

pub fn kfold_len(l: usize, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(WlossError::InvalidParameter(format!(
            "need at least 2 folds, got {k}"
        )));
    }
    if k > l {
        return Err(WlossError::InvalidParameter(format!(
            "{k} folds requested for {l} samples"
        )));
    }
    let mut perm: Vec<usize> = (0..l).collect();
    perm.shuffle(&mut seeded_rng(seed));
    let mut assignment = vec![0; l];
    for (pos, &i) in perm.iter().enumerate() {
        assignment[i] = pos % k;
    }
    Ok(FoldAssignment {
        k,
        assignment,
        seed,
    })
}

/// Per-feature z-scoring. Constant features get unit scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit<S: AsRef<[f64]>>(rows: &[S]) -> Self {
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r.as_ref()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r.as_ref()).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, scale }
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn transform_all<S: AsRef<[f64]>>(&self, rows: &[S]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.transform(r.as_ref())).collect()
    }
}
