//! Labeled univariate time series and the UCR TSV format.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// A finite-valued univariate series of length at least two.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TimeSeries(Vec<f64>);

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "time series must have length >= 2, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "time series value at index {i} is not finite"
            )));
        }
        Ok(TimeSeries(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Rebuild from values known to satisfy the invariants.
    pub(crate) fn from_trusted(values: Vec<f64>) -> Self {
        debug_assert!(values.len() >= 2 && values.iter().all(|v| v.is_finite()));
        TimeSeries(values)
    }
}

impl TryFrom<Vec<f64>> for TimeSeries {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        TimeSeries::new(values)
    }
}

impl From<TimeSeries> for Vec<f64> {
    fn from(ts: TimeSeries) -> Self {
        ts.0
    }
}

impl AsRef<[f64]> for TimeSeries {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Train,
    Test,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Train => f.write_str("train"),
            Role::Test => f.write_str("test"),
        }
    }
}

/// Equal-length series with dense class ids `0..C`.
///
/// `label_names[c]` holds the original label text of class `c`, so files can be
/// written back with the labels they were read with. Datasets are immutable;
/// operations that change them return a new value.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    name: String,
    role: Role,
    series: Vec<TimeSeries>,
    labels: Vec<usize>,
    label_names: Vec<String>,
}

impl LabeledDataset {
    pub fn new(
        name: impl Into<String>,
        role: Role,
        series: Vec<TimeSeries>,
        labels: Vec<usize>,
        label_names: Vec<String>,
    ) -> Result<Self> {
        let name = name.into();
        if series.is_empty() {
            return Err(Error::EmptyDataset(name));
        }
        if series.len() != labels.len() {
            return Err(Error::dimension(
                format!("dataset {name:?} label count"),
                series.len(),
                labels.len(),
            ));
        }
        let d = series[0].len();
        if let Some((i, s)) = series.iter().enumerate().find(|(_, s)| s.len() != d) {
            return Err(Error::dimension(
                format!("dataset {name:?} series {i} length"),
                d,
                s.len(),
            ));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= label_names.len()) {
            return Err(Error::InvalidInput(format!(
                "dataset {name:?} has class id {bad} but only {} label names",
                label_names.len()
            )));
        }
        if role == Role::Train {
            let present = class_counts(&labels, label_names.len())
                .iter()
                .filter(|&&c| c > 0)
                .count();
            if present < 2 {
                return Err(Error::InvalidInput(format!(
                    "training dataset {name:?} needs at least 2 classes, found {present}"
                )));
            }
        }
        Ok(LabeledDataset {
            name,
            role,
            series,
            labels,
            label_names,
        })
    }

    /// Dataset whose labels are already dense ids; names are the ids themselves.
    pub fn from_ids(name: impl Into<String>, role: Role, series: Vec<TimeSeries>, labels: Vec<usize>) -> Result<Self> {
        let c = labels.iter().copied().max().map_or(0, |m| m + 1).max(2);
        let names = (0..c).map(|i| i.to_string()).collect();
        Self::new(name, role, series, labels, names)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    /// Series length `d`.
    pub fn series_len(&self) -> usize {
        self.series[0].len()
    }

    pub fn num_classes(&self) -> usize {
        self.label_names.len()
    }

    pub fn series(&self) -> &[TimeSeries] {
        &self.series
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn class_counts(&self) -> Vec<usize> {
        class_counts(&self.labels, self.num_classes())
    }

    /// Same labels and metadata with replaced series.
    pub fn with_series(&self, series: Vec<TimeSeries>) -> Result<Self> {
        Self::new(
            self.name.clone(),
            self.role,
            series,
            self.labels.clone(),
            self.label_names.clone(),
        )
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// The listed instances, in the given order.
    pub fn subset(&self, indices: &[usize], role: Role) -> Result<Self> {
        Self::new(
            self.name.clone(),
            role,
            indices.iter().map(|&i| self.series[i].clone()).collect(),
            indices.iter().map(|&i| self.labels[i]).collect(),
            self.label_names.clone(),
        )
    }

    /// Per-series z-normalization. Constant series map to all zeros.
    pub fn z_normalized(&self) -> Self {
        let series = self
            .series
            .iter()
            .map(|s| {
                let v = s.values();
                let n = v.len() as f64;
                let mean = v.iter().sum::<f64>() / n;
                let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
                let sd = var.sqrt();
                let out = if sd > 0.0 {
                    v.iter().map(|x| (x - mean) / sd).collect()
                } else {
                    vec![0.0; v.len()]
                };
                TimeSeries::from_trusted(out)
            })
            .collect();
        LabeledDataset { series, ..self.clone() }
    }

    /// Fraction of instances carrying the most frequent label.
    pub fn majority_class_rate(&self) -> f64 {
        let max = self.class_counts().into_iter().max().unwrap_or(0);
        max as f64 / self.len() as f64
    }

    pub fn write_ucr_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_ucr_tsv_to(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_ucr_tsv_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        for (s, &l) in self.series.iter().zip(&self.labels) {
            write!(w, "{}", self.label_names[l])?;
            for v in s.values() {
                // `{}` on f64 prints the shortest representation that round-trips.
                write!(w, "\t{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

fn class_counts(labels: &[usize], num_classes: usize) -> Vec<usize> {
    let mut counts = vec![0; num_classes];
    for &l in labels {
        counts[l] += 1;
    }
    counts
}

/// Load a UCR-archive TSV file: label first, then the values, tab separated.
pub fn load_ucr_tsv(path: impl AsRef<Path>, role: Role) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    parse_ucr_tsv(file, &path.display().to_string(), &name, role)
}

/// Parse UCR TSV text from any reader. `source` names the input in errors.
pub fn parse_ucr_tsv<R: Read>(reader: R, source: &str, name: &str, role: Role) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);

    let mut raw_labels = Vec::new();
    let mut series = Vec::new();
    let mut width = None;
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Format {
            path: source.to_string(),
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(Error::Format {
                    path: source.to_string(),
                    line,
                    message: format!("expected {w} fields, found {}", record.len()),
                });
            }
            Some(_) => {}
        }
        if record.len() < 3 {
            return Err(Error::Format {
                path: source.to_string(),
                line,
                message: "a row needs a label and at least two values".to_string(),
            });
        }
        let values = record
            .iter()
            .skip(1)
            .map(|field| {
                field
                    .trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        path: source.to_string(),
                        line,
                        value: field.to_string(),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        raw_labels.push(record[0].trim().to_string());
        series.push(TimeSeries::from_trusted(values));
    }
    if series.is_empty() {
        return Err(Error::EmptyDataset(name.to_string()));
    }

    let label_names = label_dictionary(&raw_labels);
    let labels = raw_labels
        .iter()
        .map(|l| label_names.iter().position(|n| n == l).expect("label in dictionary"))
        .collect();
    LabeledDataset::new(name, role, series, labels, label_names)
}

/// Sorted distinct labels: numerically when every label is numeric, else lexically.
fn label_dictionary(raw: &[String]) -> Vec<String> {
    let mut names: Vec<String> = raw.to_vec();
    names.sort();
    names.dedup();
    let numeric: Option<Vec<f64>> = names.iter().map(|n| n.parse::<f64>().ok()).collect();
    if let Some(nums) = numeric {
        let mut paired: Vec<(f64, String)> = nums.into_iter().zip(names).collect();
        paired.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        names = paired.into_iter().map(|(_, n)| n).collect();
    }
    names
}

/// Stratified, seeded train/test partition.
///
/// Each class contributes `round(n_c * train_fraction)` instances to the
/// training side, clamped so that both sides get at least one instance when the
/// class has two or more. A singleton class goes to the training side.
/// Within each output the original instance order is kept.
pub fn split(dataset: &LabeledDataset, train_fraction: f64, seed: u64) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidInput(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let c = dataset.num_classes();
    if (dataset.len() as f64) * train_fraction < c as f64 {
        return Err(Error::InvalidInput(format!(
            "{} instances with train fraction {train_fraction} cannot cover {c} classes",
            dataset.len()
        )));
    }

    let mut rng = rng::substream(seed, &["split".into()]);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for class in 0..c {
        let mut members: Vec<usize> = (0..dataset.len()).filter(|&i| dataset.labels[i] == class).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() == 1 {
            log::warn!(
                "class {:?} of {:?} has a single instance; assigning it to the training split",
                dataset.label_names[class],
                dataset.name
            );
            train_idx.push(members[0]);
            continue;
        }
        members.shuffle(&mut rng);
        let n = members.len();
        let n_train = ((n as f64 * train_fraction).round() as usize).clamp(1, n - 1);
        train_idx.extend_from_slice(&members[..n_train]);
        test_idx.extend_from_slice(&members[n_train..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    if test_idx.is_empty() {
        return Err(Error::InvalidInput(format!(
            "split of {:?} left the test side empty",
            dataset.name
        )));
    }
    Ok((
        dataset.subset(&train_idx, Role::Train)?,
        dataset.subset(&test_idx, Role::Test)?,
    ))
}
