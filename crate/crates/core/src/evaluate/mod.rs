//! Accuracy curves, explanation AUC, and the standardization ladder that turns
//! a table of AUCs into one explanation power per method.
//!
//! The ladder, applied to an [`EaucTable`] with one row per (referee, strategy)
//! and one column per method:
//!
//! 1. min/max rescale each row to `[0, 1]`;
//! 2. average each column (average scaled EAUC);
//! 3. min/max rescale the averages (average scaled rank, lower is better);
//! 4. power = `1 - rank`.

mod output;
mod run;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perturb::PerturbationStrategy;
use crate::saliency::ExplanationSet;
use crate::synthgen::GroundTruthMask;

pub use output::{read_curves_csv, read_power_csv, write_results, PowerRow};
pub use run::{accuracy_curve, run_evaluation, EvalConfig, EvalInput, EvalOutcome, MethodSource, OcclusionSource};

/// Ascending percent thresholds containing 0 and 100.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct KGrid(Vec<u32>);

impl KGrid {
    pub fn new(mut ks: Vec<u32>) -> Result<Self> {
        ks.sort_unstable();
        ks.dedup();
        if ks.first() != Some(&0) || ks.last() != Some(&100) {
            return Err(Error::InvalidInput(format!(
                "k grid must contain 0 and 100 and stay within [0, 100]: {ks:?}"
            )));
        }
        Ok(KGrid(ks))
    }

    pub fn values(&self) -> &[u32] {
        &self.0
    }
}

impl Default for KGrid {
    /// 0, 10, ..., 100.
    fn default() -> Self {
        KGrid((0..=10).map(|i| i * 10).collect())
    }
}

impl TryFrom<Vec<u32>> for KGrid {
    type Error = Error;

    fn try_from(v: Vec<u32>) -> Result<Self> {
        KGrid::new(v)
    }
}

impl From<KGrid> for Vec<u32> {
    fn from(g: KGrid) -> Self {
        g.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyCurve {
    pub method: String,
    pub strategy: PerturbationStrategy,
    pub referee: String,
    /// `(k, accuracy)` in ascending `k`.
    pub points: Vec<(u32, f64)>,
}

/// Trapezoidal area under accuracy-vs-k, divided by the k range.
pub fn eauc(curve: &AccuracyCurve) -> Result<f64> {
    trapezoid_eauc(&curve.points)
}

pub fn trapezoid_eauc(points: &[(u32, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "an accuracy curve needs at least 2 points, got {}",
            points.len()
        )));
    }
    if points.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::InvalidInput(
            "curve thresholds must be strictly ascending".to_string(),
        ));
    }
    let area: f64 = points
        .windows(2)
        .map(|w| f64::from(w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum();
    let span = f64::from(points[points.len() - 1].0 - points[0].0);
    Ok(area / span)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RowKey {
    pub referee: String,
    pub strategy: PerturbationStrategy,
}

/// EAUC per (referee, strategy) row and method column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EaucTable {
    pub methods: Vec<String>,
    pub rows: Vec<RowKey>,
    /// `values[row][method]`.
    pub values: Vec<Vec<f64>>,
}

impl EaucTable {
    pub fn new(methods: Vec<String>, rows: Vec<RowKey>, values: Vec<Vec<f64>>) -> Result<Self> {
        if methods.is_empty() || rows.is_empty() {
            return Err(Error::InvalidInput(
                "EAUC table needs at least one row and one method".to_string(),
            ));
        }
        if values.len() != rows.len() || values.iter().any(|r| r.len() != methods.len()) {
            return Err(Error::dimension(
                "EAUC table shape (rows x methods)",
                format!("{}x{}", rows.len(), methods.len()),
                format!("{}x{:?}", values.len(), values.iter().map(Vec::len).collect::<Vec<_>>()),
            ));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("EAUC table has a non-finite entry".to_string()));
        }
        let mut seen = methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != methods.len() {
            return Err(Error::InvalidInput(format!("duplicate method names in {methods:?}")));
        }
        Ok(EaucTable { methods, rows, values })
    }

    /// Build from curves; every (row, method) pair must be present exactly once.
    pub fn from_curves(curves: &[AccuracyCurve]) -> Result<Self> {
        let mut methods: Vec<String> = Vec::new();
        let mut rows: Vec<RowKey> = Vec::new();
        let mut cells: BTreeMap<(RowKey, String), f64> = BTreeMap::new();
        for c in curves {
            if !methods.contains(&c.method) {
                methods.push(c.method.clone());
            }
            let key = RowKey {
                referee: c.referee.clone(),
                strategy: c.strategy,
            };
            if !rows.contains(&key) {
                rows.push(key.clone());
            }
            if cells.insert((key, c.method.clone()), eauc(c)?).is_some() {
                return Err(Error::InvalidInput(format!(
                    "duplicate curve for method {:?}, referee {:?}, strategy {}",
                    c.method, c.referee, c.strategy
                )));
            }
        }
        let values = rows
            .iter()
            .map(|r| {
                methods
                    .iter()
                    .map(|m| {
                        cells.get(&(r.clone(), m.clone())).copied().ok_or_else(|| {
                            Error::InvalidInput(format!(
                                "missing curve for method {m:?}, referee {:?}, strategy {}",
                                r.referee, r.strategy
                            ))
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        EaucTable::new(methods, rows, values)
    }

    /// Sub-table restricted to the named methods, in the given order.
    pub fn select_methods(&self, names: &[&str]) -> Result<EaucTable> {
        let idx = names
            .iter()
            .map(|n| {
                self.methods
                    .iter()
                    .position(|m| m == n)
                    .ok_or_else(|| Error::InvalidInput(format!("no method {n:?} in EAUC table")))
            })
            .collect::<Result<Vec<_>>>()?;
        EaucTable::new(
            idx.iter().map(|&i| self.methods[i].clone()).collect(),
            self.rows.clone(),
            self.values
                .iter()
                .map(|r| idx.iter().map(|&i| r[i]).collect())
                .collect(),
        )
    }
}

/// Run settings echoed next to the powers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub k_grid: Vec<u32>,
    pub strategies: Vec<PerturbationStrategy>,
    pub committee: Vec<String>,
    pub gaussian_repeats: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub methods: Vec<String>,
    pub rows: Vec<RowKey>,
    /// `scaled_eauc[row][method]`.
    pub scaled_eauc: Vec<Vec<f64>>,
    pub avg_scaled_eauc: Vec<f64>,
    pub avg_scaled_rank: Vec<f64>,
    pub explanation_power: Vec<f64>,
    /// Rows where every method had the same EAUC.
    pub degenerate_rows: Vec<usize>,
    pub warnings: Vec<String>,
    pub provenance: Provenance,
}

impl PowerReport {
    pub fn power_of(&self, method: &str) -> Option<f64> {
        self.methods
            .iter()
            .position(|m| m == method)
            .map(|i| self.explanation_power[i])
    }

    /// Competition ranking by descending power (1 = best, ties share a rank).
    pub fn ranks(&self) -> Vec<usize> {
        self.explanation_power
            .iter()
            .map(|p| 1 + self.explanation_power.iter().filter(|q| *q > p).count())
            .collect()
    }
}

/// Min/max rescale; a constant input maps to 0.5 everywhere and reports `false`.
fn rescale(values: &[f64]) -> (Vec<f64>, bool) {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max > min {
        (values.iter().map(|v| (v - min) / (max - min)).collect(), true)
    } else {
        (vec![0.5; values.len()], false)
    }
}

pub fn standardize(table: &EaucTable) -> PowerReport {
    let m = table.methods.len();
    let mut warnings = Vec::new();
    let mut degenerate_rows = Vec::new();

    let scaled: Vec<Vec<f64>> = if m == 1 {
        let msg = format!("only one method ({:?}); powers are not meaningful", table.methods[0]);
        log::warn!("{msg}");
        warnings.push(msg);
        vec![vec![0.0]; table.rows.len()]
    } else {
        table
            .values
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let (s, spread) = rescale(row);
                if !spread {
                    degenerate_rows.push(i);
                    let msg = format!(
                        "row {} / {}: all methods share one EAUC",
                        table.rows[i].referee, table.rows[i].strategy
                    );
                    log::warn!("{msg}");
                    warnings.push(msg);
                }
                s
            })
            .collect()
    };

    let n_rows = scaled.len() as f64;
    let avg: Vec<f64> = (0..m)
        .map(|j| scaled.iter().map(|r| r[j]).sum::<f64>() / n_rows)
        .collect();
    let (rank, spread) = rescale(&avg);
    if !spread && m > 1 {
        warnings.push("all methods have the same average scaled EAUC".to_string());
    }
    let power = rank.iter().map(|r| 1.0 - r).collect();
    PowerReport {
        methods: table.methods.clone(),
        rows: table.rows.clone(),
        scaled_eauc: scaled,
        avg_scaled_eauc: avg,
        avg_scaled_rank: rank,
        explanation_power: power,
        degenerate_rows,
        warnings,
        provenance: Provenance::default(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Report {
    pub method: String,
    pub mean_f1: f64,
    pub per_instance: Vec<f64>,
}

/// F1 of each map's top-m steps against the ground truth, `m` = salient count.
pub fn f1_against_ground_truth(method: &ExplanationSet, mask: &GroundTruthMask) -> Result<F1Report> {
    if method.series_len() != mask.len() {
        return Err(Error::dimension(
            format!("explanation {:?} length vs mask", method.method_name),
            mask.len(),
            method.series_len(),
        ));
    }
    let truth = mask.salient();
    let m = mask.count();
    let per_instance: Vec<f64> = method
        .maps()
        .iter()
        .map(|map| {
            let picked = map.top_m(m);
            let tp = picked.iter().filter(|&&i| truth[i]).count();
            2.0 * tp as f64 / (picked.len() + m) as f64
        })
        .collect();
    let mean_f1 = if per_instance.is_empty() {
        0.0
    } else {
        per_instance.iter().sum::<f64>() / per_instance.len() as f64
    };
    Ok(F1Report {
        method: method.method_name.clone(),
        mean_f1,
        per_instance,
    })
}
