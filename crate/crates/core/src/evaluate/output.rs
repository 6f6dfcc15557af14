//! Result files of one evaluation run.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perturb::PerturbationStrategy;

use super::{AccuracyCurve, EvalOutcome};

/// One line of power.csv.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub method: String,
    pub explanation_power: f64,
    pub rank: usize,
    pub avg_scaled_eauc: f64,
    pub avg_scaled_rank: f64,
}

#[derive(Serialize, Deserialize)]
struct CurveRow {
    method: String,
    strategy: PerturbationStrategy,
    referee: String,
    k: u32,
    accuracy: f64,
}

#[derive(Serialize)]
struct EaucRow<'a> {
    referee: &'a str,
    strategy: PerturbationStrategy,
    method: &'a str,
    eauc: f64,
    scaled_eauc: f64,
}

#[derive(Serialize)]
struct F1Row<'a> {
    method: &'a str,
    mean_f1: f64,
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format {
            path: path.display().to_string(),
            line: 0,
            message: format!("{other:?}"),
        },
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize()
        .map(|row| {
            row.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line() as usize);
                Error::Format {
                    path: path.display().to_string(),
                    line,
                    message: e.to_string(),
                }
            })
        })
        .collect()
}

/// Write curves.csv, eauc.csv, power.csv, f1.csv (when scored) and run.json.
///
/// `meta` is merged into run.json next to the committee, gate log and
/// provenance of the outcome.
pub fn write_results(dir: impl AsRef<Path>, outcome: &EvalOutcome, meta: serde_json::Value) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    write_csv(
        &dir.join("curves.csv"),
        outcome.curves.iter().flat_map(|c| {
            c.points.iter().map(move |&(k, accuracy)| CurveRow {
                method: c.method.clone(),
                strategy: c.strategy,
                referee: c.referee.clone(),
                k,
                accuracy,
            })
        }),
    )?;

    let t = &outcome.table;
    let r = &outcome.report;
    write_csv(
        &dir.join("eauc.csv"),
        t.rows.iter().enumerate().flat_map(|(i, row)| {
            t.methods.iter().enumerate().map(move |(j, m)| EaucRow {
                referee: &row.referee,
                strategy: row.strategy,
                method: m,
                eauc: t.values[i][j],
                scaled_eauc: r.scaled_eauc[i][j],
            })
        }),
    )?;

    let ranks = r.ranks();
    write_csv(
        &dir.join("power.csv"),
        r.methods.iter().enumerate().map(|(j, m)| PowerRow {
            method: m.clone(),
            explanation_power: r.explanation_power[j],
            rank: ranks[j],
            avg_scaled_eauc: r.avg_scaled_eauc[j],
            avg_scaled_rank: r.avg_scaled_rank[j],
        }),
    )?;

    if !outcome.f1.is_empty() {
        write_csv(
            &dir.join("f1.csv"),
            outcome.f1.iter().map(|f| F1Row {
                method: &f.method,
                mean_f1: f.mean_f1,
            }),
        )?;
    }

    let run = serde_json::json!({
        "meta": meta,
        "provenance": r.provenance,
        "committee": outcome.committee,
        "gate_log": outcome.gate_log,
        "occlusion_sources": outcome.occlusion_sources,
        "degenerate_rows": r.degenerate_rows,
        "warnings": r.warnings,
    });
    let path = dir.join("run.json");
    let text = serde_json::to_string_pretty(&run).expect("run.json is plain data");
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

pub fn read_power_csv(path: impl AsRef<Path>) -> Result<Vec<PowerRow>> {
    let path = path.as_ref();
    let rows: Vec<PowerRow> = read_csv(path)?;
    if rows.is_empty() {
        return Err(Error::Format {
            path: path.display().to_string(),
            line: 1,
            message: "no methods listed".to_string(),
        });
    }
    Ok(rows)
}

/// Regroup curves.csv into curves, in first-appearance order.
pub fn read_curves_csv(path: impl AsRef<Path>) -> Result<Vec<AccuracyCurve>> {
    let rows: Vec<CurveRow> = read_csv(path.as_ref())?;
    let mut curves: Vec<AccuracyCurve> = Vec::new();
    for row in rows {
        let pos = curves
            .iter()
            .position(|c| c.method == row.method && c.strategy == row.strategy && c.referee == row.referee);
        match pos {
            Some(i) => curves[i].points.push((row.k, row.accuracy)),
            None => curves.push(AccuracyCurve {
                method: row.method,
                strategy: row.strategy,
                referee: row.referee,
                points: vec![(row.k, row.accuracy)],
            }),
        }
    }
    Ok(curves)
}
