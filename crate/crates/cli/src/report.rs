//! Markdown power tables.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};

use expower_core::evaluate::{read_curves_csv, read_power_csv, PowerRow};

use crate::plot::write_curve_charts;

/// Two-row table: methods as columns, power and ranking as rows.
pub fn power_table(rows: &[PowerRow]) -> String {
    let mut s = String::new();
    let _ = write!(s, "| |");
    for r in rows {
        let _ = write!(s, " {} |", r.method);
    }
    let _ = write!(s, "\n|---|");
    for _ in rows {
        let _ = write!(s, "---|");
    }
    let _ = write!(s, "\n| Explanation Power |");
    for r in rows {
        let _ = write!(s, " {:.2} |", r.explanation_power);
    }
    let _ = write!(s, "\n| Method Ranking |");
    for r in rows {
        let _ = write!(s, " {} |", r.rank);
    }
    s.push('\n');
    s
}

/// Run directories under `dir`: `dir` itself when it holds power.csv,
/// otherwise its immediate subdirectories that do.
pub fn find_runs(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    if dir.join("power.csv").is_file() {
        return Ok(vec![dir.to_path_buf()]);
    }
    let entries = std::fs::read_dir(dir).with_context(|| format!("cannot read results directory {}", dir.display()))?;
    let mut runs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("power.csv").is_file())
        .collect();
    runs.sort();
    if runs.is_empty() {
        bail!(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("no power.csv in {} or its subdirectories", dir.display())
        ));
    }
    Ok(runs)
}

/// Render report.md for every run under `dir` and return its text.
pub fn render_report(dir: &Path, plots: bool) -> anyhow::Result<String> {
    let mut md = String::new();
    for run in find_runs(dir)? {
        let title = run
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| run.display().to_string());
        let rows = read_power_csv(run.join("power.csv"))?;
        let _ = writeln!(md, "## {title}\n\n{}", power_table(&rows));
        if plots {
            let curves_path = run.join("curves.csv");
            let curves = read_curves_csv(&curves_path)?;
            if curves.is_empty() {
                bail!(expower_core::Error::Format {
                    path: curves_path.display().to_string(),
                    line: 1,
                    message: "no curves".to_string(),
                });
            }
            for p in write_curve_charts(&run, &curves)? {
                let rel = p.strip_prefix(dir).unwrap_or(&p);
                let _ = writeln!(md, "![{}]({})", rel.display(), rel.display());
            }
            md.push('\n');
        }
    }
    let path = dir.join("report.md");
    std::fs::write(&path, &md).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(md)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_has_one_column_per_method() {
        let rows: Vec<PowerRow> = ["Random", "Oracle", "A", "B"]
            .iter()
            .enumerate()
            .map(|(i, m)| PowerRow {
                method: m.to_string(),
                explanation_power: i as f64 / 3.0,
                rank: 4 - i,
                avg_scaled_eauc: 0.0,
                avg_scaled_rank: 0.0,
            })
            .collect();
        let t = power_table(&rows);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines.iter().all(|l| l.matches('|').count() == 6));
        assert!(lines[2].starts_with("| Explanation Power | 0.00 | 0.33 | 0.67 | 1.00 |"));
        assert_eq!(lines[3], "| Method Ranking | 4 | 3 | 2 | 1 |");
    }

    #[test]
    fn missing_results_are_named() {
        let dir = tempfile::tempdir().unwrap();
        let err = render_report(dir.path(), false).unwrap_err();
        assert!(err.to_string().contains(&dir.path().display().to_string()));
        assert_eq!(crate::exit_code(&err), crate::EXIT_IO);
    }
}
