//! Referees implemented by an outside program.
//!
//! The engine writes the training set and each dataset to classify as UCR TSV,
//! runs a shell command template, and reads one predicted label per line from
//! the output file. Placeholders in the template: `{train}`, `{input}`,
//! `{output}`. Predicted labels are matched against the dataset's original
//! label text.

use std::fs;
use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;

use tempfile::TempDir;

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ExternalReferee {
    name: String,
    command: String,
    label_names: Vec<String>,
    workdir: Arc<TempDir>,
}

impl ExternalReferee {
    pub fn fit(name: &str, command: &str, train: &LabeledDataset) -> Result<Self> {
        if command.trim().is_empty() {
            return Err(Error::Config(format!("external referee {name:?} has an empty command")));
        }
        let workdir = tempfile::Builder::new()
            .prefix("expower-ext-")
            .tempdir()
            .map_err(|e| Error::io(std::env::temp_dir(), e))?;
        let train_path = workdir.path().join("train.tsv");
        train.write_ucr_tsv(&train_path)?;
        Ok(ExternalReferee {
            name: name.to_string(),
            command: command.to_string(),
            label_names: train.label_names().to_vec(),
            workdir: Arc::new(workdir),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    fn train_path(&self) -> PathBuf {
        self.workdir.path().join("train.tsv")
    }

    pub fn predict_dataset(&self, data: &LabeledDataset) -> Result<Vec<usize>> {
        let call = tempfile::Builder::new()
            .prefix("call-")
            .tempdir_in(self.workdir.path())
            .map_err(|e| Error::io(self.workdir.path(), e))?;
        let input = call.path().join("input.tsv");
        let output = call.path().join("predictions.txt");
        // Labels of the input are written as-is; external tools must not rely on them.
        data.write_ucr_tsv(&input)?;
        let cmd = self
            .command
            .replace("{train}", &self.train_path().display().to_string())
            .replace("{input}", &input.display().to_string())
            .replace("{output}", &output.display().to_string());
        let status = Command::new("sh")
            .arg("-c")
            .arg(&cmd)
            .status()
            .map_err(|e| self.fail(format!("cannot spawn `{cmd}`: {e}")))?;
        if !status.success() {
            return Err(self.fail(format!("`{cmd}` exited with {status}")));
        }
        let text = fs::read_to_string(&output).map_err(|e| Error::io(&output, e))?;
        let preds = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, l)| {
                let l = l.trim();
                self.label_names
                    .iter()
                    .position(|n| n == l)
                    .ok_or_else(|| self.fail(format!("line {}: unknown label {l:?}", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        if preds.len() != data.len() {
            return Err(Error::dimension(
                format!("predictions from {:?}", self.name),
                data.len(),
                preds.len(),
            ));
        }
        Ok(preds)
    }

    fn fail(&self, message: String) -> Error {
        Error::External {
            name: self.name.clone(),
            message,
        }
    }
}
