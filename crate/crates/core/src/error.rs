use std::path::PathBuf;

use thiserror::Error;

use crate::referees::GateDecision;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Structural problem with an input file, e.g. ragged rows.
    #[error("{path}:{line}: {message}")]
    Format { path: String, line: usize, message: String },

    #[error("{path}:{line}: cannot parse {value:?} as a finite real")]
    Parse { path: String, line: usize, value: String },

    #[error("dataset {0:?} contains no instances")]
    EmptyDataset(String),

    #[error("{context}: expected {expected}, found {found}")]
    Dimension {
        context: String,
        expected: String,
        found: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("external referee {name:?} failed: {message}")]
    External { name: String, message: String },

    #[error("{}", gate_message(.0))]
    EmptyCommittee(Vec<GateDecision>),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dimension(context: impl Into<String>, expected: impl ToString, found: impl ToString) -> Self {
        Error::Dimension {
            context: context.into(),
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}

fn gate_message(log: &[GateDecision]) -> String {
    let mut msg = String::from("no referee passed the accuracy gate; add stronger referee candidates. Rejected:");
    for d in log {
        msg.push_str(&format!(
            "\n  {} accuracy={:.4} threshold={:.4} chance={:.4}",
            d.referee, d.accuracy, d.threshold, d.chance_rate
        ));
    }
    msg
}
