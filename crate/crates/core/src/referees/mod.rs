//! Referee classifiers and the accuracy gate that forms the committee.

pub mod dtw;
pub mod external;
pub mod ridge;
pub mod rocket;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{split, LabeledDataset};
use crate::error::{Error, Result};

pub use dtw::{dtw_distance, DtwNearestNeighbor};
pub use external::ExternalReferee;
pub use ridge::{default_alphas, RidgeRawClassifier};
pub use rocket::RocketClassifier;

/// Fraction of the training set used to fit gating candidates; the rest is holdout.
pub const GATE_TRAIN_FRACTION: f64 = 0.8;
/// Gate threshold cap on the mean candidate accuracy.
pub const GATE_CAP: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RefereeKind {
    OneNnDtw,
    RocketLite,
    RidgeRaw,
    External,
}

impl fmt::Display for RefereeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RefereeKind::OneNnDtw => "one-nn-dtw",
            RefereeKind::RocketLite => "rocket-lite",
            RefereeKind::RidgeRaw => "ridge-raw",
            RefereeKind::External => "external",
        })
    }
}

/// How to build one referee.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RefereeSpec {
    OneNnDtw {
        /// Sakoe-Chiba half-width; absent means unbounded.
        #[serde(default)]
        window: Option<usize>,
    },
    RocketLite {
        #[serde(default = "default_num_kernels")]
        num_kernels: usize,
    },
    RidgeRaw {
        #[serde(default = "default_alphas")]
        alphas: Vec<f64>,
    },
    External {
        name: String,
        command: String,
    },
}

fn default_num_kernels() -> usize {
    1000
}

impl RefereeSpec {
    pub fn one_nn_dtw() -> Self {
        RefereeSpec::OneNnDtw { window: None }
    }

    pub fn rocket_lite(num_kernels: usize) -> Self {
        RefereeSpec::RocketLite { num_kernels }
    }

    pub fn ridge_raw() -> Self {
        RefereeSpec::RidgeRaw {
            alphas: default_alphas(),
        }
    }

    /// The three built-ins at their default settings.
    pub fn builtins() -> Vec<RefereeSpec> {
        vec![
            Self::one_nn_dtw(),
            Self::rocket_lite(default_num_kernels()),
            Self::ridge_raw(),
        ]
    }

    pub fn kind(&self) -> RefereeKind {
        match self {
            RefereeSpec::OneNnDtw { .. } => RefereeKind::OneNnDtw,
            RefereeSpec::RocketLite { .. } => RefereeKind::RocketLite,
            RefereeSpec::RidgeRaw { .. } => RefereeKind::RidgeRaw,
            RefereeSpec::External { .. } => RefereeKind::External,
        }
    }

    /// Stable identifier used in output files.
    pub fn id(&self) -> String {
        match self {
            RefereeSpec::OneNnDtw { window: None } => "1nn-dtw".to_string(),
            RefereeSpec::OneNnDtw { window: Some(w) } => format!("1nn-dtw-w{w}"),
            RefereeSpec::RocketLite { num_kernels } if *num_kernels == default_num_kernels() => {
                "rocket-lite".to_string()
            }
            RefereeSpec::RocketLite { num_kernels } => format!("rocket-lite-{num_kernels}"),
            RefereeSpec::RidgeRaw { .. } => "ridge-raw".to_string(),
            RefereeSpec::External { name, .. } => name.clone(),
        }
    }

    pub fn train(&self, train: &LabeledDataset, seed: u64) -> Result<TrainedReferee> {
        let model = match self {
            RefereeSpec::OneNnDtw { window } => RefereeModel::OneNnDtw(DtwNearestNeighbor::fit(train, *window)),
            RefereeSpec::RocketLite { num_kernels } => {
                if train.len() < train.num_classes() {
                    return Err(Error::Training(format!(
                        "rocket-lite needs at least {} instances",
                        train.num_classes()
                    )));
                }
                RefereeModel::RocketLite(RocketClassifier::fit(train, *num_kernels, seed)?)
            }
            RefereeSpec::RidgeRaw { alphas } => {
                if train.len() < train.num_classes() {
                    return Err(Error::Training(format!(
                        "ridge-raw needs at least {} instances",
                        train.num_classes()
                    )));
                }
                RefereeModel::RidgeRaw(RidgeRawClassifier::fit(train, alphas)?)
            }
            RefereeSpec::External { name, command } => {
                RefereeModel::External(ExternalReferee::fit(name, command, train)?)
            }
        };
        Ok(TrainedReferee {
            id: self.id(),
            model,
            series_len: train.series_len(),
            num_classes: train.num_classes(),
            holdout_accuracy: None,
            test_accuracy: None,
        })
    }
}

#[derive(Debug, Clone)]
pub enum RefereeModel {
    OneNnDtw(DtwNearestNeighbor),
    RocketLite(RocketClassifier),
    RidgeRaw(RidgeRawClassifier),
    External(ExternalReferee),
}

/// A classifier fitted on the original training data. Immutable once built.
#[derive(Debug, Clone)]
pub struct TrainedReferee {
    id: String,
    model: RefereeModel,
    series_len: usize,
    num_classes: usize,
    pub holdout_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
}

impl TrainedReferee {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn kind(&self) -> RefereeKind {
        match self.model {
            RefereeModel::OneNnDtw(_) => RefereeKind::OneNnDtw,
            RefereeModel::RocketLite(_) => RefereeKind::RocketLite,
            RefereeModel::RidgeRaw(_) => RefereeKind::RidgeRaw,
            RefereeModel::External(_) => RefereeKind::External,
        }
    }

    pub fn model(&self) -> &RefereeModel {
        &self.model
    }

    pub fn series_len(&self) -> usize {
        self.series_len
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Whether [`class_scores`](Self::class_scores) returns continuous scores.
    pub fn has_scores(&self) -> bool {
        matches!(self.model, RefereeModel::RocketLite(_) | RefereeModel::RidgeRaw(_))
    }

    pub fn class_scores(&self, x: &[f64]) -> Option<Vec<f64>> {
        match &self.model {
            RefereeModel::RocketLite(m) => Some(m.scores(x)),
            RefereeModel::RidgeRaw(m) => Some(m.scores(x)),
            _ => None,
        }
    }

    pub fn ridge(&self) -> Option<&RidgeRawClassifier> {
        match &self.model {
            RefereeModel::RidgeRaw(m) => Some(m),
            _ => None,
        }
    }

    /// Predict one series. External referees go through a one-row dataset.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        self.check_len(x.len())?;
        Ok(match &self.model {
            RefereeModel::OneNnDtw(m) => m.predict(x),
            RefereeModel::RocketLite(m) => m.predict(x),
            RefereeModel::RidgeRaw(m) => m.predict(x),
            RefereeModel::External(m) => {
                let ts = crate::dataset::TimeSeries::new(x.to_vec())?;
                let one = LabeledDataset::new(
                    "query",
                    crate::dataset::Role::Test,
                    vec![ts],
                    vec![0],
                    placeholder_label_names(self.num_classes),
                )?;
                m.predict_dataset(&one)?[0]
            }
        })
    }

    pub fn predict_dataset(&self, data: &LabeledDataset) -> Result<Vec<usize>> {
        self.check_len(data.series_len())?;
        match &self.model {
            RefereeModel::External(m) => m.predict_dataset(data),
            _ => data.series().par_iter().map(|s| self.predict(s.values())).collect(),
        }
    }

    fn check_len(&self, d: usize) -> Result<()> {
        if d != self.series_len {
            return Err(Error::dimension(
                format!("referee {:?} input length", self.id),
                self.series_len,
                d,
            ));
        }
        Ok(())
    }
}

fn placeholder_label_names(c: usize) -> Vec<String> {
    (0..c).map(|i| i.to_string()).collect()
}

/// Fraction of correct predictions.
pub fn accuracy(referee: &TrainedReferee, data: &LabeledDataset) -> Result<f64> {
    let preds = referee.predict_dataset(data)?;
    let correct = preds.iter().zip(data.labels()).filter(|(p, l)| p == l).count();
    Ok(correct as f64 / data.len() as f64)
}

/// One line of the gate log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateDecision {
    pub referee: String,
    pub accuracy: f64,
    pub test_accuracy: Option<f64>,
    pub threshold: f64,
    pub chance_rate: f64,
    pub admitted: bool,
}

#[derive(Debug, Clone)]
pub struct RefereeCommittee {
    pub members: Vec<TrainedReferee>,
    pub selection_log: Vec<GateDecision>,
}

/// Slack for comparing accuracies computed along different summation orders.
const GATE_EPS: f64 = 1e-12;

/// Gate decisions for a list of (name, accuracy) candidates.
///
/// A candidate is admitted when its accuracy reaches `min(mean, 0.9)` and is
/// not below the uniform-guess rate `1 / C`.
pub fn gate(candidates: &[(String, f64, Option<f64>)], num_classes: usize) -> Vec<GateDecision> {
    if candidates.is_empty() {
        return Vec::new();
    }
    let mean = candidates.iter().map(|c| c.1).sum::<f64>() / candidates.len() as f64;
    let threshold = mean.min(GATE_CAP);
    let chance_rate = 1.0 / num_classes.max(1) as f64;
    candidates
        .iter()
        .map(|(name, acc, test)| GateDecision {
            referee: name.clone(),
            accuracy: *acc,
            test_accuracy: *test,
            threshold,
            chance_rate,
            admitted: *acc + GATE_EPS >= threshold && *acc + GATE_EPS >= chance_rate,
        })
        .collect()
}

/// Keep the candidates that pass [`gate`] on their holdout accuracy.
pub fn select_referees(candidates: Vec<TrainedReferee>, num_classes: usize) -> Result<RefereeCommittee> {
    if candidates.is_empty() {
        return Err(Error::Config("no referee candidates given".to_string()));
    }
    let scored = candidates
        .iter()
        .map(|c| {
            c.holdout_accuracy
                .map(|a| (c.id.clone(), a, c.test_accuracy))
                .ok_or_else(|| Error::InvalidInput(format!("referee {:?} has no holdout accuracy", c.id)))
        })
        .collect::<Result<Vec<_>>>()?;
    let log = gate(&scored, num_classes);
    let members: Vec<TrainedReferee> = candidates
        .into_iter()
        .zip(&log)
        .filter(|(_, d)| d.admitted)
        .map(|(c, _)| c)
        .collect();
    if members.is_empty() {
        return Err(Error::EmptyCommittee(log));
    }
    Ok(RefereeCommittee {
        members,
        selection_log: log,
    })
}

/// Fit each candidate on a stratified 80% of `train`, score it on the other
/// 20%, then refit it on all of `train`. The returned referees carry their
/// holdout accuracy, and their test accuracy when `test` is given.
pub fn train_candidates(
    specs: &[RefereeSpec],
    train: &LabeledDataset,
    test: Option<&LabeledDataset>,
    seed: u64,
) -> Result<Vec<TrainedReferee>> {
    let (fit_part, holdout) = split(train, GATE_TRAIN_FRACTION, seed)?;
    specs
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let model_seed = seed.wrapping_add(i as u64);
            let probe = spec.train(&fit_part, model_seed)?;
            let holdout_acc = accuracy(&probe, &holdout)?;
            let mut full = spec.train(train, model_seed)?;
            full.holdout_accuracy = Some(holdout_acc);
            if let Some(t) = test {
                full.test_accuracy = Some(accuracy(&full, t)?);
            }
            log::info!(
                "referee {} holdout accuracy {:.4}{}",
                full.id,
                holdout_acc,
                full.test_accuracy
                    .map(|a| format!(", test accuracy {a:.4}"))
                    .unwrap_or_default()
            );
            Ok(full)
        })
        .collect()
}
