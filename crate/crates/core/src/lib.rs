//! Explanation power: rank saliency methods for time series classifiers by how
//! much the referee classifiers' accuracy falls when the time steps a method
//! marks as salient are replaced.
//!
//! Pipeline: [`synthgen`] or [`dataset`] supply data, [`referees`] trains and
//! gates the classifier committee, [`saliency`] and [`explainers`] provide the
//! maps, [`perturb`] erases top-k steps, and [`evaluate`] turns accuracy
//! curves into one power per method.

pub mod dataset;
pub mod error;
pub mod evaluate;
pub mod explainers;
pub mod perturb;
pub mod referees;
pub mod rng;
pub mod saliency;
pub mod synthgen;

pub use dataset::{load_ucr_tsv, split, LabeledDataset, Role, TimeSeries};
pub use error::{Error, Result};
pub use evaluate::{
    accuracy_curve, eauc, f1_against_ground_truth, run_evaluation, standardize, AccuracyCurve, EaucTable, EvalConfig,
    EvalInput, EvalOutcome, F1Report, KGrid, MethodSource, OcclusionSource, PowerReport, RowKey,
};
pub use explainers::{occlusion_saliency, ridge_coefficient_saliency, OcclusionConfig};
pub use perturb::{fit_profile, perturb_series, perturb_test_set, PerturbationProfile, PerturbationStrategy};
pub use referees::{
    accuracy, gate, select_referees, train_candidates, GateDecision, RefereeCommittee, RefereeKind, RefereeSpec,
    TrainedReferee,
};
pub use saliency::{load_explanations, oracle_explanation, random_explanation, ExplanationSet, SaliencyMap, TopKMask};
pub use synthgen::{generate_dataset, GeneratorKind, GroundTruthMask, SalientRegionKind, SyntheticSpec};
