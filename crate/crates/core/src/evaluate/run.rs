//! The full evaluation grid: committee, explanations, curves, powers.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::explainers::{occlusion_saliency, ridge_coefficient_saliency, OcclusionConfig};
use crate::perturb::{fit_profile, perturb_test_set_repeat, PerturbationProfile, PerturbationStrategy};
use crate::referees::{
    accuracy, select_referees, train_candidates, GateDecision, RefereeKind, RefereeSpec, TrainedReferee,
};
use crate::rng;
use crate::saliency::{load_explanations, oracle_explanation, random_explanation, ExplanationSet};
use crate::synthgen::GroundTruthMask;

use super::{f1_against_ground_truth, standardize, AccuracyCurve, EaucTable, F1Report, KGrid, PowerReport, Provenance};

/// Where an occlusion method gets its classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OcclusionSource {
    /// The committee member with the best holdout accuracy.
    StrongestMember,
    /// A dedicated referee trained on the full training set.
    Referee(RefereeSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub enum MethodSource {
    Random,
    Oracle,
    /// Absolute ridge coefficients of the predicted class.
    RidgeSaliency,
    Occlusion {
        name: String,
        source: OcclusionSource,
        config: Option<OcclusionConfig>,
    },
    /// Headerless CSV, one row per test instance.
    File {
        path: PathBuf,
        absolutize: bool,
    },
    Provided(ExplanationSet),
}

impl MethodSource {
    pub fn occlusion() -> Self {
        MethodSource::Occlusion {
            name: "Occlusion".to_string(),
            source: OcclusionSource::StrongestMember,
            config: None,
        }
    }

    fn label(&self) -> String {
        match self {
            MethodSource::Random => "Random".to_string(),
            MethodSource::Oracle => "Oracle".to_string(),
            MethodSource::RidgeSaliency => "RidgeSM".to_string(),
            MethodSource::Occlusion { name, .. } => name.clone(),
            MethodSource::File { path, .. } => path.display().to_string(),
            MethodSource::Provided(set) => set.method_name.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub referees: Vec<RefereeSpec>,
    pub strategies: Vec<PerturbationStrategy>,
    pub k_grid: KGrid,
    pub seed: u64,
    /// Noise draws averaged per point for Gaussian strategies.
    pub gaussian_repeats: u32,
    pub methods: Vec<MethodSource>,
    /// Prepend a Random method unless one is already listed.
    pub include_random: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            referees: RefereeSpec::builtins(),
            strategies: PerturbationStrategy::ALL.to_vec(),
            k_grid: KGrid::default(),
            seed: 0,
            gaussian_repeats: 1,
            methods: Vec::new(),
            include_random: true,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EvalInput<'a> {
    pub train: &'a LabeledDataset,
    pub test: &'a LabeledDataset,
    pub mask: Option<&'a GroundTruthMask>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalOutcome {
    pub committee: Vec<String>,
    pub gate_log: Vec<GateDecision>,
    /// (method, referee id) for every occlusion method.
    pub occlusion_sources: Vec<(String, String)>,
    pub curves: Vec<AccuracyCurve>,
    pub table: EaucTable,
    pub report: PowerReport,
    pub f1: Vec<F1Report>,
}

/// Accuracy of `referee` on the test set perturbed under `method` at each k.
///
/// Gaussian strategies average `repeats` independent noise draws per point.
#[allow(clippy::too_many_arguments)]
pub fn accuracy_curve(
    method: &ExplanationSet,
    strategy: PerturbationStrategy,
    referee: &TrainedReferee,
    test: &LabeledDataset,
    profile: &PerturbationProfile,
    k_grid: &KGrid,
    seed: u64,
    repeats: u32,
) -> Result<AccuracyCurve> {
    method.check_shape(test.len(), test.series_len())?;
    let base = accuracy(referee, test)?;
    let points = k_grid
        .values()
        .iter()
        .map(|&k| {
            let acc = if k == 0 {
                base
            } else {
                point_accuracy(method, strategy, referee, test, profile, k, seed, repeats)?
            };
            Ok((k, acc))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AccuracyCurve {
        method: method.method_name.clone(),
        strategy,
        referee: referee.id().to_string(),
        points,
    })
}

#[allow(clippy::too_many_arguments)]
fn point_accuracy(
    method: &ExplanationSet,
    strategy: PerturbationStrategy,
    referee: &TrainedReferee,
    test: &LabeledDataset,
    profile: &PerturbationProfile,
    k: u32,
    seed: u64,
    repeats: u32,
) -> Result<f64> {
    let draws = if strategy.is_stochastic() { repeats.max(1) } else { 1 };
    let mut total = 0.0;
    for r in 0..draws {
        let perturbed = perturb_test_set_repeat(test, method, k, strategy, profile, seed, r)?;
        total += accuracy(referee, &perturbed)?;
    }
    Ok(total / f64::from(draws))
}

/// Train and gate the referees, build every explanation, evaluate the
/// (method x strategy x referee x k) grid and standardize the EAUCs.
pub fn run_evaluation(input: EvalInput<'_>, config: &EvalConfig) -> Result<EvalOutcome> {
    let EvalInput { train, test, mask } = input;
    if config.strategies.is_empty() {
        return Err(Error::Config(
            "at least one perturbation strategy is required".to_string(),
        ));
    }
    if config.referees.is_empty() {
        return Err(Error::Config("at least one referee is required".to_string()));
    }
    if train.series_len() != test.series_len() {
        return Err(Error::dimension(
            "test series length",
            train.series_len(),
            test.series_len(),
        ));
    }
    if let Some(m) = mask {
        if m.len() != test.series_len() {
            return Err(Error::dimension("ground-truth mask length", test.series_len(), m.len()));
        }
    }
    let (n, d) = (test.len(), test.series_len());

    let mut sources = config.methods.clone();
    if config.include_random && !sources.iter().any(|s| matches!(s, MethodSource::Random)) {
        sources.insert(0, MethodSource::Random);
    }
    if sources.iter().any(|s| matches!(s, MethodSource::Oracle)) && mask.is_none() {
        return Err(Error::Config("the Oracle method needs a ground-truth mask".to_string()));
    }

    // Externally supplied explanations are checked before any training.
    let mut loaded: Vec<Option<ExplanationSet>> = Vec::with_capacity(sources.len());
    let mut problems: Vec<(String, Error)> = Vec::new();
    for s in &sources {
        let set = match s {
            MethodSource::File { path, absolutize } => {
                load_explanations(path, n, d).map(|e| if *absolutize { e.absolutize() } else { e })
            }
            MethodSource::Provided(set) => set.check_shape(n, d).map(|_| set.clone()),
            _ => {
                loaded.push(None);
                continue;
            }
        };
        match set {
            Ok(set) => loaded.push(Some(set)),
            Err(e) => {
                problems.push((s.label(), e));
                loaded.push(None);
            }
        }
    }
    if !problems.is_empty() {
        return Err(combine_method_errors(problems));
    }

    let profile = fit_profile(train);
    let candidates = train_candidates(&config.referees, train, Some(test), config.seed)?;
    let ridge_candidate = candidates.iter().find(|c| c.kind() == RefereeKind::RidgeRaw).cloned();
    let committee = select_referees(candidates, train.num_classes())?;
    for d in &committee.selection_log {
        log::info!(
            "gate: {} accuracy {:.4} threshold {:.4} -> {}",
            d.referee,
            d.accuracy,
            d.threshold,
            if d.admitted { "admitted" } else { "rejected" }
        );
    }

    let mut methods: Vec<ExplanationSet> = Vec::with_capacity(sources.len());
    let mut occlusion_sources = Vec::new();
    for (s, pre) in sources.iter().zip(loaded) {
        let set = match s {
            MethodSource::Random => {
                let mut r = rng::substream(config.seed, &["random-explanation".into()]);
                random_explanation(d, n, &mut r)
            }
            MethodSource::Oracle => oracle_explanation(mask.expect("checked above"), n),
            MethodSource::RidgeSaliency => {
                let ridge = match &ridge_candidate {
                    Some(r) => r.clone(),
                    None => RefereeSpec::ridge_raw().train(train, config.seed)?,
                };
                ridge_coefficient_saliency(&ridge, test)?
            }
            MethodSource::Occlusion {
                name,
                source,
                config: occ,
            } => {
                let referee = match source {
                    OcclusionSource::StrongestMember => strongest(&committee.members).clone(),
                    OcclusionSource::Referee(spec) => spec.train(train, config.seed)?,
                };
                let occ = occ.unwrap_or_else(|| OcclusionConfig::for_length(d));
                occlusion_sources.push((name.clone(), referee.id().to_string()));
                occlusion_saliency(&referee, test, &profile, &occ, config.seed)?.renamed(name.clone())
            }
            MethodSource::File { .. } | MethodSource::Provided(_) => pre.expect("loaded above"),
        };
        methods.push(set);
    }
    let mut names: Vec<&str> = methods.iter().map(|m| m.method_name.as_str()).collect();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::Config(format!("method name {:?} appears more than once", w[0])));
    }
    if methods.len() < 2 {
        log::warn!("only {} method(s); the power report will be degenerate", methods.len());
    }

    // k = 0 leaves every series intact, so it is shared by all methods.
    let base: Vec<f64> = committee
        .members
        .iter()
        .map(|r| accuracy(r, test))
        .collect::<Result<_>>()?;

    let mut cells = Vec::new();
    for mi in 0..methods.len() {
        for ri in 0..committee.members.len() {
            for &strategy in &config.strategies {
                for &k in config.k_grid.values() {
                    cells.push((mi, ri, strategy, k));
                }
            }
        }
    }
    let accs = cells
        .par_iter()
        .map(|&(mi, ri, strategy, k)| {
            if k == 0 {
                Ok(base[ri])
            } else {
                point_accuracy(
                    &methods[mi],
                    strategy,
                    &committee.members[ri],
                    test,
                    &profile,
                    k,
                    config.seed,
                    config.gaussian_repeats,
                )
            }
        })
        .collect::<Result<Vec<f64>>>()?;

    let per_curve = config.k_grid.values().len();
    let curves: Vec<AccuracyCurve> = cells
        .chunks(per_curve)
        .zip(accs.chunks(per_curve))
        .map(|(cs, acc)| {
            let (mi, ri, strategy, _) = cs[0];
            AccuracyCurve {
                method: methods[mi].method_name.clone(),
                strategy,
                referee: committee.members[ri].id().to_string(),
                points: cs.iter().map(|c| c.3).zip(acc.iter().copied()).collect(),
            }
        })
        .collect();

    let table = EaucTable::from_curves(&curves)?;
    let mut report = standardize(&table);
    report.provenance = Provenance {
        seed: config.seed,
        k_grid: config.k_grid.values().to_vec(),
        strategies: config.strategies.clone(),
        committee: committee.members.iter().map(|m| m.id().to_string()).collect(),
        gaussian_repeats: config.gaussian_repeats,
    };
    let f1 = match mask {
        Some(m) => methods
            .iter()
            .map(|set| f1_against_ground_truth(set, m))
            .collect::<Result<_>>()?,
        None => Vec::new(),
    };

    Ok(EvalOutcome {
        committee: report.provenance.committee.clone(),
        gate_log: committee.selection_log,
        occlusion_sources,
        curves,
        table,
        report,
        f1,
    })
}

/// Best holdout accuracy; ties prefer referees with scores, then roster order.
fn strongest(members: &[TrainedReferee]) -> &TrainedReferee {
    let key = |r: &TrainedReferee| (r.holdout_accuracy.unwrap_or(0.0), r.has_scores());
    let mut best = &members[0];
    for m in &members[1..] {
        let (a, s) = key(m);
        let (ba, bs) = key(best);
        if a > ba || (a == ba && s && !bs) {
            best = m;
        }
    }
    best
}

fn combine_method_errors(mut problems: Vec<(String, Error)>) -> Error {
    if problems.len() == 1 {
        return problems.pop().expect("one problem").1;
    }
    let lines: Vec<String> = problems.iter().map(|(name, e)| format!("  {name}: {e}")).collect();
    Error::InvalidInput(format!(
        "{} explanation methods are unusable:\n{}",
        problems.len(),
        lines.join("\n")
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{generate_dataset, GeneratorKind, SalientRegionKind, SyntheticSpec};

    fn small(seed: u64) -> (LabeledDataset, LabeledDataset, GroundTruthMask) {
        let mut spec = SyntheticSpec::new(GeneratorKind::Harmonic, SalientRegionKind::SmallMiddle, seed);
        spec.n_train = 60;
        spec.n_test = 20;
        spec.length = 20;
        generate_dataset(&spec).unwrap()
    }

    fn quick_config() -> EvalConfig {
        EvalConfig {
            referees: vec![RefereeSpec::ridge_raw(), RefereeSpec::OneNnDtw { window: Some(2) }],
            strategies: vec![PerturbationStrategy::GlobalMean, PerturbationStrategy::LocalGaussian],
            k_grid: KGrid::new(vec![0, 30, 60, 100]).unwrap(),
            methods: vec![MethodSource::Oracle],
            ..EvalConfig::default()
        }
    }

    #[test]
    fn oracle_beats_random() {
        let (train, test, mask) = small(3);
        let out = run_evaluation(
            EvalInput {
                train: &train,
                test: &test,
                mask: Some(&mask),
            },
            &quick_config(),
        )
        .unwrap();
        assert_eq!(out.table.methods, vec!["Random", "Oracle"]);
        assert_eq!(out.report.power_of("Oracle"), Some(1.0));
        assert_eq!(out.report.power_of("Random"), Some(0.0));
        assert_eq!(out.f1.iter().find(|f| f.method == "Oracle").unwrap().mean_f1, 1.0);
        assert_eq!(out.curves.len(), 2 * out.committee.len() * 2);
    }

    #[test]
    fn k0_point_is_unperturbed_accuracy() {
        let (train, test, mask) = small(4);
        let referee = RefereeSpec::ridge_raw().train(&train, 0).unwrap();
        let profile = fit_profile(&train);
        let oracle = oracle_explanation(&mask, test.len());
        let grid = KGrid::new(vec![0, 100]).unwrap();
        let c = accuracy_curve(
            &oracle,
            PerturbationStrategy::GlobalMean,
            &referee,
            &test,
            &profile,
            &grid,
            0,
            1,
        )
        .unwrap();
        assert_eq!(c.points.len(), 2);
        assert_eq!(c.points[0].1, accuracy(&referee, &test).unwrap());
    }

    #[test]
    fn shape_errors_are_listed_before_training() {
        let (train, test, _) = small(5);
        let bad = |name: &str, d: usize| {
            MethodSource::Provided(random_explanation(d, test.len(), &mut rng::seeded(0)).renamed(name))
        };
        let mut cfg = quick_config();
        cfg.referees = vec![RefereeSpec::External {
            name: "never".into(),
            command: "exit 1".into(),
        }];
        cfg.methods = vec![bad("A", 7), bad("B", 9)];
        let err = run_evaluation(
            EvalInput {
                train: &train,
                test: &test,
                mask: None,
            },
            &cfg,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("A:") && msg.contains("B:"), "{msg}");
    }

    #[test]
    fn oracle_without_mask_is_rejected() {
        let (train, test, _) = small(6);
        assert!(matches!(
            run_evaluation(
                EvalInput {
                    train: &train,
                    test: &test,
                    mask: None
                },
                &quick_config()
            ),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn repeat_runs_are_identical() {
        let (train, test, mask) = small(7);
        let input = EvalInput {
            train: &train,
            test: &test,
            mask: Some(&mask),
        };
        let a = run_evaluation(input, &quick_config()).unwrap();
        let b = run_evaluation(input, &quick_config()).unwrap();
        assert_eq!(a.curves, b.curves);
        assert_eq!(a.report, b.report);
    }

    #[test]
    fn monotone_transform_keeps_power() {
        let (train, test, mask) = small(8);
        let mut r = rng::seeded(1);
        let raw = random_explanation(test.series_len(), test.len(), &mut r).renamed("Raw");
        let cubed = ExplanationSet::new(
            "Raw",
            raw.maps()
                .iter()
                .map(|m| {
                    crate::saliency::SaliencyMap::new(m.weights().iter().map(|w| w.powi(3) + 2.0).collect()).unwrap()
                })
                .collect(),
        )
        .unwrap();
        let input = EvalInput {
            train: &train,
            test: &test,
            mask: Some(&mask),
        };
        let mut cfg = quick_config();
        cfg.methods = vec![MethodSource::Oracle, MethodSource::Provided(raw)];
        let a = run_evaluation(input, &cfg).unwrap();
        cfg.methods = vec![MethodSource::Oracle, MethodSource::Provided(cubed)];
        let b = run_evaluation(input, &cfg).unwrap();
        assert_eq!(a.curves, b.curves);
        assert_eq!(a.report.explanation_power, b.report.explanation_power);
    }
}
