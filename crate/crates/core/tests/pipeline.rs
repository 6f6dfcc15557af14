use expower_core::evaluate::{read_curves_csv, read_power_csv, write_results};
use expower_core::{
    generate_dataset, load_explanations, load_ucr_tsv, oracle_explanation, run_evaluation, EvalConfig, EvalInput,
    GeneratorKind, GroundTruthMask, KGrid, MethodSource, PerturbationStrategy, RefereeSpec, Role, SalientRegionKind,
    SyntheticSpec,
};

fn small(generator: GeneratorKind, region: SalientRegionKind) -> SyntheticSpec {
    let mut spec = SyntheticSpec::new(generator, region, 9);
    spec.length = 30;
    spec.n_train = 80;
    spec.n_test = 24;
    spec
}

fn quick_config(methods: Vec<MethodSource>) -> EvalConfig {
    EvalConfig {
        referees: vec![RefereeSpec::ridge_raw(), RefereeSpec::rocket_lite(50)],
        strategies: vec![PerturbationStrategy::GlobalMean, PerturbationStrategy::LocalGaussian],
        k_grid: KGrid::new(vec![0, 25, 50, 75, 100]).unwrap(),
        methods,
        ..EvalConfig::default()
    }
}

#[test]
fn datasets_masks_and_explanations_survive_disk() {
    let dir = tempfile::tempdir().unwrap();
    let (train, test, mask) = generate_dataset(&small(GeneratorKind::Harmonic, SalientRegionKind::RareTime)).unwrap();

    train.write_ucr_tsv(dir.path().join("H_TRAIN.tsv")).unwrap();
    let back = load_ucr_tsv(dir.path().join("H_TRAIN.tsv"), Role::Train).unwrap();
    assert_eq!(back.series(), train.series());
    assert_eq!(back.labels(), train.labels());
    assert_eq!(back.label_names(), train.label_names());

    mask.save(dir.path().join("mask.csv")).unwrap();
    assert_eq!(GroundTruthMask::load(dir.path().join("mask.csv")).unwrap(), mask);

    let oracle = oracle_explanation(&mask, test.len());
    let path = dir.path().join("Gold.csv");
    oracle.save(&path).unwrap();
    let loaded = load_explanations(&path, test.len(), test.series_len()).unwrap();
    assert_eq!(loaded.method_name, "Gold");
    assert_eq!(loaded.maps(), oracle.maps());
}

#[test]
fn file_explanations_score_like_provided_ones() {
    let dir = tempfile::tempdir().unwrap();
    let (train, test, mask) = generate_dataset(&small(GeneratorKind::Car, SalientRegionKind::SmallMiddle)).unwrap();
    let mut gold = oracle_explanation(&mask, test.len());
    gold.method_name = "Gold".into();
    gold.save(dir.path().join("Gold.csv")).unwrap();
    let input = EvalInput {
        train: &train,
        test: &test,
        mask: Some(&mask),
    };

    let from_file = run_evaluation(
        input,
        &quick_config(vec![
            MethodSource::RidgeSaliency,
            MethodSource::File {
                path: dir.path().join("Gold.csv"),
                absolutize: false,
            },
        ]),
    )
    .unwrap();
    let provided = run_evaluation(
        input,
        &quick_config(vec![MethodSource::RidgeSaliency, MethodSource::Provided(gold)]),
    )
    .unwrap();

    assert_eq!(from_file.report.methods, vec!["Random", "RidgeSM", "Gold"]);
    assert_eq!(from_file.report.explanation_power, provided.report.explanation_power);
    assert_eq!(from_file.curves, provided.curves);
    let gold_f1 = from_file.f1.iter().find(|f| f.method == "Gold").unwrap();
    assert_eq!(gold_f1.mean_f1, 1.0);
}

#[test]
fn written_results_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let (train, test, mask) = generate_dataset(&small(GeneratorKind::Narma, SalientRegionKind::SmallMiddle)).unwrap();
    let outcome = run_evaluation(
        EvalInput {
            train: &train,
            test: &test,
            mask: Some(&mask),
        },
        &quick_config(vec![MethodSource::Oracle, MethodSource::occlusion()]),
    )
    .unwrap();
    write_results(dir.path(), &outcome, serde_json::json!({ "note": "x" })).unwrap();

    let rows = read_power_csv(dir.path().join("power.csv")).unwrap();
    assert_eq!(rows.len(), outcome.report.methods.len());
    let ranks = outcome.report.ranks();
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row.method, outcome.report.methods[i]);
        assert_eq!(row.explanation_power, outcome.report.explanation_power[i]);
        assert_eq!(row.rank, ranks[i]);
    }
    assert_eq!(read_curves_csv(dir.path().join("curves.csv")).unwrap(), outcome.curves);

    let run: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run.json")).unwrap()).unwrap();
    assert_eq!(run["meta"]["note"], "x");
    assert_eq!(run["committee"].as_array().unwrap().len(), outcome.committee.len());
    let eauc = std::fs::read_to_string(dir.path().join("eauc.csv")).unwrap();
    // header plus committee x strategies x methods
    assert_eq!(eauc.lines().count(), 1 + outcome.committee.len() * 2 * 3);
}
