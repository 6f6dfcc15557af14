//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs with its own harness: `cargo test -p expower-cli --test acceptance`
//! (append `-- 5 6` to run selected criteria only). Criteria listed in
//! `KNOWN_SHORTFALLS` are evaluated at their stated tolerance and reported,
//! but do not fail the target; any other failure does.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use expower_core::evaluate::trapezoid_eauc;
use expower_core::referees::dtw_distance;
use expower_core::saliency::top_k_mask;
use expower_core::{
    fit_profile, gate, generate_dataset, perturb_series, rng, run_evaluation, select_referees, standardize,
    train_candidates, EaucTable, Error, EvalConfig, EvalInput, EvalOutcome, LabeledDataset, MethodSource,
    OcclusionSource, PerturbationStrategy, RefereeSpec, Role, RowKey, SaliencyMap, SyntheticSpec, TimeSeries,
};

/// Criteria that cannot hold as stated; the reason is printed with the result.
const KNOWN_SHORTFALLS: &[(u32, &str)] = &[
    (
        1,
        "the six listed values sum to 2.80, so their mean is 0.4667; the quoted 0.47 is that mean rounded to two places",
    ),
    (
        2,
        "occlusion over the best committee member is tailored to that referee and can push its accuracy below chance, \
         beating the ground-truth mask, whose erasure only reaches chance",
    ),
];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------- criterion 1

fn criterion_1() -> Outcome {
    let given = [0.43, 0.26, 0.69, 0.42, 0.33, 0.67];
    let rows: Vec<RowKey> = (0..6)
        .map(|i| RowKey {
            referee: format!("R{}", i / 2),
            strategy: PerturbationStrategy::ALL[i % 4],
        })
        .collect();
    // Low and High pin every row to [0, 1], so M's scaled EAUC is its raw value.
    let values = given.iter().map(|&v| vec![0.0, v, 1.0]).collect();
    let table = EaucTable::new(vec!["Low".into(), "M".into(), "High".into()], rows, values).unwrap();
    let report = standardize(&table);
    let scaled: Vec<f64> = report.scaled_eauc.iter().map(|r| r[1]).collect();
    let avg = report.avg_scaled_eauc[1];
    let exact_literal = (avg - 0.47).abs() <= 1e-12;
    let arithmetic = (avg - 2.8 / 6.0).abs() <= 1e-12;
    let rounded = (avg * 100.0).round() / 100.0 == 0.47;
    outcome(
        exact_literal && scaled == given,
        format!(
            "avg_scaled_eauc = {avg:.12}; |avg - 0.47| = {:.2e} (tolerance 1e-12); equals 2.8/6 within 1e-12: {arithmetic}; \
             rounds to 0.47: {rounded}",
            (avg - 0.47).abs()
        ),
    )
}

// ------------------------------------------------------------ criteria 2 to 4

struct SuiteRun {
    name: String,
    fraction: f64,
    outcome: EvalOutcome,
    weak_holdout: f64,
}

fn suite_runs() -> Vec<SuiteRun> {
    SyntheticSpec::suite(0)
        .into_iter()
        .map(|spec| {
            let t = Instant::now();
            let (train, test, mask) = generate_dataset(&spec).unwrap();
            let weak = RefereeSpec::rocket_lite(10);
            let config = EvalConfig {
                methods: vec![
                    MethodSource::Oracle,
                    MethodSource::RidgeSaliency,
                    MethodSource::occlusion(),
                    MethodSource::Occlusion {
                        name: "Occlusion-weak".into(),
                        source: OcclusionSource::Referee(weak.clone()),
                        config: None,
                    },
                ],
                ..EvalConfig::default()
            };
            let outcome = run_evaluation(
                EvalInput {
                    train: &train,
                    test: &test,
                    mask: Some(&mask),
                },
                &config,
            )
            .unwrap();
            let weak_holdout = train_candidates(&[weak], &train, None, config.seed).unwrap()[0]
                .holdout_accuracy
                .unwrap();
            println!(
                "    {:<20} committee [{}]  {:.0}s",
                spec.name(),
                outcome.committee.join(", "),
                t.elapsed().as_secs_f64()
            );
            SuiteRun {
                name: spec.name(),
                fraction: spec.region.fraction(),
                outcome,
                weak_holdout,
            }
        })
        .collect()
}

fn criterion_2(runs: &[SuiteRun]) -> Outcome {
    let mut hits = 0;
    let mut lines = Vec::new();
    for r in runs {
        let sub = r
            .outcome
            .table
            .select_methods(&["Random", "Oracle", "RidgeSM", "Occlusion"])
            .unwrap();
        let p = standardize(&sub);
        let (oracle, random) = (p.power_of("Oracle").unwrap(), p.power_of("Random").unwrap());
        let ok = oracle >= 0.9 && random <= 0.1;
        hits += usize::from(ok);
        lines.push(format!(
            "{}: Oracle {oracle:.3} Random {random:.3} RidgeSM {:.3} Occlusion {:.3}{}",
            r.name,
            p.power_of("RidgeSM").unwrap(),
            p.power_of("Occlusion").unwrap(),
            if ok { "" } else { " <-" }
        ));
    }
    outcome(
        hits >= 9,
        format!(
            "{hits}/10 datasets with Oracle >= 0.9 and Random <= 0.1 (need 9)\n      {}",
            lines.join("\n      ")
        ),
    )
}

fn criterion_3(runs: &[SuiteRun]) -> Outcome {
    let mut ok = true;
    let mut lines = Vec::new();
    for r in runs {
        let f1 = |m: &str| r.outcome.f1.iter().find(|f| f.method == m).unwrap().mean_f1;
        let (oracle, random) = (f1("Oracle"), f1("Random"));
        let good = oracle == 1.0 && (random - r.fraction).abs() <= 0.03;
        ok &= good;
        lines.push(format!(
            "{}: Oracle F1 {oracle} Random F1 {random:.3} (target {:.2} +/- 0.03){}",
            r.name,
            r.fraction,
            if good { "" } else { " <-" }
        ));
    }
    outcome(ok, lines.join("\n      "))
}

fn criterion_4(runs: &[SuiteRun]) -> Outcome {
    let mut wins = 0;
    let mut lines = Vec::new();
    for r in runs {
        let p = &r.outcome.report;
        let strong = p.power_of("Occlusion").unwrap();
        let weak = p.power_of("Occlusion-weak").unwrap();
        let source = &r
            .outcome
            .occlusion_sources
            .iter()
            .find(|s| s.0 == "Occlusion")
            .unwrap()
            .1;
        let source_acc = r
            .outcome
            .gate_log
            .iter()
            .find(|d| &d.referee == source)
            .map(|d| d.accuracy)
            .unwrap();
        wins += usize::from(strong >= weak);
        lines.push(format!(
            "{}: Occlusion over {source} (holdout {source_acc:.2}) {strong:.3} vs over rocket-lite-10 (holdout {:.2}) {weak:.3}",
            r.name, r.weak_holdout
        ));
    }
    outcome(
        wins * 2 > runs.len(),
        format!(
            "stronger source wins or ties on {wins}/10 (need a majority)\n      {}",
            lines.join("\n      ")
        ),
    )
}

// ---------------------------------------------------------------- criterion 5

/// Midpoint Riemann sum of the linear interpolant with `per_unit` cells per k unit.
fn riemann_oracle(points: &[(u32, f64)], per_unit: u32) -> f64 {
    let (k0, k1) = (points[0].0, points[points.len() - 1].0);
    let n = (k1 - k0) * per_unit;
    let h = 1.0 / f64::from(per_unit);
    let mut seg = 0;
    let mut total = 0.0;
    for i in 0..n {
        let x = f64::from(k0) + (f64::from(i) + 0.5) * h;
        while f64::from(points[seg + 1].0) < x {
            seg += 1;
        }
        let (xa, ya) = (f64::from(points[seg].0), points[seg].1);
        let (xb, yb) = (f64::from(points[seg + 1].0), points[seg + 1].1);
        total += ya + (yb - ya) * (x - xa) / (xb - xa);
    }
    total * h / f64::from(k1 - k0)
}

fn criterion_5() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let mut ks: BTreeSet<u32> = [0, 100].into_iter().collect();
        let extra = r.random_range(0..15);
        for _ in 0..extra {
            ks.insert(r.random_range(1..100));
        }
        let points: Vec<(u32, f64)> = ks.into_iter().map(|k| (k, r.random::<f64>())).collect();
        let got = trapezoid_eauc(&points).unwrap();
        worst = worst.max((got - riemann_oracle(&points, 1000)).abs());
    }
    outcome(
        worst <= 1e-9,
        format!("max |eauc - Riemann| over 100 curves = {worst:.2e} (tolerance 1e-9)"),
    )
}

// ---------------------------------------------------------------- criterion 6

fn dtw_recursive(a: &[f64], b: &[f64], i: usize, j: usize) -> f64 {
    let cost = (a[i] - b[j]) * (a[i] - b[j]);
    if i == 0 && j == 0 {
        return cost;
    }
    let up = if i > 0 {
        dtw_recursive(a, b, i - 1, j)
    } else {
        f64::INFINITY
    };
    let left = if j > 0 {
        dtw_recursive(a, b, i, j - 1)
    } else {
        f64::INFINITY
    };
    let diag = if i > 0 && j > 0 {
        dtw_recursive(a, b, i - 1, j - 1)
    } else {
        f64::INFINITY
    };
    cost + up.min(diag).min(left)
}

fn criterion_6() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(6);
    let mut mismatches = 0;
    for _ in 0..500 {
        let n = r.random_range(1..=6);
        let m = r.random_range(1..=6);
        let a: Vec<f64> = (0..n).map(|_| r.random_range(-3.0..3.0)).collect();
        let b: Vec<f64> = (0..m).map(|_| r.random_range(-3.0..3.0)).collect();
        if dtw_distance(&a, &b, None) != dtw_recursive(&a, &b, n - 1, m - 1) {
            mismatches += 1;
        }
    }
    outcome(
        mismatches == 0,
        format!("{mismatches}/500 pairs differ from exhaustive recursion (exact comparison)"),
    )
}

// ---------------------------------------------------------------- criterion 7

fn criterion_7() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(7);
    let mut failures = Vec::new();
    // standardized draws per Gaussian strategy: (sum z, sum z^2, count)
    let mut moments = [(0.0f64, 0.0f64, 0usize); 2];
    for case in 0..1000 {
        let d = r.random_range(5..=60);
        let n_train = r.random_range(3..=20);
        let train_series: Vec<TimeSeries> = (0..n_train)
            .map(|_| TimeSeries::new((0..d).map(|_| r.random_range(-4.0..4.0)).collect()).unwrap())
            .collect();
        let labels = (0..n_train).map(|i| i % 2).collect();
        let train = LabeledDataset::from_ids("p", Role::Train, train_series, labels).unwrap();
        let profile = fit_profile(&train);
        let series = TimeSeries::new((0..d).map(|_| r.random_range(-4.0..4.0)).collect()).unwrap();
        let map = SaliencyMap::new((0..d).map(|_| r.random::<f64>()).collect()).unwrap();
        let strategy = PerturbationStrategy::ALL[r.random_range(0..4)];
        let k = r.random_range(0..=100);
        let mask = top_k_mask(&map, k);
        let on: Vec<bool> = (0..d).map(|t| mask.indices.contains(&t)).collect();

        let mut noise = rng::substream(7, &["c7".into(), (case as u64).into()]);
        let out = perturb_series(&series, &mask, strategy, &profile, &mut noise).unwrap();
        if (0..d).any(|t| !on[t] && out.values()[t] != series.values()[t]) {
            failures.push(format!("case {case}: off-mask value changed"));
        }
        let id = perturb_series(&series, &top_k_mask(&map, 0), strategy, &profile, &mut noise).unwrap();
        if id != series {
            failures.push(format!("case {case}: k=0 is not the identity"));
        }
        let flat = perturb_series(
            &series,
            &top_k_mask(&map, 100),
            PerturbationStrategy::GlobalMean,
            &profile,
            &mut noise,
        )
        .unwrap();
        if flat.values().iter().any(|&v| v != profile.mu) {
            failures.push(format!("case {case}: k=100 global mean is not constant"));
        }
        if strategy.is_stochastic() {
            let slot = usize::from(strategy == PerturbationStrategy::GlobalGaussian);
            for &t in &mask.indices {
                let (mu, var) = match strategy {
                    PerturbationStrategy::LocalGaussian => (profile.mu_t[t], profile.sigma2_t[t]),
                    _ => (profile.mu, profile.sigma2),
                };
                let z = (out.values()[t] - mu) / var.sqrt();
                moments[slot].0 += z;
                moments[slot].1 += z * z;
                moments[slot].2 += 1;
            }
        }
    }
    let mut stats = Vec::new();
    for (name, (s, s2, n)) in ["local-gaussian", "global-gaussian"].iter().zip(moments) {
        let n_f = n as f64;
        let mean = s / n_f;
        let var = s2 / n_f - mean * mean;
        // standard normal: sd(mean) = 1/sqrt(n), sd(variance) ~ sqrt(2/n)
        let mean_ok = mean.abs() <= 4.0 / n_f.sqrt();
        let var_ok = (var - 1.0).abs() <= 4.0 * (2.0 / n_f).sqrt();
        if !(mean_ok && var_ok) {
            failures.push(format!(
                "{name}: standardized mean {mean:.4}, variance {var:.4} over {n} draws"
            ));
        }
        stats.push(format!("{name} z-mean {mean:+.4} z-var {var:.4} (n={n})"));
    }
    let detail = if failures.is_empty() {
        format!("1000 triples: off-mask, k=0, k=100 checks clean; {}", stats.join("; "))
    } else {
        failures.join("; ")
    };
    outcome(failures.is_empty(), detail)
}

// ---------------------------------------------------------------- criterion 8

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        r#"
seed = 11
methods = ["oracle", "ridge-saliency", "occlusion"]
k_grid = [0, 20, 40, 60, 80, 100]
gaussian_repeats = 2
referees = [
  { kind = "one-nn-dtw", window = 3 },
  { kind = "rocket-lite", num_kernels = 100 },
  { kind = "ridge-raw" },
]

[[datasets]]
generator = "PseudoPeriodic"
region = "rare-time"
length = 30
n_train = 80
n_test = 40
"#,
    )
    .unwrap();
    let run = |workers: &str, out: &Path| {
        let status = Command::new(env!("CARGO_BIN_EXE_expower"))
            .arg("eval")
            .arg(&config)
            .arg("--out")
            .arg(out)
            .env("EXPOWER_WORKERS", workers)
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        std::fs::read(out.join("RT_PseudoPeriodic/power.csv")).unwrap()
    };
    let a = run("1", &dir.path().join("a"));
    let b = run("4", &dir.path().join("b"));
    let c = run("1", &dir.path().join("c"));
    outcome(
        a == b && a == c && !a.is_empty(),
        format!(
            "power.csv with 1, 4 and again 1 workers: {} ({} bytes)",
            if a == b && a == c {
                "byte-identical"
            } else {
                "DIFFERENT"
            },
            a.len()
        ),
    )
}

// ---------------------------------------------------------------- criterion 9

fn criterion_9() -> Outcome {
    let series = (0..10)
        .map(|i| TimeSeries::new(vec![i as f64, (i % 2) as f64, 0.5]).unwrap())
        .collect();
    let toy = LabeledDataset::from_ids("toy", Role::Train, series, (0..10).map(|i| i % 2).collect()).unwrap();
    let base = RefereeSpec::ridge_raw().train(&toy, 0).unwrap();
    let admitted = |accs: &[f64]| -> Result<Vec<f64>, Error> {
        let cands = accs
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                let mut r = base.clone().with_id(format!("r{i}"));
                r.holdout_accuracy = Some(a);
                r
            })
            .collect();
        select_referees(cands, 2).map(|c| c.members.iter().map(|m| m.holdout_accuracy.unwrap()).collect())
    };
    let ex1 = admitted(&[1.0, 1.0, 0.85]).ok() == Some(vec![1.0, 1.0]);
    let ex2 = admitted(&[0.6, 0.5, 0.4]).ok() == Some(vec![0.6, 0.5]);
    let ex3 = matches!(admitted(&[0.4, 0.45]), Err(Error::EmptyCommittee(ref log)) if log.iter().all(|d| !d.admitted));
    let threshold = gate(
        &[
            ("a".into(), 1.0, None),
            ("b".into(), 1.0, None),
            ("c".into(), 0.85, None),
        ],
        2,
    )[0]
    .threshold;
    outcome(
        ex1 && ex2 && ex3 && threshold == 0.9,
        format!(
            "(1.0,1.0,0.85)->{{1.0,1.0}} at threshold {threshold}: {ex1}; (0.6,0.5,0.4)->{{0.6,0.5}}: {ex2}; \
             (0.4,0.45)->empty committee: {ex3}"
        ),
    )
}

// --------------------------------------------------------------------- driver

fn main() {
    let selected: BTreeSet<u32> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .filter_map(|a| a.parse().ok())
        .collect();
    let wanted = |id: u32| selected.is_empty() || selected.contains(&id);

    let mut results: Vec<(u32, Outcome, f64)> = Vec::new();
    let mut record = |id: u32, f: &mut dyn FnMut() -> Outcome| {
        if wanted(id) {
            let t = Instant::now();
            let o = f();
            results.push((id, o, t.elapsed().as_secs_f64()));
        }
    };
    record(1, &mut criterion_1);
    if wanted(2) || wanted(3) || wanted(4) {
        println!("running the synthetic suite (10 datasets)");
        let t = Instant::now();
        let runs = suite_runs();
        println!("    suite finished in {:.0}s", t.elapsed().as_secs_f64());
        record(2, &mut || criterion_2(&runs));
        record(3, &mut || criterion_3(&runs));
        record(4, &mut || criterion_4(&runs));
    }
    record(5, &mut criterion_5);
    record(6, &mut criterion_6);
    record(7, &mut criterion_7);
    record(8, &mut criterion_8);
    record(9, &mut criterion_9);

    println!();
    let mut unexpected = 0;
    results.sort_by_key(|r| r.0);
    for (id, o, secs) in &results {
        let known = KNOWN_SHORTFALLS.iter().find(|k| k.0 == *id);
        let tag = match (o.pass, known) {
            (true, _) => "PASS",
            (false, Some(_)) => "FAIL (known shortfall)",
            (false, None) => {
                unexpected += 1;
                "FAIL"
            }
        };
        println!("criterion {id}: {tag} [{secs:.1}s] {}", o.detail);
        if let (false, Some((_, why))) = (o.pass, known) {
            println!("      reason: {why}");
        }
    }
    let passed = results.iter().filter(|r| r.1.pass).count();
    println!(
        "\nacceptance: {passed}/{} criteria pass, {unexpected} unexpected failure(s)",
        results.len()
    );
    if unexpected > 0 {
        std::process::exit(1);
    }
}
