//! The `synth`, `eval` and `report` subcommands.

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use expower_core::evaluate::{read_power_csv, write_results, PowerRow};
use expower_core::{
    generate_dataset, load_ucr_tsv, oracle_explanation, run_evaluation, EvalConfig, EvalInput, GeneratorKind,
    GroundTruthMask, LabeledDataset, Role, SalientRegionKind, SyntheticSpec,
};

use crate::config::{split_list, DatasetPlan, DatasetSource, Overrides, ResolvedConfig, RunConfig};
use crate::plot::write_curve_charts;
use crate::report::{power_table, render_report};
use crate::{worker_count, UsageError};

#[derive(Debug, Parser)]
#[command(
    name = "expower",
    version,
    about = "Rank saliency explanations for time series classifiers by explanation power"
)]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic datasets with ground-truth masks.
    Synth(SynthArgs),
    /// Run an evaluation described by a TOML config.
    Eval(EvalArgs),
    /// Render power tables (and charts) from a results directory.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// CAR, NARMA, Harmonic, PseudoPeriodic, GaussianProcess, or all.
    #[arg(long, default_value = "all")]
    pub generator: String,
    /// small-middle, rare-time, or all.
    #[arg(long, default_value = "all")]
    pub region: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long)]
    pub length: Option<usize>,
    #[arg(long)]
    pub n_train: Option<usize>,
    #[arg(long)]
    pub n_test: Option<usize>,
    #[arg(long)]
    pub mu_shift: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// TOML run configuration.
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated thresholds, e.g. 0,25,50,75,100.
    #[arg(long)]
    pub k_grid: Option<String>,
    /// Comma-separated strategy names.
    #[arg(long)]
    pub strategies: Option<String>,
    /// Comma-separated referee ids, e.g. 1nn-dtw-w5,ridge-raw.
    #[arg(long)]
    pub referees: Option<String>,
    /// Also write accuracy-vs-k SVG charts.
    #[arg(long)]
    pub plots: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    pub dir: PathBuf,
    #[arg(long)]
    pub plots: bool,
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Synth(a) => {
            for p in synth(&a)? {
                println!("{}", p.display());
            }
        }
        Command::Eval(a) => {
            eval(&a)?;
        }
        Command::Report(a) => print!("{}", render_report(&a.dir, a.plots)?),
    }
    Ok(())
}

fn parse_choice<T: std::str::FromStr<Err = expower_core::Error> + Copy>(s: &str, all: &[T]) -> anyhow::Result<Vec<T>> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(all.to_vec());
    }
    s.parse::<T>()
        .map(|v| vec![v])
        .map_err(|e| UsageError(e.to_string()).into())
}

/// Write `<name>_TRAIN.tsv`, `<name>_TEST.tsv`, `<name>_MASK.csv` and
/// `<name>_ORACLE.csv` for each requested generator and region.
pub fn synth(a: &SynthArgs) -> anyhow::Result<Vec<PathBuf>> {
    let generators = parse_choice(&a.generator, &GeneratorKind::ALL)?;
    let regions = parse_choice(&a.region, &SalientRegionKind::ALL)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("cannot create {}", a.out.display()))?;
    let mut written = Vec::new();
    for &region in &regions {
        for &generator in &generators {
            let mut spec = SyntheticSpec::new(generator, region, a.seed);
            if let Some(v) = a.length {
                spec.length = v;
            }
            if let Some(v) = a.n_train {
                spec.n_train = v;
            }
            if let Some(v) = a.n_test {
                spec.n_test = v;
            }
            if let Some(v) = a.mu_shift {
                spec.mu_shift = v;
            }
            spec.validate().map_err(|e| UsageError(e.to_string()))?;
            let (train, test, mask) = generate_dataset(&spec)?;
            let name = spec.name();
            let paths = [
                a.out.join(format!("{name}_TRAIN.tsv")),
                a.out.join(format!("{name}_TEST.tsv")),
                a.out.join(format!("{name}_MASK.csv")),
                a.out.join(format!("{name}_ORACLE.csv")),
            ];
            train.write_ucr_tsv(&paths[0])?;
            test.write_ucr_tsv(&paths[1])?;
            mask.save(&paths[2])?;
            oracle_explanation(&mask, test.len()).save(&paths[3])?;
            written.extend(paths);
        }
    }
    Ok(written)
}

/// Result of one dataset of an `eval` run.
#[derive(Debug, Clone)]
pub struct EvalSummary {
    pub name: String,
    pub dir: PathBuf,
    pub committee: Vec<String>,
    pub power: Vec<PowerRow>,
}

pub fn eval(a: &EvalArgs) -> anyhow::Result<Vec<EvalSummary>> {
    let (cfg, text) = RunConfig::load(&a.config)?;
    let base = a.config.parent().unwrap_or(Path::new("."));
    let parse_ks = |s: &str| -> anyhow::Result<Vec<u32>> {
        split_list(s)
            .iter()
            .map(|k| {
                k.parse::<u32>()
                    .map_err(|_| UsageError(format!("bad k value {k:?} in --k-grid")).into())
            })
            .collect()
    };
    let overrides = Overrides {
        seed: a.seed,
        out: a.out.clone(),
        k_grid: a.k_grid.as_deref().map(parse_ks).transpose()?,
        strategies: a.strategies.as_deref().map(split_list),
        referees: a.referees.as_deref().map(split_list),
        plots: a.plots,
    };
    let resolved = cfg.resolve(base, &overrides)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count()?)
        .build()
        .context("cannot start worker pool")?;

    let mut summaries = Vec::new();
    for plan in &resolved.datasets {
        let summary = pool
            .install(|| eval_dataset(&resolved, plan, &a.config, &text))
            .with_context(|| format!("dataset {}", plan.name))?;
        println!(
            "\n{}  (committee: {})\n\n{}",
            summary.name,
            summary.committee.join(", "),
            power_table(&summary.power)
        );
        summaries.push(summary);
    }
    println!("results written to {}", resolved.out.display());
    Ok(summaries)
}

fn load_plan(
    plan: &DatasetPlan,
    z_normalize: bool,
) -> anyhow::Result<(LabeledDataset, LabeledDataset, Option<GroundTruthMask>)> {
    let (train, test, mask) = match &plan.source {
        DatasetSource::Files { train, test, mask } => {
            let tr = load_ucr_tsv(train, Role::Train)?;
            let te = load_ucr_tsv(test, Role::Test)?;
            let m = mask.as_ref().map(GroundTruthMask::load).transpose()?;
            (tr, te, m)
        }
        DatasetSource::Synthetic(spec) => {
            let (tr, te, m) = generate_dataset(spec)?;
            (tr, te, Some(m))
        }
    };
    if z_normalize {
        Ok((train.z_normalized(), test.z_normalized(), mask))
    } else {
        Ok((train, test, mask))
    }
}

fn eval_dataset(
    r: &ResolvedConfig,
    plan: &DatasetPlan,
    config_path: &Path,
    config_text: &str,
) -> anyhow::Result<EvalSummary> {
    let (train, test, mask) = load_plan(plan, r.z_normalize)?;
    if train.label_names() != test.label_names() {
        log::warn!(
            "train labels {:?} and test labels {:?} differ; labels are matched by text",
            train.label_names(),
            test.label_names()
        );
    }
    let eval_config = EvalConfig {
        referees: r.referees.clone(),
        strategies: r.strategies.clone(),
        k_grid: r.k_grid.clone(),
        seed: r.seed,
        gaussian_repeats: r.gaussian_repeats,
        methods: r.methods_for(plan, test.series_len()),
        include_random: r.include_random,
    };
    let outcome = run_evaluation(
        EvalInput {
            train: &train,
            test: &test,
            mask: mask.as_ref(),
        },
        &eval_config,
    )?;

    let dir = r.out.join(&plan.name);
    let source = match &plan.source {
        DatasetSource::Files { train, test, mask } => json!({
            "train": train, "test": test, "mask": mask,
        }),
        DatasetSource::Synthetic(spec) => json!({ "synthetic": spec }),
    };
    let meta = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "config_file": config_path,
        "config": config_text,
        "dataset": {
            "name": plan.name,
            "source": source,
            "explanations": plan.explanations,
            "n_train": train.len(),
            "n_test": test.len(),
            "length": test.series_len(),
            "classes": train.label_names(),
            "z_normalized": r.z_normalize,
        },
    });
    write_results(&dir, &outcome, meta)?;
    if r.plots {
        write_curve_charts(&dir, &outcome.curves)?;
    }
    Ok(EvalSummary {
        name: plan.name.clone(),
        committee: outcome.committee.clone(),
        power: read_power_csv(dir.join("power.csv"))?,
        dir,
    })
}
