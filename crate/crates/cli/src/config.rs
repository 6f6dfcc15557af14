//! Run configuration: a TOML file plus command-line overrides.
//!
//! ```toml
//! seed = 0
//! out = "results"
//! strategies = ["local-mean", "global-gaussian"]
//! k_grid = [0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100]
//! gaussian_repeats = 1
//! z_normalize = false
//! methods = ["oracle", "ridge-saliency", "occlusion"]
//!
//! [[datasets]]
//! train = "data/GunPoint_TRAIN.tsv"
//! test = "data/GunPoint_TEST.tsv"
//! explanations = ["expl/SHAP.csv"]
//!
//! [[datasets]]
//! generator = "CAR"
//! region = "small-middle"
//!
//! [[referees]]
//! kind = "one-nn-dtw"
//! window = 5
//!
//! [[occlusion]]
//! name = "Occlusion-weak"
//! referee = { kind = "rocket-lite", num_kernels = 10 }
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use expower_core::{
    GeneratorKind, KGrid, MethodSource, OcclusionConfig, OcclusionSource, PerturbationStrategy, RefereeSpec,
    SalientRegionKind, SyntheticSpec,
};

use crate::UsageError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub strategies: Option<Vec<String>>,
    #[serde(default)]
    pub k_grid: Option<Vec<u32>>,
    #[serde(default = "one")]
    pub gaussian_repeats: u32,
    #[serde(default)]
    pub z_normalize: bool,
    #[serde(default = "yes")]
    pub include_random: bool,
    #[serde(default)]
    pub plots: bool,
    /// Adds the ten default synthetic datasets.
    #[serde(default)]
    pub synthetic_suite: bool,
    /// Built-in method names: random, oracle, ridge-saliency, occlusion.
    #[serde(default)]
    pub methods: Vec<String>,
    #[serde(default)]
    pub datasets: Vec<DatasetEntry>,
    #[serde(default)]
    pub referees: Option<Vec<RefereeSpec>>,
    #[serde(default)]
    pub occlusion: Vec<OcclusionEntry>,
}

fn default_out() -> PathBuf {
    PathBuf::from("results")
}

fn one() -> u32 {
    1
}

fn yes() -> bool {
    true
}

/// Either a pair of UCR TSV files or a synthetic generator.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub name: Option<String>,
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    /// One line of 0/1 values.
    pub mask: Option<PathBuf>,
    #[serde(default)]
    pub explanations: Vec<PathBuf>,
    /// Replace explanation weights by their magnitudes.
    #[serde(default)]
    pub absolutize: bool,
    pub generator: Option<String>,
    pub region: Option<String>,
    pub length: Option<usize>,
    pub n_train: Option<usize>,
    pub n_test: Option<usize>,
    pub mu_shift: Option<f64>,
    /// Generator seed; defaults to the master seed.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OcclusionEntry {
    #[serde(default = "occlusion_name")]
    pub name: String,
    pub window: Option<usize>,
    pub stride: Option<usize>,
    pub strategy: Option<String>,
    /// Dedicated source classifier; the strongest committee member otherwise.
    pub referee: Option<RefereeSpec>,
}

fn occlusion_name() -> String {
    "Occlusion".to_string()
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub k_grid: Option<Vec<u32>>,
    pub strategies: Option<Vec<String>>,
    pub referees: Option<Vec<String>>,
    pub plots: bool,
}

#[derive(Debug, Clone)]
pub enum DatasetSource {
    Files {
        train: PathBuf,
        test: PathBuf,
        mask: Option<PathBuf>,
    },
    Synthetic(SyntheticSpec),
}

#[derive(Debug, Clone)]
pub struct DatasetPlan {
    pub name: String,
    pub source: DatasetSource,
    pub explanations: Vec<PathBuf>,
    pub absolutize: bool,
}

/// A fully checked configuration.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub strategies: Vec<PerturbationStrategy>,
    pub k_grid: KGrid,
    pub gaussian_repeats: u32,
    pub z_normalize: bool,
    pub include_random: bool,
    pub plots: bool,
    pub referees: Vec<RefereeSpec>,
    pub builtin_methods: Vec<MethodSource>,
    pub occlusions: Vec<OcclusionPlan>,
    pub datasets: Vec<DatasetPlan>,
}

#[derive(Debug, Clone)]
pub struct OcclusionPlan {
    pub name: String,
    pub referee: Option<RefereeSpec>,
    pub window: Option<usize>,
    pub stride: Option<usize>,
    pub strategy: Option<PerturbationStrategy>,
}

impl ResolvedConfig {
    /// Built-in methods for series of length `d`; explanation files come after.
    pub fn methods_for(&self, plan: &DatasetPlan, d: usize) -> Vec<MethodSource> {
        let mut out = self.builtin_methods.clone();
        for occ in &self.occlusions {
            let default = OcclusionConfig::for_length(d);
            out.push(MethodSource::Occlusion {
                name: occ.name.clone(),
                source: match &occ.referee {
                    Some(spec) => OcclusionSource::Referee(spec.clone()),
                    None => OcclusionSource::StrongestMember,
                },
                config: Some(OcclusionConfig {
                    window: occ.window.unwrap_or(default.window),
                    stride: occ.stride.unwrap_or(default.stride),
                    strategy: occ.strategy.unwrap_or(default.strategy),
                }),
            });
        }
        out.extend(plan.explanations.iter().map(|p| MethodSource::File {
            path: p.clone(),
            absolutize: plan.absolutize,
        }));
        out
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        toml::from_str(text).map_err(|e| UsageError(format!("invalid config: {e}")).into())
    }

    pub fn load(path: &Path) -> anyhow::Result<(Self, String)> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg = Self::parse(&text).with_context(|| format!("in {}", path.display()))?;
        Ok((cfg, text))
    }

    pub fn resolve(&self, base: &Path, o: &Overrides) -> anyhow::Result<ResolvedConfig> {
        let seed = o.seed.unwrap_or(self.seed);
        let out = o.out.clone().unwrap_or_else(|| base.join(&self.out));

        let strategies = match o.strategies.as_ref().or(self.strategies.as_ref()) {
            Some(names) => names
                .iter()
                .map(|s| s.parse::<PerturbationStrategy>().map_err(|e| UsageError(e.to_string())))
                .collect::<Result<Vec<_>, _>>()?,
            None => PerturbationStrategy::ALL.to_vec(),
        };
        if strategies.is_empty() {
            bail!(UsageError("at least one strategy is required".to_string()));
        }
        let k_grid = match o.k_grid.as_ref().or(self.k_grid.as_ref()) {
            Some(ks) => KGrid::new(ks.clone()).map_err(|e| UsageError(e.to_string()))?,
            None => KGrid::default(),
        };

        let mut referees = self.referees.clone().unwrap_or_else(RefereeSpec::builtins);
        if let Some(ids) = &o.referees {
            referees = ids.iter().map(|id| referee_from_id(id)).collect::<Result<_, _>>()?;
        }
        if referees.is_empty() {
            bail!(UsageError("at least one referee is required".to_string()));
        }

        let mut builtin_methods = Vec::new();
        for m in &self.methods {
            builtin_methods.push(builtin_method(m)?);
        }
        let mut occlusions = Vec::new();
        for occ in &self.occlusion {
            let strategy = occ
                .strategy
                .as_deref()
                .map(str::parse::<PerturbationStrategy>)
                .transpose()
                .map_err(|e| UsageError(e.to_string()))?;
            occlusions.push(OcclusionPlan {
                name: occ.name.clone(),
                referee: occ.referee.clone(),
                window: occ.window,
                stride: occ.stride,
                strategy,
            });
        }

        let mut datasets = Vec::new();
        for (i, d) in self.datasets.iter().enumerate() {
            datasets.push(resolve_dataset(d, i, base, seed)?);
        }
        if self.synthetic_suite {
            for spec in SyntheticSpec::suite(seed) {
                datasets.push(DatasetPlan {
                    name: spec.name(),
                    source: DatasetSource::Synthetic(spec),
                    explanations: Vec::new(),
                    absolutize: false,
                });
            }
        }
        if datasets.is_empty() {
            bail!(UsageError("the config lists no datasets".to_string()));
        }
        let mut names: Vec<&str> = datasets.iter().map(|d| d.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            bail!(UsageError(format!("dataset name {:?} is used twice", w[0])));
        }

        Ok(ResolvedConfig {
            seed,
            out,
            strategies,
            k_grid,
            gaussian_repeats: self.gaussian_repeats,
            z_normalize: self.z_normalize,
            include_random: self.include_random,
            plots: self.plots || o.plots,
            referees,
            builtin_methods,
            occlusions,
            datasets,
        })
    }
}

fn resolve_dataset(d: &DatasetEntry, index: usize, base: &Path, seed: u64) -> anyhow::Result<DatasetPlan> {
    let at = |p: &PathBuf| base.join(p);
    let explanations: Vec<PathBuf> = d.explanations.iter().map(at).collect();
    match (&d.train, &d.test, &d.generator) {
        (Some(train), Some(test), None) => {
            let name = d.name.clone().unwrap_or_else(|| {
                let stem = train.file_stem().map(|s| s.to_string_lossy().into_owned());
                stem.map(|s| s.trim_end_matches("_TRAIN").to_string())
                    .unwrap_or_else(|| format!("dataset{index}"))
            });
            Ok(DatasetPlan {
                name,
                source: DatasetSource::Files {
                    train: at(train),
                    test: at(test),
                    mask: d.mask.as_ref().map(at),
                },
                explanations,
                absolutize: d.absolutize,
            })
        }
        (None, None, Some(generator)) => {
            let generator: GeneratorKind = generator
                .parse()
                .map_err(|e: expower_core::Error| UsageError(e.to_string()))?;
            let region: SalientRegionKind = d
                .region
                .as_deref()
                .unwrap_or("small-middle")
                .parse()
                .map_err(|e: expower_core::Error| UsageError(e.to_string()))?;
            let mut spec = SyntheticSpec::new(generator, region, d.seed.unwrap_or(seed));
            if let Some(v) = d.length {
                spec.length = v;
            }
            if let Some(v) = d.n_train {
                spec.n_train = v;
            }
            if let Some(v) = d.n_test {
                spec.n_test = v;
            }
            if let Some(v) = d.mu_shift {
                spec.mu_shift = v;
            }
            spec.validate().map_err(|e| UsageError(e.to_string()))?;
            Ok(DatasetPlan {
                name: d.name.clone().unwrap_or_else(|| spec.name()),
                source: DatasetSource::Synthetic(spec),
                explanations,
                absolutize: d.absolutize,
            })
        }
        _ => bail!(UsageError(format!(
            "dataset #{} must give either `train` and `test` files or a `generator`",
            index + 1
        ))),
    }
}

pub fn builtin_method(name: &str) -> anyhow::Result<MethodSource> {
    let key: String = name
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .collect::<String>()
        .to_ascii_lowercase();
    Ok(match key.as_str() {
        "random" => MethodSource::Random,
        "oracle" => MethodSource::Oracle,
        "ridgesaliency" | "ridgesm" | "ridge" => MethodSource::RidgeSaliency,
        "occlusion" => MethodSource::occlusion(),
        _ => bail!(UsageError(format!(
            "unknown method {name:?}; built-ins: random, oracle, ridge-saliency, occlusion"
        ))),
    })
}

/// Referee from its output identifier, e.g. `1nn-dtw`, `1nn-dtw-w5`, `rocket-lite-200`.
pub fn referee_from_id(id: &str) -> anyhow::Result<RefereeSpec> {
    let id = id.trim();
    let bad = || {
        UsageError(format!(
            "unknown referee {id:?}; valid: 1nn-dtw, 1nn-dtw-w<band>, rocket-lite, rocket-lite-<kernels>, ridge-raw"
        ))
    };
    Ok(match id {
        "1nn-dtw" => RefereeSpec::one_nn_dtw(),
        "rocket-lite" => RefereeSpec::rocket_lite(1000),
        "ridge-raw" => RefereeSpec::ridge_raw(),
        _ => {
            if let Some(w) = id.strip_prefix("1nn-dtw-w") {
                RefereeSpec::OneNnDtw {
                    window: Some(w.parse().map_err(|_| bad())?),
                }
            } else if let Some(n) = id.strip_prefix("rocket-lite-") {
                RefereeSpec::rocket_lite(n.parse().map_err(|_| bad())?)
            } else {
                bail!(bad())
            }
        }
    })
}

/// Comma-separated list, ignoring blanks.
pub fn split_list(s: &str) -> Vec<String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(String::from)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_defaults() {
        let cfg = RunConfig::parse("[[datasets]]\ngenerator = \"CAR\"\n").unwrap();
        let r = cfg.resolve(Path::new("/tmp/x"), &Overrides::default()).unwrap();
        assert_eq!(r.seed, 0);
        assert_eq!(r.out, Path::new("/tmp/x/results"));
        assert_eq!(r.strategies.len(), 4);
        assert_eq!(r.k_grid.values().len(), 11);
        assert_eq!(r.referees.len(), 3);
        assert_eq!(r.datasets[0].name, "SM_CAR");
    }

    #[test]
    fn overrides_win() {
        let cfg = RunConfig::parse("seed = 3\n[[datasets]]\ngenerator = \"NARMA\"\nregion = \"rare-time\"\n").unwrap();
        let o = Overrides {
            seed: Some(9),
            k_grid: Some(vec![0, 50, 100]),
            strategies: Some(vec!["global-mean".into()]),
            referees: Some(vec!["ridge-raw".into(), "1nn-dtw-w3".into()]),
            ..Overrides::default()
        };
        let r = cfg.resolve(Path::new("."), &o).unwrap();
        assert_eq!(r.seed, 9);
        assert_eq!(r.k_grid.values(), &[0, 50, 100]);
        assert_eq!(r.strategies, vec![PerturbationStrategy::GlobalMean]);
        assert_eq!(r.referees[1], RefereeSpec::OneNnDtw { window: Some(3) });
        match &r.datasets[0].source {
            DatasetSource::Synthetic(s) => assert_eq!(s.seed, 9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::parse("bogus = 1").is_err());
        let cfg = RunConfig::parse("[[datasets]]\ngenerator = \"bogus\"\n").unwrap();
        let err = cfg.resolve(Path::new("."), &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("CAR"), "{err}");
        let cfg = RunConfig::parse("[[datasets]]\ntrain = \"a.tsv\"\n").unwrap();
        assert!(cfg.resolve(Path::new("."), &Overrides::default()).is_err());
        assert!(referee_from_id("svm").is_err());
        assert!(builtin_method("lime").is_err());
    }

    #[test]
    fn occlusion_tables_and_suite() {
        let text = r#"
synthetic_suite = true
methods = ["oracle", "RidgeSM"]
[[occlusion]]
name = "Occlusion-weak"
referee = { kind = "rocket-lite", num_kernels = 10 }
"#;
        let r = RunConfig::parse(text)
            .unwrap()
            .resolve(Path::new("."), &Overrides::default())
            .unwrap();
        assert_eq!(r.datasets.len(), 10);
        let methods = r.methods_for(&r.datasets[0], 50);
        assert_eq!(methods.len(), 3);
        assert!(matches!(
            &methods[2],
            MethodSource::Occlusion {
                source: OcclusionSource::Referee(RefereeSpec::RocketLite { num_kernels: 10 }),
                ..
            }
        ));
    }

    #[test]
    fn file_dataset_name_from_stem() {
        let cfg = RunConfig::parse("[[datasets]]\ntrain = \"d/GunPoint_TRAIN.tsv\"\ntest = \"d/GunPoint_TEST.tsv\"\n")
            .unwrap();
        let r = cfg.resolve(Path::new("/base"), &Overrides::default()).unwrap();
        assert_eq!(r.datasets[0].name, "GunPoint");
        match &r.datasets[0].source {
            DatasetSource::Files { train, .. } => assert_eq!(train, Path::new("/base/d/GunPoint_TRAIN.tsv")),
            other => panic!("{other:?}"),
        }
    }
}
