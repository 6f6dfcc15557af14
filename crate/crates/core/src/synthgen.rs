//! Synthetic two-class benchmarks with known salient regions.
//!
//! A base process generates each series; instances of class 1 get `+mu` added
//! on the salient region and class 0 gets `-mu`. The region is shared by every
//! instance of a dataset, which makes it the ground-truth explanation.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{LabeledDataset, Role, TimeSeries};
use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GeneratorKind {
    Car,
    Narma,
    Harmonic,
    PseudoPeriodic,
    GaussianProcess,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 5] = [
        GeneratorKind::Car,
        GeneratorKind::Narma,
        GeneratorKind::Harmonic,
        GeneratorKind::PseudoPeriodic,
        GeneratorKind::GaussianProcess,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::Car => "CAR",
            GeneratorKind::Narma => "NARMA",
            GeneratorKind::Harmonic => "Harmonic",
            GeneratorKind::PseudoPeriodic => "PseudoPeriodic",
            GeneratorKind::GaussianProcess => "GaussianProcess",
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "car" => Ok(GeneratorKind::Car),
            "narma" => Ok(GeneratorKind::Narma),
            "harmonic" => Ok(GeneratorKind::Harmonic),
            "pseudoperiodic" => Ok(GeneratorKind::PseudoPeriodic),
            "gaussianprocess" | "gp" => Ok(GeneratorKind::GaussianProcess),
            _ => Err(Error::InvalidInput(format!(
                "unknown generator {s:?}; valid: CAR, NARMA, Harmonic, PseudoPeriodic, GaussianProcess"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SalientRegionKind {
    /// 30% of the series, centred.
    SmallMiddle,
    /// 10% of the series at a random offset.
    RareTime,
}

impl SalientRegionKind {
    pub const ALL: [SalientRegionKind; 2] = [SalientRegionKind::SmallMiddle, SalientRegionKind::RareTime];

    pub fn percent(self) -> usize {
        match self {
            SalientRegionKind::SmallMiddle => 30,
            SalientRegionKind::RareTime => 10,
        }
    }

    pub fn fraction(self) -> f64 {
        self.percent() as f64 / 100.0
    }

    /// `floor(fraction * length)`, computed in integers.
    pub fn region_len(self, length: usize) -> usize {
        self.percent() * length / 100
    }

    pub fn short_name(self) -> &'static str {
        match self {
            SalientRegionKind::SmallMiddle => "SM",
            SalientRegionKind::RareTime => "RT",
        }
    }
}

impl FromStr for SalientRegionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "smallmiddle" | "sm" => Ok(SalientRegionKind::SmallMiddle),
            "raretime" | "rt" => Ok(SalientRegionKind::RareTime),
            _ => Err(Error::InvalidInput(format!(
                "unknown region {s:?}; valid: small-middle, rare-time"
            ))),
        }
    }
}

impl fmt::Display for SalientRegionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SalientRegionKind::SmallMiddle => f.write_str("small-middle"),
            SalientRegionKind::RareTime => f.write_str("rare-time"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub generator: GeneratorKind,
    pub region: SalientRegionKind,
    pub length: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub mu_shift: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(generator: GeneratorKind, region: SalientRegionKind, seed: u64) -> Self {
        SyntheticSpec {
            generator,
            region,
            length: 50,
            n_train: 500,
            n_test: 100,
            mu_shift: 1.0,
            seed,
        }
    }

    /// The ten default benchmarks: every region crossed with every generator.
    pub fn suite(seed: u64) -> Vec<SyntheticSpec> {
        SalientRegionKind::ALL
            .iter()
            .flat_map(|&r| GeneratorKind::ALL.iter().map(move |&g| SyntheticSpec::new(g, r, seed)))
            .collect()
    }

    /// e.g. `SM_CAR`, `RT_GaussianProcess`.
    pub fn name(&self) -> String {
        format!("{}_{}", self.region.short_name(), self.generator.name())
    }

    pub fn validate(&self) -> Result<()> {
        if self.length < 10 {
            return Err(Error::InvalidInput(format!(
                "synthetic length must be >= 10, got {}",
                self.length
            )));
        }
        if self.region.region_len(self.length) < 1 {
            return Err(Error::InvalidInput("salient region would be empty".to_string()));
        }
        if self.n_train < 2 || self.n_test < 1 {
            return Err(Error::InvalidInput("need n_train >= 2 and n_test >= 1".to_string()));
        }
        if !self.mu_shift.is_finite() {
            return Err(Error::InvalidInput("mu_shift must be finite".to_string()));
        }
        Ok(())
    }
}

/// Ground-truth salient time steps, shared by all instances of a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthMask {
    salient: Vec<bool>,
}

impl GroundTruthMask {
    pub fn new(salient: Vec<bool>) -> Result<Self> {
        if !salient.iter().any(|&b| b) {
            return Err(Error::InvalidInput(
                "ground-truth mask has no salient entries".to_string(),
            ));
        }
        Ok(GroundTruthMask { salient })
    }

    pub fn from_indices(d: usize, indices: &[usize]) -> Result<Self> {
        let mut salient = vec![false; d];
        for &i in indices {
            if i >= d {
                return Err(Error::dimension("mask index", format!("< {d}"), i));
            }
            salient[i] = true;
        }
        Self::new(salient)
    }

    pub fn len(&self) -> usize {
        self.salient.len()
    }

    pub fn is_empty(&self) -> bool {
        self.salient.is_empty()
    }

    pub fn salient(&self) -> &[bool] {
        &self.salient
    }

    pub fn count(&self) -> usize {
        self.salient.iter().filter(|&&b| b).count()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.salient
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    /// One line of comma-separated 0/1 flags.
    pub fn to_line(&self) -> String {
        let flags: Vec<&str> = self.salient.iter().map(|&b| if b { "1" } else { "0" }).collect();
        flags.join(",")
    }

    pub fn parse_line(line: &str) -> Result<Self> {
        let salient = line
            .trim()
            .split(',')
            .enumerate()
            .map(|(i, f)| match f.trim() {
                "1" => Ok(true),
                "0" => Ok(false),
                other => Err(Error::Parse {
                    path: "mask".to_string(),
                    line: 1,
                    value: format!("field {i}: {other}"),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(salient)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, format!("{}\n", self.to_line())).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let line = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
        Self::parse_line(line).map_err(|e| match e {
            Error::Parse { line, value, .. } => Error::Parse {
                path: path.display().to_string(),
                line,
                value,
            },
            other => other,
        })
    }
}

/// AR(1): `x_t = coefficient * x_{t-1} + e_t`, `e_t ~ N(0, noise_variance)`.
#[derive(Debug, Clone, Copy)]
pub struct Car {
    pub coefficient: f64,
    pub noise_variance: f64,
    /// Fixed `x_0`; `None` draws it from the stationary law.
    pub initial: Option<f64>,
}

impl Default for Car {
    fn default() -> Self {
        Car {
            coefficient: 0.9,
            noise_variance: 0.8,
            initial: None,
        }
    }
}

impl Car {
    pub fn sample(&self, length: usize, rng: &mut StreamRng) -> Vec<f64> {
        let sd = self.noise_variance.sqrt();
        let mut x = match self.initial {
            Some(v) => v,
            None => {
                let stationary = self.noise_variance / (1.0 - self.coefficient * self.coefficient);
                let z: f64 = StandardNormal.sample(rng);
                z * stationary.max(0.0).sqrt()
            }
        };
        let mut out = Vec::with_capacity(length);
        out.push(x);
        for _ in 1..length {
            let e: f64 = StandardNormal.sample(rng);
            x = self.coefficient * x + sd * e;
            out.push(x);
        }
        out
    }
}

/// Tenth-order NARMA:
/// `x_{t+1} = 0.3 x_t + 0.05 x_t sum_{i=0}^{9} x_{t-i} + 1.5 u_{t-9} u_t + 0.1`.
#[derive(Debug, Clone, Copy)]
pub struct Narma {
    /// Inputs are drawn from `Uniform(0, input_max)`.
    pub input_max: f64,
    /// Leading steps discarded so the output starts away from the zero state.
    pub burn_in: usize,
}

impl Default for Narma {
    fn default() -> Self {
        Narma {
            input_max: 0.5,
            burn_in: 50,
        }
    }
}

impl Narma {
    pub const ORDER: usize = 10;

    /// Run the recurrence over the given inputs from a zero initial state.
    /// The output has the same length as `inputs`; `x_0..x_9` are zero.
    pub fn run(inputs: &[f64]) -> Vec<f64> {
        let n = inputs.len();
        let mut x = vec![0.0; n];
        for t in (Self::ORDER - 1)..n.saturating_sub(1) {
            let window: f64 = x[t + 1 - Self::ORDER..=t].iter().sum();
            x[t + 1] = 0.3 * x[t] + 0.05 * x[t] * window + 1.5 * inputs[t + 1 - Self::ORDER] * inputs[t] + 0.1;
        }
        x
    }

    pub fn sample(&self, length: usize, rng: &mut StreamRng) -> Vec<f64> {
        let total = length + self.burn_in.max(Self::ORDER);
        let inputs: Vec<f64> = (0..total).map(|_| rng.random::<f64>() * self.input_max).collect();
        let x = Self::run(&inputs);
        x[total - length..].to_vec()
    }
}

/// `sin(2 pi f t_j)` at sorted uniform sample times over one period, plus optional noise.
#[derive(Debug, Clone, Copy)]
pub struct Periodic {
    pub frequency: f64,
    pub noise_variance: f64,
}

impl Periodic {
    pub fn harmonic() -> Self {
        Periodic {
            frequency: 1.0,
            noise_variance: 0.0,
        }
    }

    pub fn pseudo_periodic() -> Self {
        Periodic {
            frequency: 1.0,
            noise_variance: 0.3,
        }
    }

    pub fn sample(&self, length: usize, rng: &mut StreamRng) -> Vec<f64> {
        let period = 1.0 / self.frequency;
        let mut times: Vec<f64> = (0..length).map(|_| rng.random::<f64>() * period).collect();
        times.sort_by(f64::total_cmp);
        let sd = self.noise_variance.sqrt();
        times
            .into_iter()
            .map(|t| {
                let clean = (2.0 * std::f64::consts::PI * self.frequency * t).sin();
                if sd > 0.0 {
                    let e: f64 = StandardNormal.sample(rng);
                    clean + sd * e
                } else {
                    clean
                }
            })
            .collect()
    }
}

pub fn generate_base(kind: GeneratorKind, length: usize, rng: &mut StreamRng) -> Result<TimeSeries> {
    if length < 10 {
        return Err(Error::InvalidInput(format!(
            "synthetic length must be >= 10, got {length}"
        )));
    }
    let values = match kind {
        GeneratorKind::Car => Car::default().sample(length, rng),
        GeneratorKind::Narma => Narma::default().sample(length, rng),
        GeneratorKind::Harmonic => Periodic::harmonic().sample(length, rng),
        GeneratorKind::PseudoPeriodic => Periodic::pseudo_periodic().sample(length, rng),
        GeneratorKind::GaussianProcess => {
            let normal = Normal::new(0.0, 1.0).expect("unit normal");
            (0..length).map(|_| normal.sample(rng)).collect()
        }
    };
    TimeSeries::new(values)
}

/// Contiguous salient block: centred at `length / 2` for SmallMiddle, at a
/// uniformly drawn admissible offset for RareTime.
pub fn place_region(region: SalientRegionKind, length: usize, rng: &mut StreamRng) -> Result<GroundTruthMask> {
    let count = region.region_len(length);
    if count < 1 {
        return Err(Error::InvalidInput(format!(
            "region {region} on length {length} is empty"
        )));
    }
    let start = match region {
        SalientRegionKind::SmallMiddle => (length / 2).saturating_sub(count / 2),
        SalientRegionKind::RareTime => rng.random_range(0..=length - count),
    };
    let indices: Vec<usize> = (start..start + count).collect();
    GroundTruthMask::from_indices(length, &indices)
}

/// Add `mu_shift` on the mask for class 1, subtract it for class 0.
pub fn inject_class_signal(
    series: &TimeSeries,
    class: usize,
    mask: &GroundTruthMask,
    mu_shift: f64,
) -> Result<TimeSeries> {
    if mask.len() != series.len() {
        return Err(Error::dimension("mask length", series.len(), mask.len()));
    }
    let sign = match class {
        0 => -1.0,
        1 => 1.0,
        other => {
            return Err(Error::InvalidInput(format!(
                "synthetic data is binary, got class {other}"
            )))
        }
    };
    let values = series
        .values()
        .iter()
        .zip(mask.salient())
        .map(|(&v, &s)| if s { v + sign * mu_shift } else { v })
        .collect();
    TimeSeries::new(values)
}

/// Train and test sets plus the shared ground-truth mask.
pub fn generate_dataset(spec: &SyntheticSpec) -> Result<(LabeledDataset, LabeledDataset, GroundTruthMask)> {
    spec.validate()?;
    let name = spec.name();
    let mut mask_rng = rng::substream(spec.seed, &[name.as_str().into(), "mask".into()]);
    let mask = place_region(spec.region, spec.length, &mut mask_rng)?;

    let make = |role: Role, n: usize| -> Result<LabeledDataset> {
        let tag = role.to_string();
        let mut rng = rng::substream(spec.seed, &[name.as_str().into(), tag.as_str().into()]);
        let mut labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        labels.shuffle(&mut rng);
        let series = labels
            .iter()
            .map(|&class| {
                let base = generate_base(spec.generator, spec.length, &mut rng)?;
                inject_class_signal(&base, class, &mask, spec.mu_shift)
            })
            .collect::<Result<Vec<_>>>()?;
        LabeledDataset::from_ids(name.clone(), role, series, labels)
    };

    let train = make(Role::Train, spec.n_train)?;
    let test = make(Role::Test, spec.n_test)?;
    Ok((train, test, mask))
}
