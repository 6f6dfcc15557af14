//! Replacement of explanation-selected time steps with training statistics.

use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{LabeledDataset, TimeSeries};
use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};
use crate::saliency::{top_k_mask, ExplanationSet, TopKMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationStrategy {
    LocalMean,
    LocalGaussian,
    GlobalMean,
    GlobalGaussian,
}

impl PerturbationStrategy {
    pub const ALL: [PerturbationStrategy; 4] = [
        PerturbationStrategy::LocalMean,
        PerturbationStrategy::LocalGaussian,
        PerturbationStrategy::GlobalMean,
        PerturbationStrategy::GlobalGaussian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PerturbationStrategy::LocalMean => "local-mean",
            PerturbationStrategy::LocalGaussian => "local-gaussian",
            PerturbationStrategy::GlobalMean => "global-mean",
            PerturbationStrategy::GlobalGaussian => "global-gaussian",
        }
    }

    pub fn id(self) -> u64 {
        self as u64
    }

    pub fn is_stochastic(self) -> bool {
        matches!(
            self,
            PerturbationStrategy::LocalGaussian | PerturbationStrategy::GlobalGaussian
        )
    }
}

impl fmt::Display for PerturbationStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PerturbationStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "localmean" => Ok(PerturbationStrategy::LocalMean),
            "localgaussian" => Ok(PerturbationStrategy::LocalGaussian),
            "globalmean" => Ok(PerturbationStrategy::GlobalMean),
            "globalgaussian" => Ok(PerturbationStrategy::GlobalGaussian),
            _ => Err(Error::InvalidInput(format!(
                "unknown strategy {s:?}; valid: local-mean, local-gaussian, global-mean, global-gaussian"
            ))),
        }
    }
}

/// Per-step and pooled mean/variance of the training data.
///
/// Variances are unbiased: per step over `N - 1`, pooled over `d * N - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationProfile {
    pub mu_t: Vec<f64>,
    pub sigma2_t: Vec<f64>,
    pub mu: f64,
    pub sigma2: f64,
}

impl PerturbationProfile {
    pub fn len(&self) -> usize {
        self.mu_t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu_t.is_empty()
    }
}

pub fn fit_profile(train: &LabeledDataset) -> PerturbationProfile {
    let n = train.len();
    let d = train.series_len();
    let mut mu_t = vec![0.0; d];
    for s in train.series() {
        for (acc, v) in mu_t.iter_mut().zip(s.values()) {
            *acc += v;
        }
    }
    mu_t.iter_mut().for_each(|m| *m /= n as f64);
    let mu = train.series().iter().flat_map(|s| s.values()).sum::<f64>() / (n * d) as f64;

    if n < 2 {
        log::warn!(
            "profile of {:?} fitted on a single series; variances set to 0",
            train.name()
        );
        return PerturbationProfile {
            mu_t,
            sigma2_t: vec![0.0; d],
            mu,
            sigma2: 0.0,
        };
    }

    let mut sigma2_t = vec![0.0; d];
    let mut pooled = 0.0;
    for s in train.series() {
        for (i, v) in s.values().iter().enumerate() {
            sigma2_t[i] += (v - mu_t[i]).powi(2);
            pooled += (v - mu).powi(2);
        }
    }
    sigma2_t.iter_mut().for_each(|s| *s /= (n - 1) as f64);
    PerturbationProfile {
        mu_t,
        sigma2_t,
        mu,
        sigma2: pooled / (n * d - 1) as f64,
    }
}

/// Replace the masked steps of one series according to `strategy`.
pub fn perturb_series(
    series: &TimeSeries,
    mask: &TopKMask,
    strategy: PerturbationStrategy,
    profile: &PerturbationProfile,
    rng: &mut StreamRng,
) -> Result<TimeSeries> {
    if profile.len() != series.len() {
        return Err(Error::dimension("profile length", series.len(), profile.len()));
    }
    let mut values = series.values().to_vec();
    perturb_values(&mut values, &mask.indices, strategy, profile, rng)?;
    TimeSeries::new(values)
}

/// In-place variant over raw values; indices must be in range.
pub(crate) fn perturb_values(
    values: &mut [f64],
    indices: &[usize],
    strategy: PerturbationStrategy,
    profile: &PerturbationProfile,
    rng: &mut StreamRng,
) -> Result<()> {
    if let Some(&bad) = indices.iter().find(|&&i| i >= values.len()) {
        return Err(Error::dimension("mask index", format!("< {}", values.len()), bad));
    }
    for &t in indices {
        values[t] = match strategy {
            PerturbationStrategy::LocalMean => profile.mu_t[t],
            PerturbationStrategy::GlobalMean => profile.mu,
            PerturbationStrategy::LocalGaussian => {
                let z: f64 = StandardNormal.sample(rng);
                profile.mu_t[t] + profile.sigma2_t[t].sqrt() * z
            }
            PerturbationStrategy::GlobalGaussian => {
                let z: f64 = StandardNormal.sample(rng);
                profile.mu + profile.sigma2.sqrt() * z
            }
        };
    }
    Ok(())
}

/// Substream for instance `i` at threshold `k`; mean strategies never draw from it.
pub fn noise_stream(
    seed: u64,
    method: &str,
    strategy: PerturbationStrategy,
    k: u32,
    instance: usize,
    repeat: u32,
) -> StreamRng {
    rng::substream(
        seed,
        &[
            "perturb".into(),
            method.into(),
            strategy.id().into(),
            k.into(),
            instance.into(),
            repeat.into(),
        ],
    )
}

/// Perturb every test instance under its own explanation's top-k mask.
pub fn perturb_test_set(
    test: &LabeledDataset,
    explanations: &ExplanationSet,
    k: u32,
    strategy: PerturbationStrategy,
    profile: &PerturbationProfile,
    seed: u64,
) -> Result<LabeledDataset> {
    perturb_test_set_repeat(test, explanations, k, strategy, profile, seed, 0)
}

/// As [`perturb_test_set`], with a repeat index feeding the noise substreams.
pub fn perturb_test_set_repeat(
    test: &LabeledDataset,
    explanations: &ExplanationSet,
    k: u32,
    strategy: PerturbationStrategy,
    profile: &PerturbationProfile,
    seed: u64,
    repeat: u32,
) -> Result<LabeledDataset> {
    if k > 100 {
        return Err(Error::InvalidInput(format!("threshold k={k} exceeds 100")));
    }
    explanations.check_shape(test.len(), test.series_len())?;
    if profile.len() != test.series_len() {
        return Err(Error::dimension("profile length", test.series_len(), profile.len()));
    }
    let series = test
        .series()
        .par_iter()
        .zip(explanations.maps().par_iter())
        .enumerate()
        .map(|(i, (s, map))| {
            let mask = top_k_mask(map, k);
            let mut rng = noise_stream(seed, &explanations.method_name, strategy, k, i, repeat);
            perturb_series(s, &mask, strategy, profile, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    test.with_series(series)
}
