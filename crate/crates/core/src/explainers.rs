//! Built-in saliency producers: sliding-window occlusion and ridge coefficients.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{LabeledDataset, TimeSeries};
use crate::error::{Error, Result};
use crate::perturb::{perturb_values, PerturbationProfile, PerturbationStrategy};
use crate::referees::TrainedReferee;
use crate::rng;
use crate::saliency::{ExplanationSet, SaliencyMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OcclusionConfig {
    pub window: usize,
    pub stride: usize,
    pub strategy: PerturbationStrategy,
}

impl OcclusionConfig {
    /// Window of one tenth of the series (at least 1), stride 1, local-mean filler.
    pub fn for_length(d: usize) -> Self {
        OcclusionConfig {
            window: (d / 10).max(1),
            stride: 1,
            strategy: PerturbationStrategy::LocalMean,
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.window == 0 || self.window > d {
            return Err(Error::InvalidInput(format!(
                "occlusion window {} must lie in [1, {d}]",
                self.window
            )));
        }
        if self.stride == 0 || self.stride > self.window {
            return Err(Error::InvalidInput(format!(
                "occlusion stride {} must lie in [1, window={}]",
                self.stride, self.window
            )));
        }
        Ok(())
    }

    /// Window start offsets; the last window always ends at `d`.
    fn starts(&self, d: usize) -> Vec<usize> {
        let mut starts: Vec<usize> = (0..=d - self.window).step_by(self.stride).collect();
        if starts.last().is_none_or(|&s| s + self.window < d) {
            starts.push(d - self.window);
        }
        starts
    }
}

/// Occlusion saliency about the referee's own prediction.
///
/// Each time step receives the mean, over the windows covering it, of the drop
/// in the score of the class predicted on the intact series. Referees without
/// continuous scores contribute 1/0 for "prediction unchanged"/"changed".
pub fn occlusion_saliency(
    referee: &TrainedReferee,
    test: &LabeledDataset,
    profile: &PerturbationProfile,
    config: &OcclusionConfig,
    seed: u64,
) -> Result<ExplanationSet> {
    let d = test.series_len();
    if referee.series_len() != d {
        return Err(Error::dimension(
            "occlusion referee input length",
            d,
            referee.series_len(),
        ));
    }
    if profile.len() != d {
        return Err(Error::dimension("profile length", d, profile.len()));
    }
    config.validate(d)?;
    let starts = config.starts(d);

    let maps = test
        .series()
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let occluded = starts
                .iter()
                .map(|&start| {
                    let mut values = s.values().to_vec();
                    let idx: Vec<usize> = (start..start + config.window).collect();
                    let mut r =
                        rng::substream(seed, &["occlusion".into(), referee.id().into(), i.into(), start.into()]);
                    perturb_values(&mut values, &idx, config.strategy, profile, &mut r)?;
                    TimeSeries::new(values)
                })
                .collect::<Result<Vec<_>>>()?;
            let drops = window_drops(referee, s, &occluded)?;

            let mut sum = vec![0.0; d];
            let mut count = vec![0usize; d];
            for (&start, drop) in starts.iter().zip(drops) {
                for t in start..start + config.window {
                    sum[t] += drop;
                    count[t] += 1;
                }
            }
            let weights = sum.iter().zip(&count).map(|(s, &c)| s / c as f64).collect();
            SaliencyMap::new(weights)
        })
        .collect::<Result<Vec<_>>>()?;
    ExplanationSet::new("Occlusion", maps)
}

fn window_drops(referee: &TrainedReferee, original: &TimeSeries, occluded: &[TimeSeries]) -> Result<Vec<f64>> {
    if let Some(base_scores) = referee.class_scores(original.values()) {
        let class = crate::referees::ridge::argmax(&base_scores);
        let base = base_scores[class];
        return Ok(occluded
            .iter()
            .map(|o| {
                let scores = referee.class_scores(o.values()).expect("scores available");
                base - scores[class]
            })
            .collect());
    }
    let class = referee.predict(original.values())?;
    let batch = LabeledDataset::new(
        "occlusion",
        crate::dataset::Role::Test,
        occluded.to_vec(),
        vec![0; occluded.len()],
        (0..referee.num_classes()).map(|c| c.to_string()).collect(),
    )?;
    let preds = referee.predict_dataset(&batch)?;
    Ok(preds.into_iter().map(|p| if p == class { 0.0 } else { 1.0 }).collect())
}

/// Magnitudes of the ridge coefficients of each instance's predicted class.
pub fn ridge_coefficient_saliency(referee: &TrainedReferee, test: &LabeledDataset) -> Result<ExplanationSet> {
    let ridge = referee.ridge().ok_or_else(|| {
        Error::InvalidInput(format!(
            "ridge saliency needs a ridge-raw referee, got {:?} ({})",
            referee.id(),
            referee.kind()
        ))
    })?;
    if referee.series_len() != test.series_len() {
        return Err(Error::dimension(
            "ridge saliency input length",
            referee.series_len(),
            test.series_len(),
        ));
    }
    let per_class: Vec<SaliencyMap> = (0..referee.num_classes())
        .map(|c| SaliencyMap::new(ridge.coefficients(c).iter().map(|w| w.abs()).collect()))
        .collect::<Result<_>>()?;
    let maps = test
        .series()
        .iter()
        .map(|s| per_class[ridge.predict(s.values())].clone())
        .collect();
    ExplanationSet::new("RidgeSM", maps)
}
