//! Random convolutional kernel features with a ridge classifier on top.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng;

use super::ridge::{argmax, default_alphas, fit_ridge_cv, one_vs_rest_targets, RidgeFit};

const KERNEL_LENGTHS: [usize; 3] = [7, 9, 11];

#[derive(Debug, Clone)]
pub struct Kernel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub dilation: usize,
    pub padding: usize,
}

impl Kernel {
    pub fn random(series_len: usize, rng: &mut rng::StreamRng) -> Self {
        let len = KERNEL_LENGTHS[rng.random_range(0..KERNEL_LENGTHS.len())];
        let mut weights: Vec<f64> = (0..len).map(|_| StandardNormal.sample(rng)).collect();
        let mean = weights.iter().sum::<f64>() / len as f64;
        weights.iter_mut().for_each(|w| *w -= mean);
        let bias = rng.random_range(-1.0..1.0);
        let max_exp = if series_len > 1 {
            ((series_len - 1) as f64 / (len - 1) as f64).log2().max(0.0)
        } else {
            0.0
        };
        let dilation = 2f64.powf(rng.random_range(0.0..=max_exp)).floor() as usize;
        let dilation = dilation.max(1);
        let padding = if rng.random_bool(0.5) {
            (len - 1) * dilation / 2
        } else {
            0
        };
        Kernel {
            weights,
            bias,
            dilation,
            padding,
        }
    }

    /// (proportion of positive outputs, max output) of the dilated convolution.
    pub fn features(&self, x: &[f64]) -> (f64, f64) {
        let d = x.len() as isize;
        let span = ((self.weights.len() - 1) * self.dilation) as isize;
        let out_len = d + 2 * self.padding as isize - span;
        if out_len <= 0 {
            return (0.0, self.bias);
        }
        let mut positive = 0usize;
        let mut max = f64::NEG_INFINITY;
        for i in 0..out_len {
            let mut sum = self.bias;
            let mut idx = i - self.padding as isize;
            for w in &self.weights {
                if idx >= 0 && idx < d {
                    sum += w * x[idx as usize];
                }
                idx += self.dilation as isize;
            }
            if sum > 0.0 {
                positive += 1;
            }
            if sum > max {
                max = sum;
            }
        }
        (positive as f64 / out_len as f64, max)
    }
}

#[derive(Debug, Clone)]
pub struct RocketClassifier {
    kernels: Vec<Kernel>,
    feature_mean: Vec<f64>,
    feature_scale: Vec<f64>,
    ridge: RidgeFit,
}

impl RocketClassifier {
    pub fn fit(train: &LabeledDataset, num_kernels: usize, seed: u64) -> Result<Self> {
        if num_kernels == 0 {
            return Err(Error::InvalidInput("rocket-lite needs at least one kernel".to_string()));
        }
        let mut rng = rng::substream(seed, &["rocket-kernels".into()]);
        let d = train.series_len();
        let kernels: Vec<Kernel> = (0..num_kernels).map(|_| Kernel::random(d, &mut rng)).collect();

        let n = train.len();
        let p = 2 * num_kernels;
        let rows: Vec<Vec<f64>> = train.series().iter().map(|s| transform(&kernels, s.values())).collect();
        let mut feature_mean = vec![0.0; p];
        for r in &rows {
            for (m, v) in feature_mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        feature_mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut feature_scale = vec![0.0; p];
        for r in &rows {
            for ((s, v), m) in feature_scale.iter_mut().zip(r).zip(&feature_mean) {
                *s += (v - m).powi(2);
            }
        }
        feature_scale.iter_mut().for_each(|s| {
            let sd = (*s / n as f64).sqrt();
            *s = if sd > 0.0 { sd } else { 1.0 };
        });

        let x = DMatrix::from_fn(n, p, |i, j| (rows[i][j] - feature_mean[j]) / feature_scale[j]);
        let y = one_vs_rest_targets(train.labels(), train.num_classes());
        let ridge = fit_ridge_cv(&x, &y, &default_alphas(), true)?;
        Ok(RocketClassifier {
            kernels,
            feature_mean,
            feature_scale,
            ridge,
        })
    }

    pub fn num_kernels(&self) -> usize {
        self.kernels.len()
    }

    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        let mut f = transform(&self.kernels, x);
        for ((v, m), s) in f.iter_mut().zip(&self.feature_mean).zip(&self.feature_scale) {
            *v = (*v - m) / s;
        }
        self.ridge.predict_row(&f)
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.scores(x))
    }
}

fn transform(kernels: &[Kernel], x: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * kernels.len());
    for k in kernels {
        let (ppv, max) = k.features(x);
        out.push(ppv);
        out.push(max);
    }
    out
}
