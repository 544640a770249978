//! Epoch datasets and the preprocessing / evaluation protocol run on them.

mod crossval;
mod filter;
mod folds;
mod synth;

pub use crossval::{
    crossval_accuracy, fit_model, format_mean_std, mean_std, CrossValReport, FitSpec,
};
pub use filter::{bandpass, butterworth_bandpass_sos, sosfiltfilt, Biquad};
pub use folds::{kfold, FoldPlan};
pub use synth::{synth_epochs, SynthSpec};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::models::DataMatrixPair;

/// trials × channels × samples, stored trial-major then channel then sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochDataset {
    data: Vec<f64>,
    n_trials: usize,
    n_channels: usize,
    n_samples: usize,
    labels: Vec<usize>,
    fs: f64,
    class_count: usize,
}

impl EpochDataset {
    pub fn new(
        data: Vec<f64>,
        shape: (usize, usize, usize),
        labels: Vec<usize>,
        fs: f64,
        class_count: usize,
    ) -> Result<Self> {
        let (n_trials, n_channels, n_samples) = shape;
        if n_trials == 0 || n_channels == 0 || n_samples == 0 {
            return Err(Error::InvalidData(format!("empty epoch shape {shape:?}")));
        }
        if data.len() != n_trials * n_channels * n_samples {
            return Err(Error::InvalidData(format!(
                "expected {} values for shape {shape:?}, got {}",
                n_trials * n_channels * n_samples,
                data.len()
            )));
        }
        if labels.len() != n_trials {
            return Err(Error::InvalidData(format!(
                "{} labels for {n_trials} trials",
                labels.len()
            )));
        }
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(Error::InvalidData(format!(
                "sampling rate must be positive, got {fs}"
            )));
        }
        if class_count == 0 {
            return Err(Error::InvalidData("class_count must be positive".into()));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= class_count) {
            return Err(Error::InvalidData(format!(
                "label {bad} outside [0, {class_count})"
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite samples".into()));
        }
        Ok(Self {
            data,
            n_trials,
            n_channels,
            n_samples,
            labels,
            fs,
            class_count,
        })
    }

    /// (trials, channels, samples)
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.n_trials, self.n_channels, self.n_samples)
    }

    pub fn n_trials(&self) -> usize {
        self.n_trials
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    fn offset(&self, trial: usize, channel: usize) -> usize {
        (trial * self.n_channels + channel) * self.n_samples
    }

    /// One channel of one trial.
    pub fn signal(&self, trial: usize, channel: usize) -> &[f64] {
        let o = self.offset(trial, channel);
        &self.data[o..o + self.n_samples]
    }

    /// The same recordings with new labels.
    pub fn with_labels(&self, labels: Vec<usize>) -> Result<Self> {
        Self::new(
            self.data.clone(),
            self.shape(),
            labels,
            self.fs,
            self.class_count,
        )
    }

    /// Labels permuted by a seeded shuffle; the chance-level control.
    pub fn with_shuffled_labels(&self, seed: u64) -> Result<Self> {
        let mut labels = self.labels.clone();
        labels.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        self.with_labels(labels)
    }

    /// Applies `f` to every (trial, channel) signal, producing `out_len` samples each.
    pub(crate) fn map_signals<F>(&self, out_len: usize, fs: f64, mut f: F) -> Result<Self>
    where
        F: FnMut(&[f64]) -> Vec<f64>,
    {
        let mut out = Vec::with_capacity(self.n_trials * self.n_channels * out_len);
        for trial in 0..self.n_trials {
            for ch in 0..self.n_channels {
                let y = f(self.signal(trial, ch));
                debug_assert_eq!(y.len(), out_len);
                out.extend(y);
            }
        }
        Self::new(
            out,
            (self.n_trials, self.n_channels, out_len),
            self.labels.clone(),
            fs,
            self.class_count,
        )
    }
}

/// Keeps every (fs/target_fs)-th sample. Only integer ratios are supported.
pub fn downsample(ds: &EpochDataset, target_fs: f64) -> Result<EpochDataset> {
    let ratio = ds.fs / target_fs;
    let factor = ratio.round();
    if !(target_fs > 0.0) || factor < 1.0 || (ratio - factor).abs() > 1e-9 * ratio {
        return Err(Error::NonIntegerDecimation {
            fs: ds.fs,
            target: target_fs,
        });
    }
    let factor = factor as usize;
    if factor == 1 {
        return Ok(ds.clone());
    }
    let out_len = ds.n_samples.div_ceil(factor);
    ds.map_signals(out_len, target_fs, |x| {
        x.iter().step_by(factor).copied().collect()
    })
}

/// X rows are trials laid out channel-major (all samples of channel 0, then
/// channel 1, ...); Y is the one-hot label matrix.
pub fn flatten(ds: &EpochDataset) -> Result<DataMatrixPair> {
    let width = ds.n_channels * ds.n_samples;
    let x = Mat::from_row_slice(ds.n_trials, width, &ds.data);
    DataMatrixPair::new(x, one_hot(&ds.labels, ds.class_count))
}

pub fn one_hot(labels: &[usize], class_count: usize) -> Mat {
    let mut y = Mat::zeros(labels.len(), class_count);
    for (i, &l) in labels.iter().enumerate() {
        y[(i, l)] = 1.0;
    }
    y
}

/// Inverse of [`flatten`] for the X block.
pub fn unflatten(
    x: &Mat,
    n_channels: usize,
    labels: Vec<usize>,
    fs: f64,
    class_count: usize,
) -> Result<EpochDataset> {
    if n_channels == 0 || !x.ncols().is_multiple_of(n_channels) {
        return Err(Error::ShapeMismatch(format!(
            "{} columns do not split into {n_channels} channels",
            x.ncols()
        )));
    }
    EpochDataset::new(
        crate::linalg::to_row_major(x),
        (x.nrows(), n_channels, x.ncols() / n_channels),
        labels,
        fs,
        class_count,
    )
}
