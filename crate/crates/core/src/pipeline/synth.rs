//! Seeded synthetic epochs: each class is a fixed spatial pattern carrying
//! its own sinusoid, buried in white noise.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::EpochDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub trials: usize,
    pub channels: usize,
    pub samples: usize,
    pub classes: usize,
    /// Signal-to-noise power ratio; `inf` gives noise-free trials.
    pub snr: f64,
    pub seed: u64,
    pub fs: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            trials: 120,
            channels: 8,
            samples: 200,
            classes: 2,
            snr: 1.0,
            seed: 7,
            fs: 200.0,
        }
    }
}

/// Class stimulus frequencies spread evenly over 10–20 Hz.
pub fn class_frequency(class: usize, classes: usize) -> f64 {
    10.0 + 10.0 * class as f64 / (classes - 1) as f64
}

pub fn synth_epochs(spec: &SynthSpec) -> Result<EpochDataset> {
    if spec.trials == 0 || spec.channels == 0 || spec.samples == 0 {
        return Err(Error::InvalidData(
            "synthetic dimensions must be positive".into(),
        ));
    }
    if spec.classes < 2 {
        return Err(Error::InvalidData("need at least 2 classes".into()));
    }
    if !(spec.snr > 0.0) {
        return Err(Error::InvalidData(format!(
            "snr must be positive, got {}",
            spec.snr
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Spatial patterns normalized to unit mean power across channels.
    let patterns: Vec<Vec<f64>> = (0..spec.classes)
        .map(|_| {
            let p: Vec<f64> = (0..spec.channels)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let rms = (p.iter().map(|v| v * v).sum::<f64>() / p.len() as f64).sqrt();
            p.into_iter().map(|v| v / rms).collect()
        })
        .collect();
    let phases: Vec<f64> = (0..spec.classes)
        .map(|_| rng.random_range(0.0..2.0 * PI))
        .collect();

    let mut labels: Vec<usize> = (0..spec.trials).map(|i| i % spec.classes).collect();
    labels.shuffle(&mut rng);

    // unit-power pattern times a unit sine has power 1/2
    let noise_sd = if spec.snr.is_infinite() {
        0.0
    } else {
        (0.5 / spec.snr).sqrt()
    };
    let mut data = Vec::with_capacity(spec.trials * spec.channels * spec.samples);
    for &label in &labels {
        let freq = class_frequency(label, spec.classes);
        for &gain in &patterns[label] {
            for t in 0..spec.samples {
                let clean = gain * (2.0 * PI * freq * t as f64 / spec.fs + phases[label]).sin();
                let noise = if noise_sd > 0.0 {
                    noise_sd * rng.sample::<f64, _>(StandardNormal)
                } else {
                    0.0
                };
                data.push(clean + noise);
            }
        }
    }
    EpochDataset::new(
        data,
        (spec.trials, spec.channels, spec.samples),
        labels,
        spec.fs,
        spec.classes,
    )
}
