use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{flatten, kfold, EpochDataset};
use crate::error::Result;
use crate::models::{
    accuracy, classify, fit_plsr_bigr, fit_simpls, DataMatrixPair, PlsrModel, Variant,
};
use crate::optimizer::OptimConfig;

/// Estimator choice and its settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSpec {
    pub variant: Variant,
    pub rank: usize,
    pub config: OptimConfig,
}

pub fn fit_model(data: &DataMatrixPair, spec: &FitSpec) -> Result<PlsrModel> {
    match spec.variant.metric_mode() {
        Some(mode) => fit_plsr_bigr(data, spec.rank, &spec.config, mode),
        None => fit_simpls(data, spec.rank),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValReport {
    pub k: usize,
    pub stratified: bool,
    pub fold_accuracies: Vec<f64>,
    pub fold_iterations: Vec<usize>,
    pub fold_seconds: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation over folds.
    pub std: f64,
}

impl CrossValReport {
    /// `mean±std` with four decimals, e.g. `0.8487±0.0148`.
    pub fn summary(&self) -> String {
        format_mean_std(self.mean, self.std)
    }
}

pub fn format_mean_std(mean: f64, std: f64) -> String {
    format!("{mean:.4}±{std:.4}")
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// k-fold cross-validated classification accuracy on flattened epochs.
pub fn crossval_accuracy(
    ds: &EpochDataset,
    k: usize,
    fold_seed: u64,
    spec: &FitSpec,
) -> Result<CrossValReport> {
    let plan = kfold(ds.labels(), k, fold_seed)?;
    let data = flatten(ds)?;
    let mut fold_accuracies = Vec::with_capacity(k);
    let mut fold_iterations = Vec::with_capacity(k);
    let mut fold_seconds = Vec::with_capacity(k);
    for f in 0..k {
        let clock = Instant::now();
        let (train, test) = plan.split(f);
        let model = fit_model(&data.select_rows(&train)?, spec)?;
        let x_test = data.x().select_rows(&test);
        let predicted = classify(&model.predict(&x_test)?);
        let truth: Vec<usize> = test.iter().map(|&i| ds.labels()[i]).collect();
        fold_accuracies.push(accuracy(&predicted, &truth));
        fold_iterations.push(model.trace.iterations());
        fold_seconds.push(clock.elapsed().as_secs_f64());
    }
    let (mean, std) = mean_std(&fold_accuracies);
    Ok(CrossValReport {
        k,
        stratified: plan.stratified,
        fold_accuracies,
        fold_iterations,
        fold_seconds,
        mean,
        std,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{synth_epochs, SynthSpec};

    #[test]
    fn mean_std_is_sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(format_mean_std(0.84871, 0.01482), "0.8487±0.0148");
    }

    #[test]
    fn label_leak_fixture_is_perfect() {
        // the label is written into channel 0 of each trial
        let labels: Vec<usize> = (0..16).map(|i| i % 2).collect();
        let mut data = Vec::new();
        for &l in &labels {
            data.extend([l as f64, 0.0, 0.0, 1.0]);
        }
        let ds = EpochDataset::new(data, (16, 2, 2), labels, 10.0, 2).unwrap();
        for variant in [Variant::BigrPreconditioned, Variant::Simpls] {
            let spec = FitSpec {
                variant,
                rank: 1,
                config: OptimConfig::default(),
            };
            let rep = crossval_accuracy(&ds, 4, 1, &spec).unwrap();
            assert_eq!(rep.fold_accuracies, vec![1.0; 4]);
        }
    }

    #[test]
    fn separable_synthetic_and_chance() {
        let ds = synth_epochs(&SynthSpec {
            trials: 60,
            channels: 4,
            samples: 100,
            ..SynthSpec::default()
        })
        .unwrap();
        let spec = FitSpec {
            variant: Variant::BigrPreconditioned,
            rank: 2,
            config: OptimConfig::default(),
        };
        let rep = crossval_accuracy(&ds, 4, 0, &spec).unwrap();
        assert_eq!(rep.fold_accuracies.len(), 4);
        assert!(rep.mean >= 0.95, "{}", rep.summary());
        assert!(rep.fold_accuracies.iter().all(|a| (0.0..=1.0).contains(a)));

        let four = synth_epochs(&SynthSpec {
            trials: 120,
            channels: 4,
            samples: 50,
            classes: 4,
            ..SynthSpec::default()
        })
        .unwrap();
        let noise: Vec<usize> = {
            use rand::{Rng, SeedableRng};
            let mut g = rand_chacha::ChaCha8Rng::seed_from_u64(5);
            (0..120).map(|_| g.random_range(0..4)).collect()
        };
        let random = four.with_labels(noise).unwrap();
        let spec = FitSpec { rank: 3, ..spec };
        let rep = crossval_accuracy(&random, 4, 0, &spec).unwrap();
        assert!((rep.mean - 0.25).abs() <= 0.15, "{}", rep.summary());
    }
}
