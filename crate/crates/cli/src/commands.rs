use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use plsr_core::formats::{
    read_epochs, read_labels_csv, read_matrix_csv, read_model, sibling_path, trace_csv_string,
    write_atomic, write_epochs, write_json, write_model, write_trace,
};
use plsr_core::models::{accuracy, classify, one_hot_labels};
use plsr_core::pipeline::{
    bandpass, crossval_accuracy, downsample, fit_model, flatten, format_mean_std, mean_std,
    synth_epochs, FitSpec, SynthSpec,
};
use plsr_core::{DataMatrixPair, EpochDataset, OptimConfig, TerminationReason, Variant};
use serde::Serialize;

use crate::args::{
    BenchArgs, Command, CrossvalArgs, FitArgs, PredictArgs, PreprocessArgs, SolverArgs, SynthArgs,
};
use crate::error::{CliError, CliResult};
use crate::manifest::{unix_now, RunManifest};

pub fn run(command: &Command) -> CliResult<()> {
    match command {
        Command::Fit(a) => fit(command, a),
        Command::Predict(a) => predict(command, a),
        Command::Crossval(a) => crossval(command, a),
        Command::BenchPrecond(a) => bench(command, a),
        Command::Synth(a) => synth(command, a),
        Command::Replay(a) => {
            let manifest = RunManifest::read(&a.manifest)?;
            run(&manifest.command)
        }
    }
}

/// Where a command's run manifest goes, given its primary output.
pub fn manifest_path(command: &Command) -> Option<PathBuf> {
    match command {
        Command::Fit(a) => Some(sibling_path(&a.out, ".run", "json")),
        Command::Predict(a) => Some(sibling_path(&a.out, ".run", "json")),
        Command::Crossval(a) => Some(sibling_path(&a.out, ".run", "json")),
        Command::BenchPrecond(a) => Some(sibling_path(&a.out, ".run", "json")),
        Command::Synth(a) => Some(a.out.join("run.json")),
        Command::Replay(_) => None,
    }
}

fn optim_config(solver: &SolverArgs) -> CliResult<OptimConfig> {
    let config = OptimConfig {
        grad_tol: solver.tol,
        max_iters: solver.max_iters,
        seed: solver.seed,
        ..OptimConfig::default()
    };
    config.validate()?;
    Ok(config)
}

fn fit_spec(solver: &SolverArgs) -> CliResult<FitSpec> {
    Ok(FitSpec {
        variant: solver.variant.into(),
        rank: solver.rank,
        config: optim_config(solver)?,
    })
}

fn preprocess(ds: EpochDataset, p: &PreprocessArgs) -> CliResult<EpochDataset> {
    let mut ds = ds;
    if let Some(band) = &p.bandpass {
        ds = bandpass(&ds, band[0], band[1])?;
    }
    if let Some(hz) = p.decimate {
        ds = downsample(&ds, hz)?;
    }
    Ok(ds)
}

fn is_preprocessing(p: &PreprocessArgs) -> bool {
    p.bandpass.is_some() || p.decimate.is_some()
}

fn load_epochs(dir: &Path, p: &PreprocessArgs) -> CliResult<EpochDataset> {
    preprocess(read_epochs(dir)?, p)
}

#[derive(Serialize)]
struct FitReport {
    variant: Variant,
    rank: usize,
    n_samples: usize,
    n_features: usize,
    n_targets: usize,
    iterations: usize,
    termination: Option<TerminationReason>,
    final_cost: Option<f64>,
    /// Present when the targets are one-hot.
    training_accuracy: Option<f64>,
    seconds: Option<f64>,
}

fn fit(command: &Command, a: &FitArgs) -> CliResult<()> {
    let started = unix_now();
    let mut manifest = RunManifest::new(command, Some(a.solver.seed), started);
    let data = match (&a.epochs, &a.x, &a.y) {
        (Some(dir), _, _) => {
            manifest.inputs.push(dir.clone());
            flatten(&load_epochs(dir, &a.preprocess)?)?
        }
        (None, Some(x), Some(y)) => {
            if is_preprocessing(&a.preprocess) {
                return Err(CliError::Usage(
                    "--bandpass and --decimate apply to --epochs input only".into(),
                ));
            }
            manifest.inputs.extend([x.clone(), y.clone()]);
            DataMatrixPair::new(read_matrix_csv(x)?, read_matrix_csv(y)?)?
        }
        _ => return Err(CliError::Usage("give --epochs or both --x and --y".into())),
    };
    let spec = fit_spec(&a.solver)?;

    let clock = Instant::now();
    let mut model = fit_model(&data, &spec)?;
    let seconds = clock.elapsed().as_secs_f64();
    if !a.timing {
        model.trace = model.trace.without_timing();
    }

    let training_accuracy = match one_hot_labels(data.y()) {
        Some(truth) => Some(accuracy(&classify(&model.predict(data.x())?), &truth)),
        None => None,
    };
    let report = FitReport {
        variant: model.variant,
        rank: model.rank(),
        n_samples: data.n_samples(),
        n_features: model.n_features(),
        n_targets: model.n_targets(),
        iterations: model.trace.iterations(),
        termination: model.trace.termination,
        final_cost: model.trace.final_cost(),
        training_accuracy,
        seconds: a.timing.then_some(seconds),
    };

    let trace_json = sibling_path(&a.out, ".trace", "json");
    let trace_csv = sibling_path(&a.out, ".trace", "csv");
    let report_path = sibling_path(&a.out, ".report", "json");
    write_model(&a.out, &model)?;
    write_trace(&trace_json, &model.trace)?;
    write_atomic(&trace_csv, trace_csv_string(&model.trace).as_bytes())?;
    write_json(&report_path, &report)?;
    manifest.outputs = vec![a.out.clone(), trace_json, trace_csv, report_path];
    write_manifest(command, manifest)
}

#[derive(Serialize)]
struct PredictMetrics {
    n_rows: usize,
    n_correct: Option<usize>,
    accuracy: Option<f64>,
}

fn predict(command: &Command, a: &PredictArgs) -> CliResult<()> {
    let started = unix_now();
    let mut manifest = RunManifest::new(command, None, started);
    manifest.inputs.extend([a.model.clone(), a.x.clone()]);
    let model = read_model(&a.model)?;
    let x = read_matrix_csv(&a.x)?;
    let labels = match &a.labels {
        Some(path) => {
            manifest.inputs.push(path.clone());
            Some(read_labels_csv(path)?)
        }
        None => None,
    };
    if let Some(labels) = &labels {
        if labels.len() != x.nrows() {
            return Err(CliError::Data(format!(
                "{} rows in {} but {} labels",
                x.nrows(),
                a.x.display(),
                labels.len()
            )));
        }
    }

    let mut csv = String::new();
    let mut n_correct = 0;
    if x.nrows() > 0 {
        if x.ncols() != model.n_features() {
            return Err(CliError::Data(format!(
                "{}: {} columns, model expects {}",
                a.x.display(),
                x.ncols(),
                model.n_features()
            )));
        }
        let scores = model.predict(&x)?;
        let classes = classify(&scores);
        for (i, row) in scores.row_iter().enumerate() {
            for v in row.iter() {
                write!(csv, "{v:?},").expect("writing to a String");
            }
            writeln!(csv, "{}", classes[i]).expect("writing to a String");
        }
        if let Some(labels) = &labels {
            n_correct = classes.iter().zip(labels).filter(|(p, t)| p == t).count();
        }
    }
    let metrics = PredictMetrics {
        n_rows: x.nrows(),
        n_correct: labels.as_ref().map(|_| n_correct),
        accuracy: labels
            .as_ref()
            .filter(|l| !l.is_empty())
            .map(|l| n_correct as f64 / l.len() as f64),
    };

    let metrics_path = sibling_path(&a.out, ".metrics", "json");
    write_atomic(&a.out, csv.as_bytes())?;
    write_json(&metrics_path, &metrics)?;
    manifest.outputs = vec![a.out.clone(), metrics_path];
    write_manifest(command, manifest)
}

#[derive(Serialize)]
struct FoldEntry {
    fold: usize,
    accuracy: f64,
    iterations: usize,
    seconds: f64,
}

#[derive(Serialize)]
struct CrossvalMetrics {
    variant: Variant,
    rank: usize,
    k: usize,
    stratified: bool,
    folds: Vec<FoldEntry>,
    mean: f64,
    std: f64,
    summary: String,
    total_seconds: f64,
}

fn crossval(command: &Command, a: &CrossvalArgs) -> CliResult<()> {
    let started = unix_now();
    let mut manifest = RunManifest::new(command, Some(a.solver.seed), started);
    manifest.inputs.push(a.epochs.clone());
    let ds = load_epochs(&a.epochs, &a.preprocess)?;
    let spec = fit_spec(&a.solver)?;
    let report = crossval_accuracy(&ds, a.k, a.solver.seed, &spec)?;
    let folds: Vec<FoldEntry> = (0..report.k)
        .map(|f| FoldEntry {
            fold: f,
            accuracy: report.fold_accuracies[f],
            iterations: report.fold_iterations[f],
            seconds: report.fold_seconds[f],
        })
        .collect();
    let metrics = CrossvalMetrics {
        variant: spec.variant,
        rank: spec.rank,
        k: report.k,
        stratified: report.stratified,
        total_seconds: report.fold_seconds.iter().sum(),
        folds,
        mean: report.mean,
        std: report.std,
        summary: report.summary(),
    };
    println!("{} {}", spec.variant.name(), metrics.summary);
    write_json(&a.out, &metrics)?;
    manifest.outputs = vec![a.out.clone()];
    write_manifest(command, manifest)
}

#[derive(Serialize)]
struct BenchSeed {
    seed: u64,
    accuracy: f64,
    seconds: f64,
    median_iterations: f64,
}

#[derive(Serialize)]
struct BenchVariant {
    variant: Variant,
    label: &'static str,
    seeds: Vec<BenchSeed>,
    accuracy_mean: f64,
    accuracy_std: f64,
    accuracy_summary: String,
    seconds_mean: f64,
    seconds_std: f64,
    median_iterations: f64,
}

#[derive(Serialize)]
struct BenchResults {
    rank: usize,
    k: usize,
    source: String,
    variants: Vec<BenchVariant>,
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn bench(command: &Command, a: &BenchArgs) -> CliResult<()> {
    if a.seeds.is_empty() {
        return Err(CliError::Usage("--seeds needs at least one seed".into()));
    }
    let started = unix_now();
    let mut manifest = RunManifest::new(command, None, started);
    let shared = match &a.epochs {
        Some(dir) => {
            manifest.inputs.push(dir.clone());
            Some(load_epochs(dir, &a.preprocess)?)
        }
        None => None,
    };
    let dataset = |seed: u64| -> CliResult<EpochDataset> {
        match &shared {
            Some(ds) => Ok(ds.clone()),
            None => {
                let ds = synth_epochs(&SynthSpec {
                    trials: a.trials,
                    channels: a.channels,
                    samples: a.samples,
                    classes: a.classes,
                    snr: a.snr,
                    seed,
                    ..SynthSpec::default()
                })?;
                preprocess(ds, &a.preprocess)
            }
        }
    };

    let variants = [
        (Variant::BigrPreconditioned, "preconditioned"),
        (Variant::BigrIdentity, "non-preconditioned"),
    ];
    let mut results = Vec::new();
    for (variant, label) in variants {
        let mut seeds = Vec::new();
        let mut all_iterations = Vec::new();
        for &seed in &a.seeds {
            let config = OptimConfig {
                grad_tol: a.tol,
                max_iters: a.max_iters,
                seed,
                ..OptimConfig::default()
            };
            config.validate()?;
            let spec = FitSpec {
                variant,
                rank: a.rank,
                config,
            };
            let report = crossval_accuracy(&dataset(seed)?, a.k, seed, &spec)?;
            let mut iterations: Vec<f64> =
                report.fold_iterations.iter().map(|&i| i as f64).collect();
            all_iterations.extend(iterations.iter().copied());
            seeds.push(BenchSeed {
                seed,
                accuracy: report.mean,
                seconds: report.fold_seconds.iter().sum(),
                median_iterations: median(&mut iterations),
            });
        }
        let accuracies: Vec<f64> = seeds.iter().map(|s| s.accuracy).collect();
        let seconds: Vec<f64> = seeds.iter().map(|s| s.seconds).collect();
        let (accuracy_mean, accuracy_std) = mean_std(&accuracies);
        let (seconds_mean, seconds_std) = mean_std(&seconds);
        results.push(BenchVariant {
            variant,
            label,
            seeds,
            accuracy_mean,
            accuracy_std,
            accuracy_summary: format_mean_std(accuracy_mean, accuracy_std),
            seconds_mean,
            seconds_std,
            median_iterations: median(&mut all_iterations),
        });
    }

    let results = BenchResults {
        rank: a.rank,
        k: a.k,
        source: match &a.epochs {
            Some(dir) => dir.display().to_string(),
            None => format!("synthetic snr={}", a.snr),
        },
        variants: results,
    };
    let table = bench_table(&results);
    print!("{table}");
    let table_path = sibling_path(&a.out, "", "txt");
    write_json(&a.out, &results)?;
    write_atomic(&table_path, table.as_bytes())?;
    manifest.outputs = vec![a.out.clone(), table_path];
    write_manifest(command, manifest)
}

fn bench_table(results: &BenchResults) -> String {
    let header = [
        "variant",
        "accuracy",
        "running time (s)",
        "median iterations",
    ];
    let rows: Vec<[String; 4]> = results
        .variants
        .iter()
        .map(|v| {
            [
                v.label.to_string(),
                v.accuracy_summary.clone(),
                format_mean_std(v.seconds_mean, v.seconds_std),
                format!("{}", v.median_iterations),
            ]
        })
        .collect();
    let mut widths = header.map(|h| h.chars().count());
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: [&str; 4]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        format!("{}\n", padded.join(" | ").trim_end())
    };
    let mut out = line(header);
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    out.push_str(&format!("{}\n", rule.join("-+-")));
    for row in &rows {
        out.push_str(&line([&row[0], &row[1], &row[2], &row[3]]));
    }
    out
}

fn synth(command: &Command, a: &SynthArgs) -> CliResult<()> {
    let started = unix_now();
    let mut manifest = RunManifest::new(command, Some(a.seed), started);
    let ds = synth_epochs(&SynthSpec {
        trials: a.trials,
        channels: a.channels,
        samples: a.samples,
        classes: a.classes,
        snr: a.snr,
        seed: a.seed,
        fs: a.fs,
    })?;
    write_epochs(&a.out, &ds)?;
    manifest.outputs = vec![a.out.clone()];
    write_manifest(command, manifest)
}

fn write_manifest(command: &Command, manifest: RunManifest) -> CliResult<()> {
    match manifest_path(command) {
        Some(path) => manifest.write(&path),
        None => Ok(()),
    }
}
