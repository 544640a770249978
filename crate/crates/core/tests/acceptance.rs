//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DVector;
use plsr_core::formats::{model_to_json, trace_to_json};
use plsr_core::linalg::{gaussian, orthonormality_defect, qf, random_orthonormal, Mat};
use plsr_core::manifold::{
    egrad_to_rgrad, inner, metric_state, project_to_horizontal, project_to_tangent, project_triple,
    retract, solve_lyapunov, tangency_residual, vertical_residual, GrassmannPoint, SpdFactor,
};
use plsr_core::models::{
    cost, cross_product, eckart_young_optimum, egrad, fit_plsr_bigr, fit_simpls, PlsrCost,
};
use plsr_core::optimizer::{minimize, Problem};
use plsr_core::pipeline::{
    crossval_accuracy, fit_model, flatten, kfold, mean_std, synth_epochs, FitSpec, SynthSpec,
};
use plsr_core::{
    DataMatrixPair, MetricMode, OptimConfig, ProductPoint, TangentTriple, Trace, Variant,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Traces from every optimizer run in the suite, checked by criterion 7.
#[derive(Default)]
struct Traces(Vec<(String, Trace)>);

impl Traces {
    fn add(&mut self, label: impl Into<String>, trace: &Trace) {
        self.0.push((label.into(), trace.clone()));
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_point(g: &mut ChaCha8Rng, n: usize, m: usize, r: usize) -> ProductPoint {
    let mut s = gaussian(g, r, r);
    for i in 0..r {
        s[(i, i)] += 2.0;
    }
    ProductPoint::from_matrices(
        random_orthonormal(g, n, r).unwrap(),
        random_orthonormal(g, m, r).unwrap(),
        s,
    )
    .unwrap()
}

fn random_spd(g: &mut ChaCha8Rng, r: usize) -> SpdFactor {
    let a = gaussian(g, r, r);
    let mut m = &a * a.transpose();
    for i in 0..r {
        m[(i, i)] += 0.1;
    }
    SpdFactor::new(m).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn median(values: &mut [usize]) -> f64 {
    values.sort_unstable();
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2] as f64
    } else {
        (values[n / 2 - 1] + values[n / 2]) as f64 / 2.0
    }
}

/// Z = A·diag(σ)·Bᵀ with random orthonormal A (N×M) and B (M×M).
fn spread_z(g: &mut ChaCha8Rng, n: usize, sigma: &[f64]) -> Mat {
    let m = sigma.len();
    let a = random_orthonormal(g, n, m).unwrap();
    let b = random_orthonormal(g, m, m).unwrap();
    a * Mat::from_diagonal(&DVector::from_column_slice(sigma)) * b.transpose()
}

fn criterion_1(traces: &mut Traces) -> Outcome {
    let clock = Instant::now();
    let (mut passed, mut total, mut worst) = (0, 0, 0.0f64);
    for seed in 0..20u64 {
        let mut g = rng(1000 + seed);
        let data = DataMatrixPair::new(gaussian(&mut g, 40, 30), gaussian(&mut g, 40, 4)).unwrap();
        let z = cross_product(&data, true).unwrap().z;
        for r in 1..=3 {
            let config = OptimConfig {
                seed: 10 * seed + r as u64,
                ..OptimConfig::default()
            };
            let model = fit_plsr_bigr(&data, r, &config, MetricMode::Preconditioned).unwrap();
            traces.add(format!("c1 seed {seed} R {r}"), &model.trace);
            let point = ProductPoint::from_matrices(model.u, model.v, model.s).unwrap();
            let optimum = eckart_young_optimum(&z, r);
            let gap = (cost(&point, &z).unwrap() - optimum) / optimum;
            worst = worst.max(gap);
            total += 1;
            if gap <= 1e-6 {
                passed += 1;
            }
        }
    }
    let seconds = clock.elapsed().as_secs_f64();
    let pass = passed * 100 >= 95 * total && seconds < 5.0;
    outcome(
        pass,
        format!(
            "{passed}/{total} runs within 1e-6 of the Eckart-Young optimum (worst {worst:.2e}), {seconds:.2} s (limit 5 s)"
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut g = rng(2000);
    let (n, m, r) = (9, 5, 3);
    let mut worst_euclid = 0.0f64;
    let mut worst_riemann = 0.0f64;
    for _ in 0..20 {
        let point = random_point(&mut g, n, m, r);
        let z = gaussian(&mut g, n, m);
        let eg = egrad(&point, &z).unwrap();

        // ambient central differences, one coordinate at a time
        let h = 1e-6;
        let f = |u: &Mat, v: &Mat, s: &Mat| 0.5 * (u * s * v.transpose() - &z).norm_squared();
        let (u, v, s) = (point.u(), point.v(), point.s());
        let blocks: [(&Mat, &Mat); 3] = [(u, &eg.g_u), (v, &eg.g_v), (s, &eg.g_s)];
        for (which, (base, grad)) in blocks.iter().enumerate() {
            let mut fd = Mat::zeros(base.nrows(), base.ncols());
            for i in 0..base.nrows() {
                for j in 0..base.ncols() {
                    let mut plus = (*base).clone();
                    let mut minus = (*base).clone();
                    plus[(i, j)] += h;
                    minus[(i, j)] -= h;
                    let (fp, fm) = match which {
                        0 => (f(&plus, v, s), f(&minus, v, s)),
                        1 => (f(u, &plus, s), f(u, &minus, s)),
                        _ => (f(u, v, &plus), f(u, v, &minus)),
                    };
                    fd[(i, j)] = (fp - fm) / (2.0 * h);
                }
            }
            worst_euclid = worst_euclid.max((&fd - *grad).norm() / grad.norm());
        }

        for mode in [MetricMode::Preconditioned, MetricMode::Identity] {
            let metric = metric_state(&point, mode).unwrap();
            let rgrad = egrad_to_rgrad(&point, &metric, &eg).unwrap();
            for _ in 0..5 {
                let raw = TangentTriple {
                    xi_u: gaussian(&mut g, n, r),
                    xi_v: gaussian(&mut g, m, r),
                    xi_s: gaussian(&mut g, r, r),
                };
                let eta = project_triple(&point, &metric, &raw).unwrap();
                let predicted = inner(&point, &metric, &rgrad, &eta).unwrap();
                let t = 1e-5;
                let fp = cost(&retract(&point, &eta, t).unwrap(), &z).unwrap();
                let fm = cost(&retract(&point, &eta, -t).unwrap(), &z).unwrap();
                worst_riemann = worst_riemann.max(rel(predicted, (fp - fm) / (2.0 * t)));
            }
        }
    }
    outcome(
        worst_euclid <= 1e-6 && worst_riemann <= 1e-5,
        format!(
            "egrad vs finite differences {worst_euclid:.2e} (limit 1e-6); g(rgrad, eta) vs d/dt f(R(t eta)) {worst_riemann:.2e} (limit 1e-5) over 20 points x 5 directions"
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut g = rng(3000);
    let (n, r) = (12, 4);
    let mut idem = 0.0f64;
    let mut tangency = 0.0f64;
    let mut horizontality = 0.0f64;
    let mut orthonormality = 0.0f64;
    let mut lyapunov = 0.0f64;
    let mut backward = 0.0f64;
    for instance in 0..100 {
        let u = GrassmannPoint::new(random_orthonormal(&mut g, n, r).unwrap()).unwrap();
        let m = if instance % 2 == 0 {
            random_spd(&mut g, r)
        } else {
            // a scaling built from a random core, as the optimizer sees it
            let s = gaussian(&mut g, r, r);
            let mut mm = &s * s.transpose();
            let delta = 1e-12 * (mm.trace() / r as f64).max(1.0);
            for i in 0..r {
                mm[(i, i)] += delta;
            }
            SpdFactor::new(plsr_core::linalg::sym(&mm)).unwrap()
        };
        let a = gaussian(&mut g, n, r);
        let t1 = project_to_tangent(&u, &a, &m).unwrap();
        let t2 = project_to_tangent(&u, &t1, &m).unwrap();
        let h1 = project_to_horizontal(&u, &t1, &m).unwrap();
        let h2 = project_to_horizontal(&u, &h1, &m).unwrap();
        idem = idem
            .max((&t2 - &t1).norm() / t1.norm().max(1.0))
            .max((&h2 - &h1).norm() / h1.norm().max(1.0));
        tangency = tangency
            .max(tangency_residual(&u, &t1) / a.norm())
            .max(tangency_residual(&u, &h1) / a.norm());
        horizontality = horizontality.max(vertical_residual(&u, &h1, &m).unwrap() / a.norm());

        let q = qf(&(u.basis() + &h1 * 0.7)).unwrap();
        orthonormality = orthonormality.max(orthonormality_defect(&q));

        // Residual relative to ‖c‖ on a random SPD scaling. On the core-derived
        // scalings the residual of even the exact solution carries rounding
        // of order eps·‖m‖‖B‖, so those are held to a normwise backward error.
        let spd = random_spd(&mut g, r);
        let c = gaussian(&mut g, r, r);
        let b = solve_lyapunov(&spd, &c).unwrap();
        let residual = spd.matrix() * &b + &b * spd.matrix() - &c;
        lyapunov = lyapunov.max(residual.norm() / c.norm());
        let b = solve_lyapunov(&m, &c).unwrap();
        let residual = m.matrix() * &b + &b * m.matrix() - &c;
        let scale = 2.0 * m.matrix().norm() * b.norm() + c.norm();
        backward = backward.max(residual.norm() / scale);
    }
    let pass = idem <= 1e-12
        && tangency <= 1e-10
        && horizontality <= 1e-10
        && orthonormality <= 1e-10
        && lyapunov <= 1e-12
        && backward <= 1e-12;
    outcome(
        pass,
        format!(
            "over 100 instances: idempotence {idem:.1e}, tangency {tangency:.1e}, horizontality {horizontality:.1e}, retraction orthonormality {orthonormality:.1e}, Lyapunov {lyapunov:.1e} (backward error {backward:.1e})"
        ),
    )
}

fn criterion_4(traces: &mut Traces) -> Outcome {
    // iterations to tolerance on Z with σ1/σR = 100
    let (n, r) = (30, 3);
    let config = OptimConfig::default();
    let mut iters_pre = Vec::new();
    let mut iters_id = Vec::new();
    for seed in 0..20u64 {
        let mut g = rng(4000 + seed);
        let z = spread_z(&mut g, n, &[1000.0, 100.0, 10.0, 1.0]);
        let u0 = random_orthonormal(&mut g, n, r).unwrap();
        let v0 = random_orthonormal(&mut g, 4, r).unwrap();
        let s0 = u0.transpose() * &z * &v0;
        let init = ProductPoint::from_matrices(u0, v0, s0).unwrap();
        let objective = PlsrCost { z };
        for (mode, bucket) in [
            (MetricMode::Preconditioned, &mut iters_pre),
            (MetricMode::Identity, &mut iters_id),
        ] {
            let problem = Problem::new(&objective, (n, 4, r), mode);
            let (_, trace) = minimize(&problem, &init, &config).unwrap();
            traces.add(format!("c4 seed {seed} {mode:?}"), &trace);
            bucket.push(trace.iterations());
        }
    }
    let med_pre = median(&mut iters_pre);
    let med_id = median(&mut iters_id);

    // classification ablation on a low-SNR synthetic fixture
    let mut acc_pre = Vec::new();
    let mut acc_id = Vec::new();
    for seed in 0..10u64 {
        let ds = synth_epochs(&SynthSpec {
            snr: 0.01,
            seed,
            ..SynthSpec::default()
        })
        .unwrap();
        for (variant, bucket) in [
            (Variant::BigrPreconditioned, &mut acc_pre),
            (Variant::BigrIdentity, &mut acc_id),
        ] {
            let spec = FitSpec {
                variant,
                rank: 2,
                config: OptimConfig {
                    seed,
                    ..OptimConfig::default()
                },
            };
            bucket.push(crossval_accuracy(&ds, 4, seed, &spec).unwrap().mean);
        }
    }
    let (mean_pre, _) = mean_std(&acc_pre);
    let (mean_id, _) = mean_std(&acc_id);
    outcome(
        med_pre <= med_id && mean_pre >= mean_id,
        format!(
            "median iterations preconditioned {med_pre} vs identity {med_id} (20 seeds); mean accuracy {mean_pre:.4} vs {mean_id:.4} (10 seeds)"
        ),
    )
}

fn criterion_5() -> Outcome {
    let clock = Instant::now();
    let ds = synth_epochs(&SynthSpec {
        trials: 120,
        channels: 8,
        samples: 200,
        classes: 2,
        snr: 1.0,
        seed: 7,
        fs: 200.0,
    })
    .unwrap();
    let spec = FitSpec {
        variant: Variant::BigrPreconditioned,
        rank: 2,
        config: OptimConfig::default(),
    };
    let real = crossval_accuracy(&ds, 4, 7, &spec).unwrap();
    let shuffled = crossval_accuracy(&ds.with_shuffled_labels(7).unwrap(), 4, 7, &spec).unwrap();
    let seconds = clock.elapsed().as_secs_f64();
    let pass = real.mean >= 0.95 && (shuffled.mean - 0.5).abs() <= 0.15 && seconds < 30.0;
    outcome(
        pass,
        format!(
            "4-fold accuracy {} (limit 0.95), shuffled labels {} (limit 0.5 +/- 0.15), {seconds:.2} s (limit 30 s)",
            real.summary(),
            shuffled.summary()
        ),
    )
}

fn criterion_6(traces: &mut Traces) -> Outcome {
    let mut worst_cos = f64::INFINITY;
    for seed in 0..5u64 {
        let mut g = rng(6000 + seed);
        for m in [1, 3] {
            let data =
                DataMatrixPair::new(gaussian(&mut g, 30, 8), gaussian(&mut g, 30, m)).unwrap();
            let simpls = fit_simpls(&data, 1).unwrap();
            let config = OptimConfig {
                seed,
                ..OptimConfig::default()
            };
            let bigr = fit_plsr_bigr(&data, 1, &config, MetricMode::Preconditioned).unwrap();
            traces.add(format!("c6 seed {seed} M {m}"), &bigr.trace);
            let a = simpls.u.column(0);
            let b = bigr.u.column(0);
            worst_cos = worst_cos.min(a.dot(&b).abs() / (a.norm() * b.norm()));
        }
    }

    let mut g = rng(6100);
    let x = gaussian(&mut g, 60, 6);
    let beta = gaussian(&mut g, 6, 2);
    let y = &x * beta;
    let data = DataMatrixPair::new(x.clone(), y.clone()).unwrap();
    let model = fit_simpls(&data, 6).unwrap();
    let exact = (model.predict(&x).unwrap() - &y).norm() / y.norm();

    outcome(
        worst_cos >= 1.0 - 1e-8 && exact <= 1e-8,
        format!(
            "R=1 weight |cosine| min {worst_cos:.12} (limit 1 - 1e-8); SIMPLS exact linear model relative error {exact:.1e} (limit 1e-8)"
        ),
    )
}

fn criterion_7(traces: &mut Traces) -> Outcome {
    // the fold fits of criterion 5, refit here to inspect their traces
    let ds = synth_epochs(&SynthSpec::default()).unwrap();
    let data = flatten(&ds).unwrap();
    let plan = kfold(ds.labels(), 4, 7).unwrap();
    for variant in [Variant::BigrPreconditioned, Variant::BigrIdentity] {
        let spec = FitSpec {
            variant,
            rank: 2,
            config: OptimConfig::default(),
        };
        for f in 0..4 {
            let (train, _) = plan.split(f);
            let model = fit_model(&data.select_rows(&train).unwrap(), &spec).unwrap();
            traces.add(format!("c7 fold {f} {}", variant.name()), &model.trace);
        }
    }
    let violations: Vec<&str> = traces
        .0
        .iter()
        .filter(|(_, t)| !t.is_monotone())
        .map(|(label, _)| label.as_str())
        .collect();
    let steps: usize = traces.0.iter().map(|(_, t)| t.iterations()).sum();
    outcome(
        violations.is_empty(),
        format!(
            "{} traces, {steps} accepted steps, {} with a cost increase{}",
            traces.0.len(),
            violations.len(),
            if violations.is_empty() {
                String::new()
            } else {
                format!(": {}", violations.join(", "))
            }
        ),
    )
}

fn criterion_8(traces: &mut Traces) -> Outcome {
    let mut g = rng(8000);
    let data = DataMatrixPair::new(gaussian(&mut g, 50, 12), gaussian(&mut g, 50, 3)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut identical = true;
    let mut checked = 0;
    for (variant, mode) in [
        ("bigr", MetricMode::Preconditioned),
        ("bigr-noprecond", MetricMode::Identity),
    ] {
        let config = OptimConfig {
            seed: 42,
            ..OptimConfig::default()
        };
        let mut runs = Vec::new();
        for run in 0..2 {
            let mut model = fit_plsr_bigr(&data, 2, &config, mode).unwrap();
            traces.add(format!("c8 {variant} run {run}"), &model.trace);
            model.trace = model.trace.without_timing();
            let model_path = dir.path().join(format!("{variant}-{run}.json"));
            let trace_path = dir.path().join(format!("{variant}-{run}.trace.json"));
            plsr_core::formats::write_atomic(
                &model_path,
                model_to_json(&model).unwrap().as_bytes(),
            )
            .unwrap();
            plsr_core::formats::write_atomic(
                &trace_path,
                trace_to_json(&model.trace).unwrap().as_bytes(),
            )
            .unwrap();
            runs.push((
                std::fs::read(&model_path).unwrap(),
                std::fs::read(&trace_path).unwrap(),
            ));
        }
        identical &= runs[0] == runs[1];
        checked += 2;
    }
    outcome(
        identical,
        format!("{checked} file pairs (model and trace, two variants) compared byte for byte"),
    )
}

fn main() -> ExitCode {
    let mut traces = Traces::default();
    let c1 = criterion_1(&mut traces);
    let c2 = criterion_2();
    let c3 = criterion_3();
    let c4 = criterion_4(&mut traces);
    let c5 = criterion_5();
    let c6 = criterion_6(&mut traces);
    let c8 = criterion_8(&mut traces);
    // runs last so that it sees the traces of every other criterion
    let c7 = criterion_7(&mut traces);
    let results = [
        ("eckart-young oracle equivalence", c1),
        ("gradient correctness", c2),
        ("geometry invariants", c3),
        ("preconditioning ablation", c4),
        ("end-to-end decoding sanity", c5),
        ("baseline agreement", c6),
        ("monotone optimization traces", c7),
        ("reproducibility", c8),
    ];
    let mut failed = 0;
    for (i, (name, result)) in results.iter().enumerate() {
        let status = if result.pass { "PASS" } else { "FAIL" };
        println!("criterion {} {status} {name}: {}", i + 1, result.detail);
        if !result.pass {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
