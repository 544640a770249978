//! Riemannian conjugate gradient (Polak–Ribière+) with Armijo backtracking.
//!
//! The metric is rebuilt from the core factor at every iterate, so all inner
//! products of one iteration (directional derivative, β, stopping norm) are
//! taken in the metric of the current point.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{
    egrad_to_rgrad, inner, metric_state, retract, transport, EuclideanGradient, MetricMode,
    MetricState, ProductPoint, TangentTriple,
};

/// A smooth cost on the product manifold together with its Euclidean gradient.
pub trait Objective {
    fn cost(&self, point: &ProductPoint) -> f64;
    fn egrad(&self, point: &ProductPoint) -> EuclideanGradient;
}

/// An objective bound to the dimensions and metric mode it is minimized under.
pub struct Problem<'a, O: Objective + ?Sized> {
    pub objective: &'a O,
    /// (N, M, R)
    pub dims: (usize, usize, usize),
    pub mode: MetricMode,
}

impl<'a, O: Objective + ?Sized> Problem<'a, O> {
    pub fn new(objective: &'a O, dims: (usize, usize, usize), mode: MetricMode) -> Self {
        Self {
            objective,
            dims,
            mode,
        }
    }

    fn check(&self, point: &ProductPoint) -> Result<()> {
        if point.dims() != self.dims {
            return Err(Error::ShapeMismatch(format!(
                "point dims {:?} differ from problem dims {:?}",
                point.dims(),
                self.dims
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CgVariant {
    PolakRibierePlus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimConfig {
    /// Stopping threshold on the metric norm of the Riemannian gradient,
    /// relative to max(1, |f₀|).
    pub grad_tol: f64,
    pub max_iters: usize,
    pub armijo_c1: f64,
    pub backtrack_factor: f64,
    pub max_backtracks: usize,
    pub initial_step: f64,
    pub cg_variant: CgVariant,
    /// Iterations between forced steepest-descent restarts; `None` means N·R.
    pub restart_period: Option<usize>,
    pub seed: u64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            grad_tol: 1e-6,
            max_iters: 500,
            armijo_c1: 1e-4,
            backtrack_factor: 0.5,
            max_backtracks: 30,
            initial_step: 1.0,
            cg_variant: CgVariant::PolakRibierePlus,
            restart_period: None,
            seed: 0,
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.armijo_c1 > 0.0 && self.armijo_c1 < 1.0) {
            return bad("armijo_c1 must lie in (0, 1)");
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return bad("backtrack_factor must lie in (0, 1)");
        }
        if !(self.grad_tol >= 0.0) {
            return bad("grad_tol must be non-negative");
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return bad("initial_step must be positive");
        }
        if self.restart_period == Some(0) {
            return bad("restart_period must be positive");
        }
        Ok(())
    }

    /// The restart period with the N·R default materialized.
    pub fn resolved_restart_period(&self, dims: (usize, usize, usize)) -> usize {
        self.restart_period.unwrap_or((dims.0 * dims.2).max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub cost: f64,
    pub grad_norm: f64,
    pub step: f64,
    pub backtracks: usize,
    /// Wall-clock seconds since the start of `minimize`; `None` once stripped
    /// by [`Trace::without_timing`].
    pub elapsed_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    GradientTolerance,
    MaxIters,
    LineSearchFailure,
}

/// Per-iteration history. Record 0 describes the starting point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub records: Vec<IterationRecord>,
    pub termination: Option<TerminationReason>,
}

impl Trace {
    pub fn empty() -> Self {
        Self {
            records: Vec::new(),
            termination: None,
        }
    }

    /// Number of accepted steps.
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn final_cost(&self) -> Option<f64> {
        self.records.last().map(|r| r.cost)
    }

    pub fn total_seconds(&self) -> f64 {
        self.records.last().and_then(|r| r.elapsed_s).unwrap_or(0.0)
    }

    pub fn is_monotone(&self) -> bool {
        self.records.windows(2).all(|w| w[1].cost <= w[0].cost)
    }

    /// The same trace with every `elapsed_s` removed, i.e. only the
    /// deterministic content.
    pub fn without_timing(&self) -> Self {
        let mut t = self.clone();
        for r in &mut t.records {
            r.elapsed_s = None;
        }
        t
    }
}

/// Outcome of a single steepest-descent probe.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub cost_before: f64,
    pub cost_after: f64,
    pub grad_norm: f64,
    pub step: f64,
    pub backtracks: usize,
    pub moved: bool,
}

struct Evaluated {
    point: ProductPoint,
    cost: f64,
    metric: MetricState,
    rgrad: TangentTriple,
    grad_norm_sq: f64,
}

fn evaluate<O: Objective + ?Sized>(
    problem: &Problem<'_, O>,
    point: ProductPoint,
    cost: f64,
) -> Result<Evaluated> {
    let metric = metric_state(&point, problem.mode)?;
    let eg = problem.objective.egrad(&point);
    let rgrad = egrad_to_rgrad(&point, &metric, &eg)?;
    let grad_norm_sq = inner(&point, &metric, &rgrad, &rgrad)?.max(0.0);
    Ok(Evaluated {
        point,
        cost,
        metric,
        rgrad,
        grad_norm_sq,
    })
}

struct LineSearchResult {
    point: ProductPoint,
    cost: f64,
    step: f64,
    backtracks: usize,
}

/// Armijo backtracking along `direction`; `slope` is the (negative)
/// directional derivative.
fn armijo<O: Objective + ?Sized>(
    problem: &Problem<'_, O>,
    at: &Evaluated,
    direction: &TangentTriple,
    slope: f64,
    first_step: f64,
    config: &OptimConfig,
) -> Option<LineSearchResult> {
    let mut t = first_step;
    for backtracks in 0..=config.max_backtracks {
        // A breakdown of the retraction counts as a rejected trial step.
        if let Ok(candidate) = retract(&at.point, direction, t) {
            let cost = problem.objective.cost(&candidate);
            if cost.is_finite() && cost <= at.cost + config.armijo_c1 * t * slope {
                return Some(LineSearchResult {
                    point: candidate,
                    cost,
                    step: t,
                    backtracks,
                });
            }
        }
        t *= config.backtrack_factor;
    }
    None
}

fn start<O: Objective + ?Sized>(
    problem: &Problem<'_, O>,
    init: &ProductPoint,
    config: &OptimConfig,
) -> Result<Evaluated> {
    config.validate()?;
    problem.check(init)?;
    let f0 = problem.objective.cost(init);
    if !f0.is_finite() {
        return Err(Error::InvalidStart(f0));
    }
    evaluate(problem, init.clone(), f0)
}

/// Minimizes `problem` from `init`. Returns the final iterate and its trace;
/// the cost recorded in the trace never increases.
pub fn minimize<O: Objective + ?Sized>(
    problem: &Problem<'_, O>,
    init: &ProductPoint,
    config: &OptimConfig,
) -> Result<(ProductPoint, Trace)> {
    let clock = Instant::now();
    let mut current = start(problem, init, config)?;
    let tol = config.grad_tol * current.cost.abs().max(1.0);
    let restart_period = config.resolved_restart_period(problem.dims);

    let mut trace = Trace::empty();
    trace.records.push(IterationRecord {
        iter: 0,
        cost: current.cost,
        grad_norm: current.grad_norm_sq.sqrt(),
        step: 0.0,
        backtracks: 0,
        elapsed_s: Some(clock.elapsed().as_secs_f64()),
    });
    if current.grad_norm_sq.sqrt() <= tol {
        trace.termination = Some(TerminationReason::GradientTolerance);
        return Ok((current.point, trace));
    }

    let mut direction = current.rgrad.scaled(-1.0);
    let mut previous_step: Option<f64> = None;
    let mut since_restart = 0usize;
    let mut termination = TerminationReason::MaxIters;

    for iter in 1..=config.max_iters {
        let mut slope = inner(&current.point, &current.metric, &current.rgrad, &direction)?;
        if !(slope < 0.0) {
            direction = current.rgrad.scaled(-1.0);
            slope = -current.grad_norm_sq;
            since_restart = 0;
        }
        let first_step = match previous_step {
            None => config.initial_step,
            Some(s) => (s / config.backtrack_factor).min(config.initial_step),
        };
        let Some(accepted) = armijo(problem, &current, &direction, slope, first_step, config)
        else {
            termination = TerminationReason::LineSearchFailure;
            break;
        };
        previous_step = Some(accepted.step);

        let next = evaluate(problem, accepted.point, accepted.cost)?;
        trace.records.push(IterationRecord {
            iter,
            cost: next.cost,
            grad_norm: next.grad_norm_sq.sqrt(),
            step: accepted.step,
            backtracks: accepted.backtracks,
            elapsed_s: Some(clock.elapsed().as_secs_f64()),
        });
        if next.grad_norm_sq.sqrt() <= tol {
            current = next;
            termination = TerminationReason::GradientTolerance;
            break;
        }

        let old_grad = transport(&current.point, &next.point, &next.metric, &current.rgrad)?;
        let old_dir = transport(&current.point, &next.point, &next.metric, &direction)?;
        let diff = next.rgrad.axpy(-1.0, &old_grad);
        let numerator = inner(&next.point, &next.metric, &next.rgrad, &diff)?;
        let denominator = inner(&next.point, &next.metric, &old_grad, &old_grad)?;
        since_restart += 1;
        let mut beta = if denominator > 0.0 {
            (numerator / denominator).max(0.0)
        } else {
            0.0
        };
        if !beta.is_finite() || since_restart >= restart_period {
            beta = 0.0;
            since_restart = 0;
        }
        direction = next.rgrad.scaled(-1.0).axpy(beta, &old_dir);
        current = next;
    }

    trace.termination = Some(termination);
    Ok((current.point, trace))
}

/// One Armijo-backtracked step along the negative Riemannian gradient.
pub fn steepest_descent_step<O: Objective + ?Sized>(
    problem: &Problem<'_, O>,
    point: &ProductPoint,
    config: &OptimConfig,
) -> Result<(ProductPoint, StepInfo)> {
    let current = start(problem, point, config)?;
    let grad_norm = current.grad_norm_sq.sqrt();
    let tol = config.grad_tol * current.cost.abs().max(1.0);
    let unchanged = |backtracks| StepInfo {
        cost_before: current.cost,
        cost_after: current.cost,
        grad_norm,
        step: 0.0,
        backtracks,
        moved: false,
    };
    if grad_norm <= tol {
        return Ok((point.clone(), unchanged(0)));
    }
    let direction = current.rgrad.scaled(-1.0);
    match armijo(
        problem,
        &current,
        &direction,
        -current.grad_norm_sq,
        config.initial_step,
        config,
    ) {
        Some(acc) => {
            let info = StepInfo {
                cost_before: current.cost,
                cost_after: acc.cost,
                grad_norm,
                step: acc.step,
                backtracks: acc.backtracks,
                moved: true,
            };
            Ok((acc.point, info))
        }
        None => Ok((point.clone(), unchanged(config.max_backtracks))),
    }
}
