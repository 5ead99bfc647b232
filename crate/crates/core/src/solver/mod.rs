//! The homotopic subgradient method and the logistic baseline.
//!
//! Stage `s` runs `t_s` subgradient steps on `F_{λ_s}` starting from the
//! previous stage's output,
//!
//! ```text
//! w_i = (1 − λ_s η_s) w_{i−1} + (η_s / n) Σ_{j : y_j x_j·w_{i−1} ≤ 1} y_j x_j
//! ```
//!
//! and hands `(1/t_s) Σ_{i=1..t_s} w_i` (or the best iterate) to the next
//! stage. The first stage starts from zero.

mod logistic;

pub use logistic::{logistic_gd, sigma_max, DEFAULT_SIGMA_TOL};

use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::losses::{ActiveRule, LossContext};
use crate::schedule::{SchedulePlan, StageParams};

/// What a stage hands to the next one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateRule {
    #[default]
    Averaged,
    /// `argmin_i F_λ(w_i)`, earliest index on ties.
    BestIterate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepMode {
    #[default]
    Plain,
    /// Step along `∂F_λ / ‖∂F_λ‖`; a zero subgradient leaves the iterate in place.
    Normalized,
}

/// Run length, either as a stage count or as a total update budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    Stages(usize),
    Budget(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CheckpointMode {
    /// One checkpoint per stage boundary.
    #[default]
    Stages,
    /// Additionally record the running stage average every `every` inner steps.
    Dense { every: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub plan: SchedulePlan,
    pub horizon: Horizon,
    pub update_rule: UpdateRule,
    pub step_mode: StepMode,
    pub active_rule: ActiveRule,
    pub estimate_bias: bool,
    pub checkpoints: CheckpointMode,
}

impl SolverConfig {
    pub fn new(plan: SchedulePlan, horizon: Horizon) -> Self {
        Self {
            plan,
            horizon,
            update_rule: UpdateRule::default(),
            step_mode: StepMode::default(),
            active_rule: ActiveRule::default(),
            estimate_bias: false,
            checkpoints: CheckpointMode::default(),
        }
    }

    /// Number of stages the configuration runs.
    pub fn stage_count(&self) -> Result<usize> {
        let stages = match self.horizon {
            Horizon::Stages(s) => s,
            Horizon::Budget(k) => self.plan.budget_to_stages(k)?.0,
        };
        if stages == 0 {
            return Err(invalid("stages", "need at least one stage"));
        }
        Ok(stages)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckpointKind {
    /// Stage output `z_k`.
    Stage,
    /// Running average inside a stage.
    Inner,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub kind: CheckpointKind,
    pub stage: usize,
    /// Cumulative number of updates.
    pub k: u64,
    pub lambda: f64,
    pub eta: f64,
    pub t: u64,
    pub iterate: Vec<f64>,
    /// Objective at the iterate: `F_λ` for the hinge method, the logistic loss for the baseline.
    pub loss: f64,
    pub bias: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveTrace {
    pub checkpoints: Vec<Checkpoint>,
    pub final_w: Vec<f64>,
}

impl SolveTrace {
    /// Stage-boundary checkpoints only.
    pub fn stages(&self) -> impl Iterator<Item = &Checkpoint> + '_ {
        self.checkpoints
            .iter()
            .filter(|c| c.kind == CheckpointKind::Stage)
    }
}

/// Outputs of one fixed-`λ` run.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerRun {
    pub averaged: Vec<f64>,
    pub best: Vec<f64>,
    /// 1-based index of `best`.
    pub best_index: u64,
    pub best_value: f64,
    pub last: Vec<f64>,
}

/// Runs `t` subgradient steps on `F_λ` from `w0`.
pub fn inner_run(
    ctx: &LossContext,
    w0: &[f64],
    lambda: f64,
    eta: f64,
    t: u64,
    step_mode: StepMode,
    active_rule: ActiveRule,
) -> Result<InnerRun> {
    inner_run_observed(
        ctx,
        w0,
        lambda,
        eta,
        t,
        step_mode,
        active_rule,
        |_, _, _| {},
    )
}

/// [`inner_run`] calling `observe(i, w_i, Σ_{l≤i} w_l)` after every step.
#[allow(clippy::too_many_arguments)]
pub fn inner_run_observed(
    ctx: &LossContext,
    w0: &[f64],
    lambda: f64,
    eta: f64,
    t: u64,
    step_mode: StepMode,
    active_rule: ActiveRule,
    mut observe: impl FnMut(u64, &[f64], &[f64]),
) -> Result<InnerRun> {
    ctx.check_dim(w0)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid("lambda", "must be positive"));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(invalid("eta", "must be positive"));
    }
    if !(eta * lambda < 1.0) {
        return Err(invalid(
            "eta",
            format!("need eta * lambda < 1, got {}", eta * lambda),
        ));
    }
    if t == 0 {
        return Err(invalid("t", "need at least one step"));
    }

    let d = ctx.dim();
    let inv_n = 1.0 / ctx.n() as f64;
    let shrink = 1.0 - lambda * eta;
    let mut w = w0.to_vec();
    let mut next = vec![0.0; d];
    let mut active = vec![0.0; d];
    let mut sum = vec![0.0; d];
    let mut best = w0.to_vec();
    let mut best_value = f64::INFINITY;
    let mut best_index = 0;

    // Margins at w_{i-1} give both F_λ(w_{i-1}) and the active set of step i.
    for i in 1..=t + 1 {
        active.iter_mut().for_each(|a| *a = 0.0);
        let mut hinge_sum = 0.0;
        for z in ctx.signed_points() {
            let m = linalg::dot(z, &w);
            hinge_sum += crate::losses::hinge(m);
            if active_rule.is_active(m) {
                linalg::axpy(1.0, z, &mut active);
            }
        }
        if i > 1 {
            let value = 0.5 * lambda * linalg::dot(&w, &w) + hinge_sum * inv_n;
            if value < best_value {
                best_value = value;
                best_index = i - 1;
                best.copy_from_slice(&w);
            }
        }
        if i > t {
            break;
        }

        match step_mode {
            StepMode::Plain => {
                let scale = eta * inv_n;
                for ((nx, wx), ax) in next.iter_mut().zip(&w).zip(&active) {
                    *nx = shrink * wx + scale * ax;
                }
            }
            StepMode::Normalized => {
                let grad: Vec<f64> = w
                    .iter()
                    .zip(&active)
                    .map(|(wx, ax)| lambda * wx - inv_n * ax)
                    .collect();
                let g = linalg::norm(&grad);
                if g == 0.0 {
                    next.copy_from_slice(&w);
                } else {
                    for ((nx, wx), gx) in next.iter_mut().zip(&w).zip(&grad) {
                        *nx = wx - eta * gx / g;
                    }
                }
            }
        }
        std::mem::swap(&mut w, &mut next);
        linalg::axpy(1.0, &w, &mut sum);
        observe(i, &w, &sum);
    }

    let averaged = linalg::scaled(1.0 / t as f64, &sum);
    Ok(InnerRun {
        averaged,
        best,
        best_index,
        best_value,
        last: w,
    })
}

/// Runs the homotopic method from `w̄₀ = 0`.
pub fn homotopic_solve(ctx: &LossContext, config: &SolverConfig) -> Result<SolveTrace> {
    homotopic_solve_observed(ctx, config, |_, _, _| {})
}

/// [`homotopic_solve`] calling `observe(stage, i, w_i)` for every inner iterate.
pub fn homotopic_solve_observed(
    ctx: &LossContext,
    config: &SolverConfig,
    mut observe: impl FnMut(&StageParams, u64, &[f64]),
) -> Result<SolveTrace> {
    let stages = config.stage_count()?;
    if config.estimate_bias && !ctx.dataset().has_both_classes() {
        return Err(Error::SingleClass);
    }
    let mut seed = vec![0.0; ctx.dim()];
    let mut k = 0u64;
    let mut checkpoints = Vec::with_capacity(stages);

    for s in 0..stages {
        let params = config.plan.stage(s);
        let run = inner_run_observed(
            ctx,
            &seed,
            params.lambda,
            params.eta,
            params.t,
            config.step_mode,
            config.active_rule,
            |i, w, sum| {
                observe(&params, i, w);
                if let CheckpointMode::Dense { every } = config.checkpoints {
                    if every > 0 && i % every == 0 && i < params.t {
                        let avg = linalg::scaled(1.0 / i as f64, sum);
                        checkpoints.push(Checkpoint {
                            kind: CheckpointKind::Inner,
                            stage: s,
                            k: k + i,
                            lambda: params.lambda,
                            eta: params.eta,
                            t: params.t,
                            loss: ctx.regularized_loss_unchecked(&avg, params.lambda),
                            bias: None,
                            iterate: avg,
                        });
                    }
                }
            },
        )?;
        k += params.t;
        seed = match config.update_rule {
            UpdateRule::Averaged => run.averaged,
            UpdateRule::BestIterate => run.best,
        };
        let bias = if config.estimate_bias {
            Some(estimate_bias_unchecked(ctx, &seed))
        } else {
            None
        };
        checkpoints.push(Checkpoint {
            kind: CheckpointKind::Stage,
            stage: s,
            k,
            lambda: params.lambda,
            eta: params.eta,
            t: params.t,
            loss: ctx.regularized_loss_unchecked(&seed, params.lambda),
            bias,
            iterate: seed.clone(),
        });
    }
    Ok(SolveTrace {
        checkpoints,
        final_w: seed,
    })
}

/// Offset `b = −(min_{y=+1} x·w + max_{y=−1} x·w) / 2` for the hyperplane `x·w + b = 0`.
pub fn estimate_bias(ctx: &LossContext, w: &[f64]) -> Result<f64> {
    ctx.check_dim(w)?;
    if !ctx.dataset().has_both_classes() {
        return Err(Error::SingleClass);
    }
    Ok(estimate_bias_unchecked(ctx, w))
}

fn estimate_bias_unchecked(ctx: &LossContext, w: &[f64]) -> f64 {
    let mut min_pos = f64::INFINITY;
    let mut max_neg = f64::NEG_INFINITY;
    for (x, y) in ctx.dataset().iter() {
        let v = linalg::dot(x, w);
        if y > 0.0 {
            min_pos = min_pos.min(v);
        } else {
            max_neg = max_neg.max(v);
        }
    }
    -(min_pos + max_neg) / 2.0
}
