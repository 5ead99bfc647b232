//! The invariant suite behind `homotopy-svm verify`.
//!
//! Every check reduces to inequalities `lhs <= rhs`; its `worst_slack` is the
//! smallest `rhs − lhs` seen, so a negative value names the size of the
//! violation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::Dataset;
use crate::error::{invalid, Result};
use crate::linalg;
use crate::losses::LossContext;
use crate::metrics::{self, BoundContext};
use crate::oracle::{self, OracleSolution};
use crate::schedule::SchedulePlan;
use crate::solver::{self, Horizon, SolverConfig};

/// Slack allowed on inequalities that hold exactly in real arithmetic.
pub const SLACK: f64 = 1e-9;
/// Slack on the iterate norm bound.
pub const NORM_SLACK: f64 = 1e-12;
/// Tolerance of the unit-vector identity for the angle gap.
pub const IDENTITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub worst_slack: f64,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub plan: SchedulePlan,
    pub horizon: Horizon,
    /// Regularization levels for the path checks.
    pub lambda_grid: Vec<f64>,
    /// Use this `w*` instead of the oracle's (the suite then checks it).
    pub w_star: Option<Vec<f64>>,
    pub lambda_prime_tol: f64,
    pub gap_samples: usize,
    pub seed: u64,
}

impl VerifyConfig {
    pub fn new(plan: SchedulePlan) -> Self {
        Self {
            plan,
            horizon: Horizon::Stages(40),
            lambda_grid: lambda_grid(0.05, 4.0, 0.05).expect("valid default grid"),
            w_star: None,
            lambda_prime_tol: 1e-6,
            gap_samples: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub w_star: Vec<f64>,
    pub lambda_prime: f64,
    pub lipschitz: f64,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> + '_ {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// `start, start + step, ...` up to `stop` inclusive, computed as `start + i·step`
/// and rounded to 12 decimals so grid points are the intended decimals.
pub fn lambda_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(start > 0.0 && step > 0.0 && stop >= start && stop.is_finite()) {
        return Err(invalid("grid", "need 0 < start <= stop and step > 0"));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

/// Tracks the smallest slack of one inequality family.
struct Tally {
    name: &'static str,
    worst: f64,
    worst_at: String,
    count: usize,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            worst: f64::INFINITY,
            worst_at: String::new(),
            count: 0,
        }
    }

    fn record(&mut self, lhs: f64, rhs: f64, at: impl FnOnce() -> String) {
        self.count += 1;
        let slack = rhs - lhs;
        // NaN counts as a violation
        if slack < self.worst || slack.is_nan() {
            self.worst = if slack.is_nan() {
                f64::NEG_INFINITY
            } else {
                slack
            };
            self.worst_at = format!("{} (lhs {lhs:e}, rhs {rhs:e})", at());
        }
    }

    fn finish(self, tolerance: f64) -> CheckResult {
        CheckResult {
            name: self.name,
            passed: self.count > 0 && self.worst >= -tolerance,
            worst_slack: self.worst,
            detail: if self.count == 0 {
                "no cases evaluated".to_string()
            } else {
                format!("{} cases, worst at {}", self.count, self.worst_at)
            },
        }
    }
}

/// Runs every check on `dataset`, which must be within the oracle caps.
pub fn run_suite(dataset: &Dataset, config: &VerifyConfig) -> Result<VerifyReport> {
    if config.lambda_grid.is_empty() || config.lambda_grid.iter().any(|&l| !(l > 0.0)) {
        return Err(invalid("grid", "need a nonempty grid of positive values"));
    }
    let ctx = LossContext::new(dataset.clone());
    let exact = oracle::exact_hard_margin(dataset)?;
    let w_star = match &config.w_star {
        Some(w) => {
            ctx.margins(w)?;
            w.clone()
        }
        None => exact.w.clone(),
    };
    let lambda_prime = oracle::estimate_lambda_prime(dataset, config.lambda_prime_tol)?;
    let l = ctx.lipschitz();

    let mut checks = vec![oracle_agreement(&ctx, &exact, &w_star)];

    let path: Vec<(f64, OracleSolution)> = config
        .lambda_grid
        .iter()
        .map(|&lambda| oracle::exact_regularized(dataset, lambda).map(|s| (lambda, s)))
        .collect::<Result<_>>()?;
    checks.push(lambda_prime_flat(dataset, lambda_prime, &w_star)?);
    checks.extend(path_checks(&ctx, &path, &w_star, lambda_prime));

    let bctx = BoundContext::new(l, lambda_prime, config.plan)?;
    checks.extend(solver_checks(&ctx, config, &bctx, &w_star)?);
    checks.push(gap_check(&ctx, &w_star, config)?);
    checks.push(bias_check(&ctx, &w_star, config)?);

    Ok(VerifyReport {
        w_star,
        lambda_prime,
        lipschitz: l,
        checks,
    })
}

fn oracle_agreement(ctx: &LossContext, exact: &OracleSolution, w_star: &[f64]) -> CheckResult {
    let mut t = Tally::new("oracle_agreement");
    t.record(linalg::distance(w_star, &exact.w), SLACK, || {
        format!("|w* - oracle| with oracle {:?}", exact.w)
    });
    t.record(
        exact.residual,
        SLACK * (1.0 + linalg::norm(&exact.w)),
        || "certificate residual".to_string(),
    );
    for (&j, &mu) in exact.active_set.iter().zip(&exact.duals) {
        t.record(-mu, oracle::DUAL_TOL, || format!("dual of point {j}"));
    }
    for (j, m) in ctx.margins_unchecked(w_star).enumerate() {
        t.record(1.0 - m, oracle::FEASIBILITY_TOL, || {
            format!("margin of point {j}")
        });
    }
    t.finish(0.0)
}

fn lambda_prime_flat(dataset: &Dataset, lambda_prime: f64, w_star: &[f64]) -> Result<CheckResult> {
    let mut t = Tally::new("lambda_prime_flat");
    let lambda = 0.99 * lambda_prime;
    let w = oracle::exact_regularized(dataset, lambda)?.w;
    t.record(
        linalg::distance(&w, w_star),
        oracle::SAME_SOLUTION_TOL,
        || format!("|w*_λ - w*| at λ = {lambda:e}"),
    );
    Ok(t.finish(0.0))
}

fn path_checks(
    ctx: &LossContext,
    path: &[(f64, OracleSolution)],
    w_star: &[f64],
    lambda_prime: f64,
) -> Vec<CheckResult> {
    let l = ctx.lipschitz();
    let mut certificate = Tally::new("oracle_certificate");
    let mut ball = Tally::new("minimizer_norm_bound");
    let mut pairwise = Tally::new("path_distance");
    let mut to_star = Tally::new("path_to_hard_margin");
    let mut monotone = Tally::new("objective_monotone");

    let mut prev: Option<(f64, f64)> = None;
    for (i, (lambda, sol)) in path.iter().enumerate() {
        let lambda = *lambda;
        certificate.record(sol.residual, SLACK * (1.0 + linalg::norm(&sol.w)), || {
            format!("residual at λ = {lambda}")
        });
        for &b in &sol.duals {
            certificate.record(-b, oracle::DUAL_TOL, || format!("β >= 0 at λ = {lambda}"));
            certificate.record(b, 1.0 + oracle::DUAL_TOL, || {
                format!("β <= 1 at λ = {lambda}")
            });
        }
        ball.record(linalg::norm(&sol.w), ctx.mean_norm() / lambda, || {
            format!("λ = {lambda}")
        });
        to_star.record(
            linalg::distance(&sol.w, w_star),
            l * lambda / (2.0 * lambda_prime * lambda_prime),
            || format!("λ = {lambda}"),
        );
        for (other, osol) in &path[i + 1..] {
            pairwise.record(
                linalg::distance(&sol.w, &osol.w),
                0.5 * l * (1.0 / lambda - 1.0 / other).abs(),
                || format!("λ = {lambda}, λ̃ = {other}"),
            );
        }
        let value = ctx.regularized_loss_unchecked(&sol.w, lambda);
        if let Some((pl, pv)) = prev {
            let ordered = if lambda > pl {
                (pv, value)
            } else {
                (value, pv)
            };
            monotone.record(ordered.0, ordered.1, || {
                format!("between λ = {pl} and {lambda}")
            });
        }
        prev = Some((lambda, value));
    }
    vec![
        certificate.finish(0.0),
        ball.finish(SLACK),
        pairwise.finish(SLACK),
        to_star.finish(SLACK),
        monotone.finish(SLACK),
    ]
}

fn solver_checks(
    ctx: &LossContext,
    config: &VerifyConfig,
    bctx: &BoundContext,
    w_star: &[f64],
) -> Result<Vec<CheckResult>> {
    let plan = config.plan;
    let l = ctx.lipschitz();
    let mut norm = Tally::new("iterate_norm_bound");
    let solver_config = SolverConfig::new(plan, config.horizon);
    let trace = solver::homotopic_solve_observed(ctx, &solver_config, |params, i, w| {
        norm.record(linalg::norm(w), ctx.mean_norm() / params.lambda, || {
            format!("stage {} step {i}", params.s)
        });
    })?;

    let mut radius = Tally::new("stage_seed_radius");
    let mut output = Tally::new("stage_output_distance");
    let mut dominance = Tally::new("theorem_bound_dominance");
    let mut seed = vec![0.0; ctx.dim()];
    for cp in trace.stages() {
        let s = cp.stage;
        let minimizer = oracle::exact_regularized(ctx.dataset(), cp.lambda)?.w;
        radius.record(
            linalg::distance(&seed, &minimizer),
            plan.radius(s, l),
            || format!("stage {s}"),
        );
        output.record(
            linalg::distance(&cp.iterate, &minimizer).powi(2),
            2.0 * plan.radius(s, l) * l / (cp.lambda * (cp.t as f64).sqrt()),
            || format!("stage {s}"),
        );
        dominance.record(
            linalg::distance(&cp.iterate, w_star),
            bctx.theorem_bound(cp.k),
            || format!("stage {s}, k = {}", cp.k),
        );
        seed.clone_from(&cp.iterate);
    }
    Ok(vec![
        norm.finish(NORM_SLACK),
        radius.finish(SLACK),
        output.finish(SLACK),
        dominance.finish(0.0),
    ])
}

fn random_direction(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let w: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        if linalg::norm(&w) > 0.0 {
            return w;
        }
    }
}

fn gap_check(ctx: &LossContext, w_star: &[f64], config: &VerifyConfig) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut t = Tally::new("gap_identities");
    let ns = linalg::norm(w_star);
    let max_norm = ctx.max_norm();
    for i in 0..config.gap_samples {
        let w = random_direction(&mut rng, ctx.dim());
        let nw = linalg::norm(&w);
        let angle = metrics::angle_gap(&w, w_star)?;
        let l2 = metrics::l2_error(&w, w_star)?;
        let margin = metrics::margin_gap(ctx, &w, w_star)?;
        let unit_diff: Vec<f64> = w.iter().zip(w_star).map(|(a, b)| a / nw - b / ns).collect();
        let identity = (linalg::dot(&unit_diff, &unit_diff) - 2.0 * angle).abs();
        t.record(identity, IDENTITY_TOL, || {
            format!("unit-vector identity, sample {i}")
        });
        t.record(angle, l2 * l2 / (2.0 * nw * ns) + IDENTITY_TOL, || {
            format!("angle bound, sample {i}")
        });
        t.record(
            margin,
            max_norm * (2.0 * angle).sqrt() + IDENTITY_TOL,
            || format!("margin bound, sample {i}"),
        );
        t.record(-margin, IDENTITY_TOL, || {
            format!("margin gap >= 0, sample {i}")
        });
    }
    Ok(t.finish(0.0))
}

/// `|b(w) − b(w*)| <= max_i ‖x_i‖ ‖w − w*‖` for random `w` near `w*`.
fn bias_check(ctx: &LossContext, w_star: &[f64], config: &VerifyConfig) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut t = Tally::new("bias_bound");
    let b_star = solver::estimate_bias(ctx, w_star)?;
    let scale = 0.1 * linalg::norm(w_star);
    for i in 0..100 {
        let mut w = w_star.to_vec();
        let dir = random_direction(&mut rng, ctx.dim());
        linalg::axpy(
            scale * rng.random::<f64>() / linalg::norm(&dir),
            &dir,
            &mut w,
        );
        let b = solver::estimate_bias(ctx, &w)?;
        t.record(
            (b - b_star).abs(),
            ctx.max_norm() * linalg::distance(&w, w_star),
            || format!("sample {i}"),
        );
    }
    Ok(t.finish(SLACK))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{paper_dataset, DEFAULT_FILLERS};

    fn plan() -> SchedulePlan {
        SchedulePlan::new(0.5, 2.0, 10).unwrap()
    }

    #[test]
    fn grid_hits_decimals() {
        let g = lambda_grid(0.05, 4.0, 0.05).unwrap();
        assert_eq!(g.len(), 80);
        assert_eq!(g[0], 0.05);
        assert_eq!(g[9], 0.5);
        assert_eq!(g[79], 4.0);
        assert!(lambda_grid(0.0, 1.0, 0.1).is_err());
        assert!(lambda_grid(1.0, 0.5, 0.1).is_err());
    }

    #[test]
    fn sixteen_point_set_passes() {
        let mut cfg = VerifyConfig::new(plan());
        cfg.horizon = Horizon::Stages(15);
        cfg.gap_samples = 200;
        let report = run_suite(&paper_dataset(&DEFAULT_FILLERS).unwrap(), &cfg).unwrap();
        for c in &report.checks {
            assert!(c.passed, "{c:?}");
        }
        assert!((report.lambda_prime - 0.5).abs() < 1e-5);
    }

    #[test]
    fn four_point_set_passes_with_its_lambda_prime() {
        let mut cfg = VerifyConfig::new(plan());
        cfg.horizon = Horizon::Stages(10);
        cfg.gap_samples = 100;
        let report = run_suite(&paper_dataset(&[]).unwrap(), &cfg).unwrap();
        assert!(
            report.passed(),
            "{:?}",
            report.failures().collect::<Vec<_>>()
        );
        assert!((report.lambda_prime - 2.0).abs() < 1e-5);
    }

    #[test]
    fn corrupted_w_star_fails_by_name() {
        let mut cfg = VerifyConfig::new(plan());
        cfg.horizon = Horizon::Stages(5);
        cfg.gap_samples = 50;
        cfg.w_star = Some(vec![0.6, 0.5]);
        let report = run_suite(&paper_dataset(&DEFAULT_FILLERS).unwrap(), &cfg).unwrap();
        assert!(!report.passed());
        let failed: Vec<&str> = report.failures().map(|c| c.name).collect();
        assert!(failed.contains(&"oracle_agreement"), "{failed:?}");
    }
}
