use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::losses::LossContext;

use super::{Checkpoint, CheckpointKind, SolveTrace};

/// Relative tolerance used for the baseline step size.
pub const DEFAULT_SIGMA_TOL: f64 = 1e-12;

const MAX_POWER_ITERATIONS: usize = 100_000;

/// Largest singular value of the `n × d` data matrix, by power iteration on `XᵀX`.
///
/// Iterates from the normalized all-ones vector and from a fixed
/// alternating-sign vector and keeps the larger value, so a start that is
/// orthogonal to the top eigenvector cannot hide it.
pub fn sigma_max(ctx: &LossContext, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    let d = ctx.dim();
    let mut gram = vec![0.0; d * d];
    for (x, _) in ctx.dataset().iter() {
        for a in 0..d {
            for b in 0..d {
                gram[a * d + b] += x[a] * x[b];
            }
        }
    }
    if gram.iter().all(|&g| g == 0.0) {
        return Err(invalid("dataset", "all points are zero"));
    }

    let ones = vec![1.0; d];
    let perturbed: Vec<f64> = (0..d)
        .map(|i| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sign * (1.0 + i as f64 / (d as f64 + 1.0))
        })
        .collect();
    let mut best = 0.0f64;
    for start in [ones, perturbed] {
        best = best.max(power_iteration(&gram, d, start, tol)?);
    }
    Ok(best.sqrt())
}

fn power_iteration(gram: &[f64], d: usize, mut v: Vec<f64>, tol: f64) -> Result<f64> {
    let apply = |v: &[f64]| -> Vec<f64> {
        (0..d)
            .map(|a| linalg::dot(&gram[a * d..(a + 1) * d], v))
            .collect()
    };
    let len = linalg::norm(&v);
    v.iter_mut().for_each(|c| *c /= len);
    let mut mu = 0.0;
    let mut settled = 0;
    for _ in 0..MAX_POWER_ITERATIONS {
        let av = apply(&v);
        let next_mu = linalg::dot(&v, &av);
        let len = linalg::norm(&av);
        if len == 0.0 {
            return Ok(0.0);
        }
        if (next_mu - mu).abs() <= tol * next_mu {
            settled += 1;
            if settled >= 2 {
                return Ok(next_mu);
            }
        } else {
            settled = 0;
        }
        mu = next_mu;
        v = av.into_iter().map(|c| c / len).collect();
    }
    Err(Error::NotConverged {
        iterations: MAX_POWER_ITERATIONS,
    })
}

/// Fixed-step gradient descent on the mean logistic loss from `w = 0`, with
/// `η = 1/σ_max(X)`. A checkpoint is recorded after each listed update count.
pub fn logistic_gd(ctx: &LossContext, iterations: u64, checkpoints: &[u64]) -> Result<SolveTrace> {
    if iterations == 0 {
        return Err(invalid("iterations", "need at least one iteration"));
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("checkpoints", "must be strictly increasing"));
    }
    if checkpoints.iter().any(|&k| k == 0 || k > iterations) {
        return Err(invalid("checkpoints", "must lie in 1..=iterations"));
    }
    let eta = 1.0 / sigma_max(ctx, DEFAULT_SIGMA_TOL)?;
    let mut w = vec![0.0; ctx.dim()];
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut pending = checkpoints.iter().copied().peekable();
    let mut prev_k = 0;
    for k in 1..=iterations {
        let g = ctx.logistic_gradient_unchecked(&w);
        linalg::axpy(-eta, &g, &mut w);
        if pending.peek() == Some(&k) {
            pending.next();
            out.push(Checkpoint {
                kind: CheckpointKind::Stage,
                stage: out.len(),
                k,
                lambda: 0.0,
                eta,
                t: k - prev_k,
                iterate: w.clone(),
                loss: ctx.logistic_loss_unchecked(&w),
                bias: None,
            });
            prev_k = k;
        }
    }
    Ok(SolveTrace {
        checkpoints: out,
        final_w: w,
    })
}
