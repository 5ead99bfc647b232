//! Exact ground truth for small problems by enumeration of activity patterns.
//!
//! Points with identical signed vectors `y_j x_j` always share their margin,
//! so both enumerations run over groups of identical signed points, each
//! carrying its multiplicity.
//!
//! * [`exact_hard_margin`] tries every set of at most `d` groups as the
//!   support, solves the minimum-norm `w` with those margins equal to one,
//!   and keeps the feasible candidate with nonnegative multipliers and
//!   smallest norm.
//! * [`exact_regularized`] assigns each group to inside (`margin < 1`), on
//!   (`= 1`) or outside (`> 1`), solves the stationarity system
//!   `λ n w = Σ_inside y_j x_j + Σ_on β_j y_j x_j` with the on-margin
//!   equalities, and keeps the pattern that reproduces itself with
//!   `β_j ∈ [0, 1]`.
//!
//! Sizes are capped: `n <= 24`, `d <= 6` for the hard-margin problem and at
//! most 16 distinct signed points (`3^16` patterns) for the regularized one.

use nalgebra::{DMatrix, DVector};

use crate::dataset::Dataset;
use crate::error::{invalid, Error, Result};
use crate::linalg;

pub const HARD_MARGIN_MAX_N: usize = 24;
pub const MAX_DIM: usize = 6;
pub const REGULARIZED_MAX_GROUPS: usize = 16;

/// Margin feasibility tolerance.
pub const FEASIBILITY_TOL: f64 = 1e-10;
/// Tolerance on dual nonnegativity and on `β ∈ [0, 1]`.
pub const DUAL_TOL: f64 = 1e-12;
/// Tolerance for reporting a point as on the margin.
pub const ACTIVE_TOL: f64 = 1e-9;
/// Two regularized solutions closer than this count as equal when locating `λ'`.
pub const SAME_SOLUTION_TOL: f64 = 1e-9;

const LAMBDA_MIN: f64 = 1e-9;
const LAMBDA_MAX: f64 = 1e6;
/// Largest rank-deficient on-margin set whose multipliers are searched exhaustively.
const MAX_DEGENERATE_ACTIVE: usize = 12;

/// An exact solution with its optimality certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub w: Vec<f64>,
    /// Points with `y_j x_j·w = 1` (within [`ACTIVE_TOL`]).
    pub active_set: Vec<usize>,
    /// Coefficient per entry of `active_set`: the multiplier `μ_j` in
    /// `w = Σ μ_j y_j x_j` for the hard-margin problem, `β_j ∈ [0,1]` for the
    /// regularized one.
    pub duals: Vec<f64>,
    /// Points strictly inside the margin (regularized problem only).
    pub inside: Vec<usize>,
    pub lambda: Option<f64>,
    /// Norm of the stationarity residual of the certificate.
    pub residual: f64,
}

#[derive(Debug)]
struct Group {
    z: Vec<f64>,
    members: Vec<usize>,
}

impl Group {
    fn count(&self) -> f64 {
        self.members.len() as f64
    }
}

fn group_signed_points(dataset: &Dataset) -> Vec<Group> {
    let mut groups: Vec<Group> = Vec::new();
    for (j, (x, y)) in dataset.iter().enumerate() {
        let z: Vec<f64> = x.iter().map(|v| y * v).collect();
        match groups.iter_mut().find(|g| g.z == z) {
            Some(g) => g.members.push(j),
            None => groups.push(Group {
                z,
                members: vec![j],
            }),
        }
    }
    groups
}

fn gram(vectors: &[&[f64]]) -> DMatrix<f64> {
    let a = vectors.len();
    DMatrix::from_fn(a, a, |i, j| linalg::dot(vectors[i], vectors[j]))
}

/// Solves a small square system, rejecting numerically singular matrices.
fn solve_square(matrix: DMatrix<f64>, rhs: DVector<f64>) -> Option<DVector<f64>> {
    let lu = matrix.full_piv_lu();
    let u = lu.u();
    let diag: Vec<f64> = (0..u.nrows()).map(|i| u[(i, i)].abs()).collect();
    let largest = diag.iter().copied().fold(0.0, f64::max);
    if largest == 0.0 || diag.iter().any(|&p| p <= 1e-12 * largest) {
        return None;
    }
    lu.solve(&rhs)
}

/// Indices (into `vectors`) of a greedily chosen maximal independent subset.
fn independent_subset(vectors: &[&[f64]]) -> Vec<usize> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut chosen = Vec::new();
    for (i, v) in vectors.iter().enumerate() {
        let mut r = v.to_vec();
        for b in &basis {
            let c = linalg::dot(&r, b);
            linalg::axpy(-c, b, &mut r);
        }
        let len = linalg::norm(&r);
        if len > 1e-10 * linalg::norm(v).max(f64::MIN_POSITIVE) {
            r.iter_mut().for_each(|c| *c /= len);
            basis.push(r);
            chosen.push(i);
        }
    }
    chosen
}

fn for_each_combination(m: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, m: usize, k: usize, buf: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if buf.len() == k {
            f(buf);
            return;
        }
        for i in start..m {
            if m - i < k - buf.len() {
                break;
            }
            buf.push(i);
            rec(i + 1, m, k, buf, f);
            buf.pop();
        }
    }
    rec(0, m, k, &mut Vec::with_capacity(k), f);
}

/// The hard-margin solution `argmin ‖w‖ s.t. y_j x_j·w >= 1`.
pub fn exact_hard_margin(dataset: &Dataset) -> Result<OracleSolution> {
    let (n, d) = (dataset.n(), dataset.dim());
    if n > HARD_MARGIN_MAX_N || d > MAX_DIM {
        return Err(Error::CapExceeded(format!(
            "hard-margin oracle supports n <= {HARD_MARGIN_MAX_N} and d <= {MAX_DIM}, got n = {n}, d = {d}"
        )));
    }
    let groups = group_signed_points(dataset);
    let m = groups.len();

    // (norm, w, support, duals)
    type Best = (f64, Vec<f64>, Vec<usize>, Vec<f64>);
    let mut best: Option<Best> = None;
    for size in 1..=d.min(m) {
        for_each_combination(m, size, &mut |subset: &[usize]| {
            let zs: Vec<&[f64]> = subset.iter().map(|&g| groups[g].z.as_slice()).collect();
            let Some(mu) = solve_square(gram(&zs), DVector::from_element(size, 1.0)) else {
                return;
            };
            if mu.iter().any(|&v| v < -DUAL_TOL) {
                return;
            }
            let mut w = vec![0.0; d];
            for (z, &c) in zs.iter().zip(mu.iter()) {
                linalg::axpy(c, z, &mut w);
            }
            let feasible = groups
                .iter()
                .all(|g| linalg::dot(&g.z, &w) >= 1.0 - FEASIBILITY_TOL);
            if !feasible {
                return;
            }
            let norm = linalg::norm(&w);
            if best.as_ref().is_none_or(|b| norm < b.0) {
                best = Some((norm, w, subset.to_vec(), mu.iter().copied().collect()));
            }
        });
    }
    let (_, w, support, mu) = best.ok_or(Error::NotSeparable)?;

    let mut active_set = Vec::new();
    let mut duals = Vec::new();
    for (gi, g) in groups.iter().enumerate() {
        if (linalg::dot(&g.z, &w) - 1.0).abs() > ACTIVE_TOL {
            continue;
        }
        let share = support
            .iter()
            .position(|&s| s == gi)
            .map_or(0.0, |pos| mu[pos] / g.count());
        for &j in &g.members {
            active_set.push(j);
            duals.push(share);
        }
    }
    let mut recon = vec![0.0; d];
    let signed = dataset.signed_points();
    for (&j, &c) in active_set.iter().zip(&duals) {
        linalg::axpy(c, &signed[j * d..(j + 1) * d], &mut recon);
    }
    let residual = linalg::distance(&w, &recon);
    active_set_sort(&mut active_set, &mut duals);
    Ok(OracleSolution {
        w,
        active_set,
        duals,
        inside: Vec::new(),
        lambda: None,
        residual,
    })
}

fn active_set_sort(idx: &mut Vec<usize>, vals: &mut Vec<f64>) {
    let mut pairs: Vec<(usize, f64)> = idx.iter().copied().zip(vals.iter().copied()).collect();
    pairs.sort_by_key(|p| p.0);
    *idx = pairs.iter().map(|p| p.0).collect();
    *vals = pairs.iter().map(|p| p.1).collect();
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Inside,
    On,
    Outside,
}

struct Candidate {
    objective: f64,
    w: Vec<f64>,
    pattern: Vec<Status>,
    /// Combined coefficient `Σ_{members} β_j` per on-margin group, in group order.
    weights: Vec<f64>,
}

/// The minimizer `w*_λ` of `F_λ(w) = (λ/2)‖w‖² + mean_j max(0, 1 − y_j x_j·w)`.
pub fn exact_regularized(dataset: &Dataset, lambda: f64) -> Result<OracleSolution> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid("lambda", format!("must be positive, got {lambda}")));
    }
    let d = dataset.dim();
    if d > MAX_DIM {
        return Err(Error::CapExceeded(format!(
            "regularized oracle supports d <= {MAX_DIM}, got {d}"
        )));
    }
    let groups = group_signed_points(dataset);
    let m = groups.len();
    if m > REGULARIZED_MAX_GROUPS {
        return Err(Error::CapExceeded(format!(
            "regularized oracle supports at most {REGULARIZED_MAX_GROUPS} distinct signed points, got {m}"
        )));
    }
    let n = dataset.n() as f64;
    let scale = lambda * n;

    let mut pattern = vec![Status::Inside; m];
    let mut best: Option<Candidate> = None;
    loop {
        if let Some(c) = try_pattern(&groups, &pattern, scale, d) {
            let objective = regularized_objective(&groups, &c.0, lambda, n);
            if best.as_ref().is_none_or(|b| objective < b.objective) {
                best = Some(Candidate {
                    objective,
                    w: c.0,
                    pattern: pattern.clone(),
                    weights: c.1,
                });
            }
        }
        // mixed-radix increment
        let mut i = 0;
        loop {
            if i == m {
                break;
            }
            pattern[i] = match pattern[i] {
                Status::Inside => Status::On,
                Status::On => Status::Outside,
                Status::Outside => Status::Inside,
            };
            if pattern[i] != Status::Inside {
                break;
            }
            i += 1;
        }
        if i == m {
            break;
        }
    }
    let best = best.ok_or(Error::NoConsistentPattern { lambda })?;

    let mut active_set = Vec::new();
    let mut duals = Vec::new();
    let mut inside = Vec::new();
    let mut stationarity = linalg::scaled(scale, &best.w);
    let mut on_index = 0;
    for (g, status) in groups.iter().zip(&best.pattern) {
        match status {
            Status::Inside => {
                inside.extend_from_slice(&g.members);
                linalg::axpy(-g.count(), &g.z, &mut stationarity);
            }
            Status::On => {
                let weight = best.weights[on_index];
                on_index += 1;
                for &j in &g.members {
                    active_set.push(j);
                    duals.push(weight / g.count());
                }
                linalg::axpy(-weight, &g.z, &mut stationarity);
            }
            Status::Outside => {}
        }
    }
    inside.sort_unstable();
    active_set_sort(&mut active_set, &mut duals);
    Ok(OracleSolution {
        w: best.w,
        active_set,
        duals,
        inside,
        lambda: Some(lambda),
        residual: linalg::norm(&stationarity) / n,
    })
}

fn regularized_objective(groups: &[Group], w: &[f64], lambda: f64, n: f64) -> f64 {
    let hinge: f64 = groups
        .iter()
        .map(|g| g.count() * crate::losses::hinge(linalg::dot(&g.z, w)))
        .sum();
    0.5 * lambda * linalg::dot(w, w) + hinge / n
}

/// Solves one activity pattern; returns `w` and the on-margin group weights
/// when the pattern is self-consistent.
fn try_pattern(
    groups: &[Group],
    pattern: &[Status],
    scale: f64,
    d: usize,
) -> Option<(Vec<f64>, Vec<f64>)> {
    let mut inside_sum = vec![0.0; d];
    let mut on: Vec<usize> = Vec::new();
    for (gi, (g, s)) in groups.iter().zip(pattern).enumerate() {
        match s {
            Status::Inside => linalg::axpy(g.count(), &g.z, &mut inside_sum),
            Status::On => on.push(gi),
            Status::Outside => {}
        }
    }

    let (w, weights) = if on.is_empty() {
        (linalg::scaled(1.0 / scale, &inside_sum), Vec::new())
    } else {
        let zs: Vec<&[f64]> = on.iter().map(|&g| groups[g].z.as_slice()).collect();
        let basis = independent_subset(&zs);
        let bz: Vec<&[f64]> = basis.iter().map(|&i| zs[i]).collect();
        let rhs = DVector::from_iterator(
            bz.len(),
            bz.iter().map(|z| scale - linalg::dot(z, &inside_sum)),
        );
        let gamma = solve_square(gram(&bz), rhs)?;
        let mut combo = vec![0.0; d];
        for (z, &c) in bz.iter().zip(gamma.iter()) {
            linalg::axpy(c, z, &mut combo);
        }
        let mut w = inside_sum.clone();
        linalg::axpy(1.0, &combo, &mut w);
        w.iter_mut().for_each(|c| *c /= scale);

        let caps: Vec<f64> = on.iter().map(|&g| groups[g].count()).collect();
        let weights = if basis.len() == on.len() {
            let ok = gamma
                .iter()
                .zip(&caps)
                .all(|(&g, &c)| g >= -DUAL_TOL * c && g <= (1.0 + DUAL_TOL) * c);
            if !ok {
                return None;
            }
            gamma.iter().copied().collect()
        } else {
            // every on-margin point must still sit on the margin
            if zs
                .iter()
                .any(|z| (linalg::dot(z, &w) - 1.0).abs() > FEASIBILITY_TOL)
            {
                return None;
            }
            box_weights(&zs, &caps, &combo, basis.len())?
        };
        (w, weights)
    };

    for (g, s) in groups.iter().zip(pattern) {
        let margin = linalg::dot(&g.z, &w);
        let consistent = match s {
            Status::Inside => margin <= 1.0 + FEASIBILITY_TOL,
            Status::Outside => margin >= 1.0 - FEASIBILITY_TOL,
            Status::On => true,
        };
        if !consistent {
            return None;
        }
    }
    Some((w, weights))
}

/// Finds `γ` with `Σ γ_i z_i = target` and `0 <= γ_i <= caps_i` for a
/// rank-deficient set, by checking every vertex of the box polytope: all but
/// `rank` coordinates at a bound, the rest solved from an independent subset.
fn box_weights(zs: &[&[f64]], caps: &[f64], target: &[f64], rank: usize) -> Option<Vec<f64>> {
    let a = zs.len();
    if a > MAX_DEGENERATE_ACTIVE {
        return None;
    }
    let tol = FEASIBILITY_TOL * (1.0 + linalg::norm(target));
    let mut found = None;
    for_each_combination(a, rank, &mut |free: &[usize]| {
        if found.is_some() {
            return;
        }
        let fz: Vec<&[f64]> = free.iter().map(|&i| zs[i]).collect();
        let g = gram(&fz);
        let fixed: Vec<usize> = (0..a).filter(|i| !free.contains(i)).collect();
        for mask in 0u32..(1 << fixed.len()) {
            let mut gamma = vec![0.0; a];
            let mut rest = target.to_vec();
            for (bit, &i) in fixed.iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    gamma[i] = caps[i];
                    linalg::axpy(-caps[i], zs[i], &mut rest);
                }
            }
            let rhs = DVector::from_iterator(rank, fz.iter().map(|z| linalg::dot(z, &rest)));
            let Some(sol) = solve_square(g.clone(), rhs) else {
                return;
            };
            let mut recon = vec![0.0; rest.len()];
            for (z, &c) in fz.iter().zip(sol.iter()) {
                linalg::axpy(c, z, &mut recon);
            }
            if linalg::distance(&recon, &rest) > tol {
                continue;
            }
            let in_box = free
                .iter()
                .zip(sol.iter())
                .all(|(&i, &c)| c >= -DUAL_TOL * caps[i] && c <= (1.0 + DUAL_TOL) * caps[i]);
            if in_box {
                for (&i, &c) in free.iter().zip(sol.iter()) {
                    gamma[i] = c;
                }
                found = Some(gamma);
                return;
            }
        }
    });
    found
}

/// Largest `λ` at which the regularized minimizer equals the hard-margin
/// solution, located by bisection to within `tol`.
pub fn estimate_lambda_prime(dataset: &Dataset, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    let w_star = exact_hard_margin(dataset)?.w;
    let flat = |lambda: f64| -> Result<bool> {
        let w = exact_regularized(dataset, lambda)?.w;
        Ok(linalg::distance(&w, &w_star) <= SAME_SOLUTION_TOL)
    };

    let (mut lo, mut hi) = if flat(1.0)? {
        let mut lo = 1.0;
        loop {
            let hi = lo * 2.0;
            if hi > LAMBDA_MAX {
                return Err(Error::BracketNotFound {
                    lo: 1.0,
                    hi: LAMBDA_MAX,
                });
            }
            if !flat(hi)? {
                break (lo, hi);
            }
            lo = hi;
        }
    } else {
        let mut hi = 1.0;
        loop {
            let lo = hi / 2.0;
            if lo < LAMBDA_MIN {
                return Err(Error::BracketNotFound {
                    lo: LAMBDA_MIN,
                    hi: 1.0,
                });
            }
            if flat(lo)? {
                break (lo, hi);
            }
            hi = lo;
        }
    };
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if flat(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
