//! Hinge loss, the regularized objective `F_λ(w) = (λ/2)‖w‖² + mean_j h(y_j x_j·w)`,
//! its subgradient, and the logistic baseline objective.
//!
//! All functions are pure; a [`LossContext`] caches the signed points
//! `z_j = y_j x_j` and their norms.

use crate::dataset::Dataset;
use crate::error::{invalid, Error, Result};
use crate::linalg;

/// `h(u) = max(0, 1 - u)`.
#[inline]
pub fn hinge(u: f64) -> f64 {
    (1.0 - u).max(0.0)
}

/// Which points count as active in the hinge subgradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ActiveRule {
    /// `y_j x_j·w <= 1`, as in the stage update.
    #[default]
    Inclusive,
    /// `y_j x_j·w < 1`.
    Strict,
}

impl ActiveRule {
    #[inline]
    pub fn is_active(self, margin: f64) -> bool {
        match self {
            ActiveRule::Inclusive => margin <= 1.0,
            ActiveRule::Strict => margin < 1.0,
        }
    }
}

/// A dataset together with the constants derived from its norms.
#[derive(Debug, Clone)]
pub struct LossContext {
    dataset: Dataset,
    signed: Vec<f64>,
    norms: Vec<f64>,
    mean_norm: f64,
    lipschitz: f64,
}

impl LossContext {
    pub fn new(dataset: Dataset) -> Self {
        let signed = dataset.signed_points();
        let norms: Vec<f64> = dataset.iter().map(|(x, _)| linalg::norm(x)).collect();
        let mean_norm = norms.iter().sum::<f64>() / dataset.n() as f64;
        Self {
            dataset,
            signed,
            norms,
            mean_norm,
            lipschitz: 2.0 * mean_norm,
        }
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn n(&self) -> usize {
        self.dataset.n()
    }

    pub fn dim(&self) -> usize {
        self.dataset.dim()
    }

    /// `(1/n) Σ ‖x_j‖`.
    pub fn mean_norm(&self) -> f64 {
        self.mean_norm
    }

    /// `L = (2/n) Σ ‖x_j‖`, the Lipschitz bound of every `F_λ` on its iterate ball.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn max_norm(&self) -> f64 {
        self.norms.iter().copied().fold(0.0, f64::max)
    }

    /// `y_j x_j` for point `j`.
    pub fn signed_point(&self, j: usize) -> &[f64] {
        let d = self.dim();
        &self.signed[j * d..(j + 1) * d]
    }

    pub(crate) fn signed_points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.signed.chunks_exact(self.dim())
    }

    pub(crate) fn check_dim(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: w.len(),
            });
        }
        Ok(())
    }

    /// Margins `y_j x_j·w` for every point.
    pub fn margins(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(w)?;
        Ok(self.margins_unchecked(w).collect())
    }

    pub(crate) fn margins_unchecked<'a>(&'a self, w: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        self.signed_points().map(move |z| linalg::dot(z, w))
    }

    /// `𝓛(w) = (1/n) Σ h(y_j x_j·w)`.
    pub fn empirical_hinge(&self, w: &[f64]) -> Result<f64> {
        self.check_dim(w)?;
        Ok(self.empirical_hinge_unchecked(w))
    }

    pub(crate) fn empirical_hinge_unchecked(&self, w: &[f64]) -> f64 {
        self.margins_unchecked(w).map(hinge).sum::<f64>() / self.n() as f64
    }

    /// `F_λ(w) = (λ/2)‖w‖² + 𝓛(w)`.
    pub fn regularized_loss(&self, w: &[f64], lambda: f64) -> Result<f64> {
        check_lambda(lambda)?;
        self.check_dim(w)?;
        Ok(self.regularized_loss_unchecked(w, lambda))
    }

    pub(crate) fn regularized_loss_unchecked(&self, w: &[f64], lambda: f64) -> f64 {
        0.5 * lambda * linalg::dot(w, w) + self.empirical_hinge_unchecked(w)
    }

    /// `λw − (1/n) Σ_{active j} y_j x_j`.
    pub fn subgradient(&self, w: &[f64], lambda: f64, rule: ActiveRule) -> Result<Vec<f64>> {
        if !(lambda >= 0.0) {
            return Err(invalid("lambda", "must be nonnegative"));
        }
        self.check_dim(w)?;
        let mut g = linalg::scaled(lambda, w);
        let active = self.active_sum(w, rule);
        linalg::axpy(-1.0 / self.n() as f64, &active, &mut g);
        Ok(g)
    }

    /// `Σ_{active j} y_j x_j` (no `1/n` factor).
    pub(crate) fn active_sum(&self, w: &[f64], rule: ActiveRule) -> Vec<f64> {
        let mut sum = vec![0.0; self.dim()];
        for z in self.signed_points() {
            if rule.is_active(linalg::dot(z, w)) {
                linalg::axpy(1.0, z, &mut sum);
            }
        }
        sum
    }

    /// `B_λ = (Σ ‖x_j‖) / (λ n)`: radius of the ball that traps the iterates.
    pub fn iterate_norm_bound(&self, lambda: f64) -> Result<f64> {
        check_lambda(lambda)?;
        Ok(self.mean_norm / lambda)
    }

    /// Mean logistic loss `(1/n) Σ log(1 + exp(−y_j x_j·w))`.
    pub fn logistic_loss(&self, w: &[f64]) -> Result<f64> {
        self.check_dim(w)?;
        Ok(self.logistic_loss_unchecked(w))
    }

    pub(crate) fn logistic_loss_unchecked(&self, w: &[f64]) -> f64 {
        self.margins_unchecked(w).map(|m| softplus(-m)).sum::<f64>() / self.n() as f64
    }

    /// `−(1/n) Σ y_j x_j σ(−y_j x_j·w)`.
    pub fn logistic_gradient(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(w)?;
        Ok(self.logistic_gradient_unchecked(w))
    }

    pub(crate) fn logistic_gradient_unchecked(&self, w: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        let scale = -1.0 / self.n() as f64;
        for z in self.signed_points() {
            let weight = sigmoid(-linalg::dot(z, w));
            linalg::axpy(scale * weight, z, &mut g);
        }
        g
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(invalid("lambda", format!("must be positive, got {lambda}")))
    }
}

/// `log(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `1 / (1 + e^{-x})` without overflow.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
