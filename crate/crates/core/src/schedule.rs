//! Stage schedule of the homotopic method.
//!
//! For parameters `0 < p < 1`, `r > 2p` and an integer `s0 > 2`:
//!
//! ```text
//! ε₀ = (ln s0 − ln(s0 − 1)) / ln s0
//! α  = min((r − 2p) / (2(1 + ε₀)), 1 − p)
//! C  = max(4, (s0 − 1)^α / (2 λ₀)),       λ₀ = s0^(−p)
//!
//! λ_s = (s0 + s)^(−p)
//! t_s = round((s0 + s)^r)
//! η_s = C (s0 + s − 1)^(−α) / √t_s
//! R_s = C L (s0 + s − 1)^(−α)
//! ```

use crate::error::{invalid, Result};

/// Derived constants of a schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchedulePlan {
    p: f64,
    r: f64,
    s0: u32,
    epsilon0: f64,
    alpha: f64,
    big_c: f64,
}

/// Parameters of one stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageParams {
    pub s: usize,
    pub lambda: f64,
    pub t: u64,
    pub eta: f64,
}

impl SchedulePlan {
    pub fn new(p: f64, r: f64, s0: u32) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(invalid("p", format!("need 0 < p < 1, got {p}")));
        }
        if !(r > 2.0 * p && r.is_finite()) {
            return Err(invalid("r", format!("need r > 2p = {}, got {r}", 2.0 * p)));
        }
        if s0 <= 2 {
            return Err(invalid("s0", format!("need an integer s0 > 2, got {s0}")));
        }
        let s0f = f64::from(s0);
        let epsilon0 = (s0f.ln() - (s0f - 1.0).ln()) / s0f.ln();
        let alpha = ((r - 2.0 * p) / (2.0 * (1.0 + epsilon0))).min(1.0 - p);
        let lambda0 = s0f.powf(-p);
        let big_c = f64::max(4.0, (s0f - 1.0).powf(alpha) / (2.0 * lambda0));
        Ok(Self {
            p,
            r,
            s0,
            epsilon0,
            alpha,
            big_c,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn s0(&self) -> u32 {
        self.s0
    }

    pub fn epsilon0(&self) -> f64 {
        self.epsilon0
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn big_c(&self) -> f64 {
        self.big_c
    }

    fn base(&self, s: usize) -> f64 {
        f64::from(self.s0) + s as f64
    }

    pub fn lambda(&self, s: usize) -> f64 {
        self.base(s).powf(-self.p)
    }

    /// `(s0 + s)^r` rounded half-to-even; exact for integral `r`.
    pub fn inner_steps(&self, s: usize) -> u64 {
        let base = self.base(s);
        let raw = if self.r.fract() == 0.0 && self.r <= f64::from(i32::MAX) {
            base.powi(self.r as i32)
        } else {
            base.powf(self.r)
        };
        raw.round_ties_even().max(1.0) as u64
    }

    pub fn stage(&self, s: usize) -> StageParams {
        let t = self.inner_steps(s);
        StageParams {
            s,
            lambda: self.lambda(s),
            t,
            eta: self.big_c * (self.base(s) - 1.0).powf(-self.alpha) / (t as f64).sqrt(),
        }
    }

    /// `R_s = C L (s0 + s − 1)^(−α)`.
    pub fn radius(&self, s: usize, lipschitz: f64) -> f64 {
        self.big_c * lipschitz * (self.base(s) - 1.0).powf(-self.alpha)
    }

    /// Total inner updates of stages `0..stages`.
    pub fn cumulative_updates(&self, stages: usize) -> u64 {
        (0..stages).map(|s| self.inner_steps(s)).sum()
    }

    /// Largest `S` with `Σ_{s<S} t_s <= budget`, together with that sum.
    pub fn budget_to_stages(&self, budget: u64) -> Result<(usize, u64)> {
        let t0 = self.inner_steps(0);
        if budget < t0 {
            return Err(invalid(
                "budget",
                format!("budget {budget} is smaller than the first stage ({t0} updates)"),
            ));
        }
        let mut stages = 0;
        let mut k = 0u64;
        loop {
            let next = k + self.inner_steps(stages);
            if next > budget {
                return Ok((stages, k));
            }
            k = next;
            stages += 1;
        }
    }
}
