//! Homotopic averaged subgradient method for the hard-margin linear SVM.
//!
//! The solver follows a decreasing sequence of regularization strengths
//! `λ_s` and runs an averaged subgradient method on each regularized hinge
//! objective, warm-started from the previous stage. Exact oracles for small
//! problems supply ground truth for the convergence checks.
//!
//! ```
//! use homotopy_svm::{dataset, losses::LossContext, schedule::SchedulePlan, solver};
//!
//! let ctx = LossContext::new(dataset::paper_dataset(&[2, 3, 4])?);
//! let plan = SchedulePlan::new(0.5, 2.0, 10)?;
//! let config = solver::SolverConfig::new(plan, solver::Horizon::Stages(20));
//! let trace = solver::homotopic_solve(&ctx, &config)?;
//! assert!((trace.final_w[0] - 0.5).abs() < 0.05);
//! # Ok::<(), homotopy_svm::Error>(())
//! ```

// `!(x > 0.0)` is used on purpose so NaN lands in the error branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod error;

pub mod cli;
pub mod dataset;
pub mod linalg;
pub mod losses;
pub mod metrics;
pub mod oracle;
pub mod schedule;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/objective.md")]
    struct Objective;
    #[doc = include_str!("../../../book/src/schedule.md")]
    struct Schedule;
    #[doc = include_str!("../../../book/src/solver.md")]
    struct Solver;
    #[doc = include_str!("../../../book/src/oracle.md")]
    struct Oracle;
    #[doc = include_str!("../../../book/src/metrics.md")]
    struct Metrics;
    #[doc = include_str!("../../../book/src/datasets.md")]
    struct Datasets;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
