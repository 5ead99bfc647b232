//! Command-line experiment runner.
//!
//! Every emitted file starts with a `# key=value` block holding the full
//! configuration, so `homotopy-svm replay FILE` regenerates it byte for byte.
//! Exit codes: 0 success, 1 failed verification, 2 usage or I/O error.

mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::{fmt_f64, CommandKind, DataSource, RunConfig};

use crate::dataset::{self, Dataset};
use crate::error::{Error, Result};
use crate::losses::{ActiveRule, LossContext};
use crate::metrics::{self, BoundContext};
use crate::oracle;
use crate::solver::{self, Checkpoint, Horizon, StepMode, UpdateRule};
use crate::verify::{self, VerifyConfig};

/// Tolerance used when locating `λ'` for trace headers and bounds.
pub const LAMBDA_PRIME_TOL: f64 = 1e-6;

pub const TRACE_HEADER: &str =
    "stage,k,lambda,eta,t,loss,l2_error,angle_gap,margin_gap,theorem_bound,bias";
pub const COMPARE_HEADER: &str = "stage,k,hinge_loss,hinge_l2_error,hinge_angle_gap,hinge_margin_gap,logistic_loss,logistic_angle_gap,logistic_margin_gap";

#[derive(Debug, Parser)]
#[command(
    name = "homotopy-svm",
    version,
    about = "Homotopic subgradient method for the hard-margin SVM"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a generated dataset as CSV
    Gen(GenArgs),
    /// Run the homotopic method and write a trace
    Run(RunArgs),
    /// Run logistic gradient descent at the same checkpoints
    Baseline(RunArgs),
    /// Run both methods and join their gaps by update count
    Compare(RunArgs),
    /// Check the invariant suite against the exact oracles
    Verify(VerifyArgs),
    /// Regenerate a file from its own header
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Generator {
    Paper,
    Scaled,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UpdateArg {
    Averaged,
    Best,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StepArg {
    Plain,
    Normalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ActiveArg {
    Inclusive,
    Strict,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset CSV (`y,x1,...,xd`); overrides --generator
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Generator::Paper)]
    pub generator: Generator,
    /// Filler multipliers of the canonical set, comma separated (may be empty)
    #[arg(long, default_value = "2,3,4")]
    pub fillers: String,
    /// Coordinate scaled by the `scaled` generator
    #[arg(long, default_value_t = 1)]
    pub axis: usize,
    #[arg(long, default_value_t = 20.0)]
    pub factor: f64,
    /// Points drawn by the `random` generator
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 0.1)]
    pub margin: f64,
    #[arg(long, default_value_t = 0)]
    pub data_seed: u64,
}

impl DataArgs {
    fn source(&self) -> Result<DataSource> {
        if let Some(path) = &self.data {
            return Ok(DataSource::File(path.clone()));
        }
        let fillers = config::parse_list(&self.fillers, "fillers")?;
        Ok(match self.generator {
            Generator::Paper => DataSource::Paper { fillers },
            Generator::Scaled => DataSource::Scaled {
                fillers,
                axis: self.axis,
                factor: self.factor,
            },
            Generator::Random => DataSource::Random {
                n: self.n,
                dim: self.dim,
                margin: self.margin,
                seed: self.data_seed,
            },
        })
    }
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    #[arg(long, default_value_t = 2.0)]
    pub r: f64,
    #[arg(long, default_value_t = 10)]
    pub s0: u32,
    /// Number of stages (default 40)
    #[arg(long, conflicts_with = "budget")]
    pub stages: Option<usize>,
    /// Total update budget; runs the largest whole number of stages that fits
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long, value_enum, default_value_t = UpdateArg::Averaged)]
    pub update: UpdateArg,
    #[arg(long, value_enum, default_value_t = StepArg::Plain)]
    pub step: StepArg,
    #[arg(long, value_enum, default_value_t = ActiveArg::Inclusive)]
    pub active: ActiveArg,
    /// Reference solution, comma separated; replaces the oracle's `w*`
    #[arg(long)]
    pub w_star: Option<String>,
}

impl PlanArgs {
    fn apply(&self, c: &mut RunConfig) -> Result<()> {
        c.p = self.p;
        c.r = self.r;
        c.s0 = self.s0;
        c.horizon = match (self.stages, self.budget) {
            (_, Some(k)) => Horizon::Budget(k),
            (Some(s), None) => Horizon::Stages(s),
            (None, None) => Horizon::Stages(40),
        };
        c.update_rule = match self.update {
            UpdateArg::Averaged => UpdateRule::Averaged,
            UpdateArg::Best => UpdateRule::BestIterate,
        };
        c.step_mode = match self.step {
            StepArg::Plain => StepMode::Plain,
            StepArg::Normalized => StepMode::Normalized,
        };
        c.active_rule = match self.active {
            ActiveArg::Inclusive => ActiveRule::Inclusive,
            ActiveArg::Strict => ActiveRule::Strict,
        };
        c.w_star = self
            .w_star
            .as_deref()
            .map(|s| config::parse_list(s, "w_star"))
            .transpose()?;
        c.plan()?;
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub plan: PlanArgs,
    /// Report the hyperplane offset estimate per checkpoint
    #[arg(long)]
    pub bias: bool,
    /// Skip the exact oracles (needed beyond their size caps)
    #[arg(long)]
    pub no_exact: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub plan: PlanArgs,
    /// `λ` grid as start:stop:step
    #[arg(long, default_value = "0.05:4.0:0.05")]
    pub grid: String,
    /// Random vectors for the gap checks
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// A file written by this program
    pub file: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Cli {
    /// Resolves the arguments into a configuration and an output path.
    pub fn resolve(&self) -> Result<(RunConfig, Option<PathBuf>)> {
        match &self.command {
            Command::Gen(a) => Ok((
                RunConfig::new(CommandKind::Gen, a.data.source()?),
                a.out.clone(),
            )),
            Command::Run(a) | Command::Baseline(a) | Command::Compare(a) => {
                let kind = match self.command {
                    Command::Run(_) => CommandKind::Run,
                    Command::Baseline(_) => CommandKind::Baseline,
                    _ => CommandKind::Compare,
                };
                let mut c = RunConfig::new(kind, a.data.source()?);
                a.plan.apply(&mut c)?;
                c.bias = a.bias;
                c.exact = !a.no_exact;
                Ok((c, a.out.clone()))
            }
            Command::Verify(a) => {
                let mut c = RunConfig::new(CommandKind::Verify, a.data.source()?);
                a.plan.apply(&mut c)?;
                c.grid = config::parse_grid(&a.grid)?;
                verify::lambda_grid(c.grid.0, c.grid.1, c.grid.2)?;
                c.samples = a.samples;
                c.seed = a.seed;
                Ok((c, a.out.clone()))
            }
            Command::Replay(a) => {
                let text = std::fs::read_to_string(&a.file).map_err(|source| Error::Io {
                    path: a.file.clone(),
                    source,
                })?;
                Ok((RunConfig::from_header(&text)?, a.out.clone()))
            }
        }
    }
}

/// The text a command produces and whether its checks passed.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub text: String,
    pub success: bool,
}

pub fn execute(config: &RunConfig) -> Result<Outcome> {
    let data = config.data.load()?;
    let mut text = config.header();
    let success = match config.command {
        CommandKind::Gen => {
            text.push_str(&dataset::to_csv_string(&data));
            true
        }
        CommandKind::Run => {
            run_trace(config, &data, &mut text)?;
            true
        }
        CommandKind::Baseline => {
            baseline_trace(config, &data, &mut text)?;
            true
        }
        CommandKind::Compare => {
            compare_trace(config, &data, &mut text)?;
            true
        }
        CommandKind::Verify => verify_report(config, &data, &mut text)?,
    };
    Ok(Outcome { text, success })
}

/// Reference quantities shared by the trace commands.
struct Reference {
    w_star: Option<Vec<f64>>,
    bound: Option<BoundContext>,
}

fn reference(config: &RunConfig, ctx: &LossContext, text: &mut String) -> Result<Reference> {
    let _ = writeln!(text, "# lipschitz={}", fmt_f64(ctx.lipschitz()));
    let mut w_star = config.w_star.clone();
    let mut bound = None;
    if let Some(w) = &w_star {
        ctx.margins(w)?;
    }
    if config.exact {
        if w_star.is_none() {
            w_star = Some(oracle::exact_hard_margin(ctx.dataset())?.w);
        }
        let lambda_prime = oracle::estimate_lambda_prime(ctx.dataset(), LAMBDA_PRIME_TOL)?;
        let _ = writeln!(text, "# lambda_prime={}", fmt_f64(lambda_prime));
        bound = Some(BoundContext::new(
            ctx.lipschitz(),
            lambda_prime,
            config.plan()?,
        )?);
    }
    if let Some(w) = &w_star {
        let _ = writeln!(text, "# w_star={}", config::join(w, |v| fmt_f64(*v)));
    }
    Ok(Reference { w_star, bound })
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Gap metrics, absent for the zero vector.
fn gaps(
    ctx: &LossContext,
    w: &[f64],
    w_star: Option<&[f64]>,
) -> (Option<f64>, Option<f64>, Option<f64>) {
    let Some(ws) = w_star else {
        return (None, None, None);
    };
    (
        metrics::l2_error(w, ws).ok(),
        metrics::angle_gap(w, ws).ok(),
        metrics::margin_gap(ctx, w, ws).ok(),
    )
}

fn write_row(
    text: &mut String,
    cp: &Checkpoint,
    lambda: Option<f64>,
    ctx: &LossContext,
    r: &Reference,
) {
    let (l2, angle, margin) = gaps(ctx, &cp.iterate, r.w_star.as_deref());
    let bound = r.bound.as_ref().map(|b| b.theorem_bound(cp.k));
    let _ = writeln!(
        text,
        "{},{},{},{},{},{},{},{},{},{},{}",
        cp.stage,
        cp.k,
        opt(lambda),
        fmt_f64(cp.eta),
        cp.t,
        fmt_f64(cp.loss),
        opt(l2),
        opt(angle),
        opt(margin),
        opt(bound),
        opt(cp.bias),
    );
}

fn run_trace(config: &RunConfig, data: &Dataset, text: &mut String) -> Result<()> {
    let ctx = LossContext::new(data.clone());
    let r = reference(config, &ctx, text)?;
    let trace = solver::homotopic_solve(&ctx, &config.solver_config()?)?;
    text.push_str(TRACE_HEADER);
    text.push('\n');
    for cp in trace.stages() {
        write_row(text, cp, Some(cp.lambda), &ctx, &r);
    }
    Ok(())
}

/// Update counts at the stage boundaries of the configured schedule.
fn stage_ks(config: &RunConfig) -> Result<Vec<u64>> {
    let solver_config = config.solver_config()?;
    let plan = solver_config.plan;
    let mut k = 0;
    Ok((0..solver_config.stage_count()?)
        .map(|s| {
            k += plan.inner_steps(s);
            k
        })
        .collect())
}

fn logistic_run(
    config: &RunConfig,
    ctx: &LossContext,
    text: &mut String,
) -> Result<solver::SolveTrace> {
    let ks = stage_ks(config)?;
    let sigma = solver::sigma_max(ctx, solver::DEFAULT_SIGMA_TOL)?;
    let _ = writeln!(text, "# sigma_max={}", fmt_f64(sigma));
    let mut trace = solver::logistic_gd(ctx, *ks.last().expect("at least one stage"), &ks)?;
    if config.bias {
        for cp in &mut trace.checkpoints {
            cp.bias = Some(solver::estimate_bias(ctx, &cp.iterate)?);
        }
    }
    Ok(trace)
}

fn baseline_trace(config: &RunConfig, data: &Dataset, text: &mut String) -> Result<()> {
    let ctx = LossContext::new(data.clone());
    let mut r = reference(config, &ctx, text)?;
    // the bound speaks about the hinge method only
    r.bound = None;
    let trace = logistic_run(config, &ctx, text)?;
    text.push_str(TRACE_HEADER);
    text.push('\n');
    for cp in &trace.checkpoints {
        write_row(text, cp, None, &ctx, &r);
    }
    Ok(())
}

fn compare_trace(config: &RunConfig, data: &Dataset, text: &mut String) -> Result<()> {
    let ctx = LossContext::new(data.clone());
    let r = reference(config, &ctx, text)?;
    let hinge = solver::homotopic_solve(&ctx, &config.solver_config()?)?;
    let logistic = logistic_run(config, &ctx, text)?;
    text.push_str(COMPARE_HEADER);
    text.push('\n');
    let ws = r.w_star.as_deref();
    for (h, l) in hinge.stages().zip(&logistic.checkpoints) {
        debug_assert_eq!(h.k, l.k);
        let (hl2, ha, hm) = gaps(&ctx, &h.iterate, ws);
        let (_, la, lm) = gaps(&ctx, &l.iterate, ws);
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{},{},{}",
            h.stage,
            h.k,
            fmt_f64(h.loss),
            opt(hl2),
            opt(ha),
            opt(hm),
            fmt_f64(l.loss),
            opt(la),
            opt(lm),
        );
    }
    Ok(())
}

fn verify_report(config: &RunConfig, data: &Dataset, text: &mut String) -> Result<bool> {
    let mut vc = VerifyConfig::new(config.plan()?);
    vc.horizon = config.horizon;
    let (a, b, c) = config.grid;
    vc.lambda_grid = verify::lambda_grid(a, b, c)?;
    vc.w_star = config.w_star.clone();
    vc.lambda_prime_tol = LAMBDA_PRIME_TOL;
    vc.gap_samples = config.samples;
    vc.seed = config.seed;
    let report = verify::run_suite(data, &vc)?;
    let _ = writeln!(text, "# lipschitz={}", fmt_f64(report.lipschitz));
    let _ = writeln!(text, "# lambda_prime={}", fmt_f64(report.lambda_prime));
    let _ = writeln!(
        text,
        "# w_star={}",
        config::join(&report.w_star, |v| fmt_f64(*v))
    );
    for check in &report.checks {
        let _ = writeln!(
            text,
            "{} {} worst_slack={} {}",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            fmt_f64(check.worst_slack),
            check.detail
        );
    }
    let _ = writeln!(
        text,
        "{}",
        if report.passed() {
            "all checks passed"
        } else {
            "verification FAILED"
        }
    );
    Ok(report.passed())
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> ExitCode {
    let result = cli.resolve().and_then(|(config, out)| {
        let outcome = execute(&config)?;
        emit(&outcome.text, out.as_deref())?;
        if !outcome.success {
            for line in outcome.text.lines().filter(|l| l.starts_with("FAIL")) {
                eprintln!("{line}");
            }
        }
        Ok(outcome.success)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::CapExceeded(_)) {
                eprintln!("hint: pass --no-exact to skip the exact oracles");
            }
            ExitCode::from(2)
        }
    }
}
