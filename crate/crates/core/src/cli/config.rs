//! The resolved configuration of one CLI invocation and its `# key=value`
//! header form.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::dataset::{self, Dataset};
use crate::error::{invalid, Error, Result};
use crate::losses::ActiveRule;
use crate::schedule::SchedulePlan;
use crate::solver::{Horizon, SolverConfig, StepMode, UpdateRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Gen,
    Run,
    Baseline,
    Compare,
    Verify,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Gen => "gen",
            Self::Run => "run",
            Self::Baseline => "baseline",
            Self::Compare => "compare",
            Self::Verify => "verify",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "gen" => Self::Gen,
            "run" => Self::Run,
            "baseline" => Self::Baseline,
            "compare" => Self::Compare,
            "verify" => Self::Verify,
            _ => return Err(invalid("command", format!("unknown command `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    File(PathBuf),
    Paper {
        fillers: Vec<u32>,
    },
    Scaled {
        fillers: Vec<u32>,
        axis: usize,
        factor: f64,
    },
    Random {
        n: usize,
        dim: usize,
        margin: f64,
        seed: u64,
    },
}

impl DataSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            Self::File(path) => dataset::read_csv(path),
            Self::Paper { fillers } => dataset::paper_dataset(fillers),
            Self::Scaled {
                fillers,
                axis,
                factor,
            } => dataset::scaled_dataset(&dataset::paper_dataset(fillers)?, *axis, *factor),
            Self::Random {
                n,
                dim,
                margin,
                seed,
            } => dataset::random_separable(*seed, *n, *dim, *margin),
        }
    }
}

/// Everything that determines a command's output.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub data: DataSource,
    pub p: f64,
    pub r: f64,
    pub s0: u32,
    pub horizon: Horizon,
    pub update_rule: UpdateRule,
    pub step_mode: StepMode,
    pub active_rule: ActiveRule,
    pub bias: bool,
    /// Compute `w*` and `λ'` with the exact oracles.
    pub exact: bool,
    pub w_star: Option<Vec<f64>>,
    /// `(start, stop, step)` of the `λ` grid used by `verify`.
    pub grid: (f64, f64, f64),
    pub samples: usize,
    pub seed: u64,
}

impl RunConfig {
    pub fn new(command: CommandKind, data: DataSource) -> Self {
        Self {
            command,
            data,
            p: 0.5,
            r: 2.0,
            s0: 10,
            horizon: Horizon::Stages(40),
            update_rule: UpdateRule::Averaged,
            step_mode: StepMode::Plain,
            active_rule: ActiveRule::Inclusive,
            bias: false,
            exact: true,
            w_star: None,
            grid: (0.05, 4.0, 0.05),
            samples: 1000,
            seed: 0,
        }
    }

    pub fn plan(&self) -> Result<SchedulePlan> {
        SchedulePlan::new(self.p, self.r, self.s0)
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let mut c = SolverConfig::new(self.plan()?, self.horizon);
        c.update_rule = self.update_rule;
        c.step_mode = self.step_mode;
        c.active_rule = self.active_rule;
        c.estimate_bias = self.bias;
        Ok(c)
    }

    /// The configuration as `# key=value` lines.
    pub fn header(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(out, "# {k}={v}");
        };
        line("command", self.command.name().into());
        match &self.data {
            DataSource::File(path) => line("data", format!("file:{}", path.display())),
            DataSource::Paper { fillers } => {
                line("data", "paper".into());
                line("fillers", join(fillers, |m| m.to_string()));
            }
            DataSource::Scaled {
                fillers,
                axis,
                factor,
            } => {
                line("data", "scaled".into());
                line("fillers", join(fillers, |m| m.to_string()));
                line("axis", axis.to_string());
                line("factor", fmt_f64(*factor));
            }
            DataSource::Random {
                n,
                dim,
                margin,
                seed,
            } => {
                line("data", "random".into());
                line("n", n.to_string());
                line("dim", dim.to_string());
                line("margin", fmt_f64(*margin));
                line("data_seed", seed.to_string());
            }
        }
        if self.command == CommandKind::Gen {
            return out;
        }
        line("p", fmt_f64(self.p));
        line("r", fmt_f64(self.r));
        line("s0", self.s0.to_string());
        match self.horizon {
            Horizon::Stages(s) => line("stages", s.to_string()),
            Horizon::Budget(k) => line("budget", k.to_string()),
        }
        line("update", update_name(self.update_rule).into());
        line("step", step_name(self.step_mode).into());
        line("active", active_name(self.active_rule).into());
        line("bias", self.bias.to_string());
        line("exact", self.exact.to_string());
        if let Some(w) = &self.w_star {
            line("w_star_override", join(w, |v| fmt_f64(*v)));
        }
        if self.command == CommandKind::Verify {
            let (a, b, c) = self.grid;
            line(
                "grid",
                format!("{}:{}:{}", fmt_f64(a), fmt_f64(b), fmt_f64(c)),
            );
            line("samples", self.samples.to_string());
            line("seed", self.seed.to_string());
        }
        out
    }

    /// Parses the leading `# key=value` block of an emitted file. Keys this
    /// configuration does not own (derived quantities) are ignored.
    pub fn from_header(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let Some(body) = raw.strip_prefix('#') else {
                break;
            };
            let (k, v) = body.trim().split_once('=').ok_or_else(|| Error::Parse {
                path: PathBuf::from("<header>"),
                line: i as u64 + 1,
                message: format!("expected `# key=value`, got `{raw}`"),
            })?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let get = |k: &str| {
            pairs
                .iter()
                .find(|(pk, _)| pk == k)
                .map(|(_, v)| v.as_str())
        };
        let need = |k: &'static str| get(k).ok_or_else(|| invalid(k, "missing from header"));

        let command = CommandKind::parse(need("command")?)?;
        let fillers =
            || -> Result<Vec<u32>> { parse_list(get("fillers").unwrap_or(""), "fillers") };
        let data = match need("data")? {
            "paper" => DataSource::Paper {
                fillers: fillers()?,
            },
            "scaled" => DataSource::Scaled {
                fillers: fillers()?,
                axis: parse_value(need("axis")?, "axis")?,
                factor: parse_value(need("factor")?, "factor")?,
            },
            "random" => DataSource::Random {
                n: parse_value(need("n")?, "n")?,
                dim: parse_value(need("dim")?, "dim")?,
                margin: parse_value(need("margin")?, "margin")?,
                seed: parse_value(need("data_seed")?, "data_seed")?,
            },
            other => match other.strip_prefix("file:") {
                Some(path) => DataSource::File(PathBuf::from(path)),
                None => return Err(invalid("data", format!("unknown data source `{other}`"))),
            },
        };
        let mut config = Self::new(command, data);
        if command == CommandKind::Gen {
            return Ok(config);
        }
        config.p = parse_value(need("p")?, "p")?;
        config.r = parse_value(need("r")?, "r")?;
        config.s0 = parse_value(need("s0")?, "s0")?;
        config.horizon = match (get("stages"), get("budget")) {
            (Some(s), None) => Horizon::Stages(parse_value(s, "stages")?),
            (None, Some(k)) => Horizon::Budget(parse_value(k, "budget")?),
            _ => {
                return Err(invalid(
                    "stages",
                    "header needs exactly one of stages or budget",
                ))
            }
        };
        config.update_rule = parse_update(need("update")?)?;
        config.step_mode = parse_step(need("step")?)?;
        config.active_rule = parse_active(need("active")?)?;
        config.bias = parse_value(need("bias")?, "bias")?;
        config.exact = parse_value(need("exact")?, "exact")?;
        config.w_star = get("w_star_override")
            .map(|v| parse_list(v, "w_star_override"))
            .transpose()?;
        if command == CommandKind::Verify {
            config.grid = parse_grid(need("grid")?)?;
            config.samples = parse_value(need("samples")?, "samples")?;
            config.seed = parse_value(need("seed")?, "seed")?;
        }
        Ok(config)
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub(crate) fn join<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(",")
}

fn parse_value<T: std::str::FromStr>(s: &str, name: &'static str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| invalid(name, format!("cannot parse `{s}`")))
}

pub(crate) fn parse_list<T: std::str::FromStr>(s: &str, name: &'static str) -> Result<Vec<T>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|v| parse_value(v, name)).collect()
}

pub(crate) fn parse_grid(s: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|v| parse_value(v, "grid"))
        .collect::<Result<_>>()?;
    match parts[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err(invalid(
            "grid",
            format!("expected start:stop:step, got `{s}`"),
        )),
    }
}

pub(crate) fn update_name(u: UpdateRule) -> &'static str {
    match u {
        UpdateRule::Averaged => "averaged",
        UpdateRule::BestIterate => "best",
    }
}

pub(crate) fn step_name(s: StepMode) -> &'static str {
    match s {
        StepMode::Plain => "plain",
        StepMode::Normalized => "normalized",
    }
}

pub(crate) fn active_name(a: ActiveRule) -> &'static str {
    match a {
        ActiveRule::Inclusive => "inclusive",
        ActiveRule::Strict => "strict",
    }
}

fn parse_update(s: &str) -> Result<UpdateRule> {
    match s {
        "averaged" => Ok(UpdateRule::Averaged),
        "best" => Ok(UpdateRule::BestIterate),
        _ => Err(invalid("update", format!("unknown update rule `{s}`"))),
    }
}

fn parse_step(s: &str) -> Result<StepMode> {
    match s {
        "plain" => Ok(StepMode::Plain),
        "normalized" => Ok(StepMode::Normalized),
        _ => Err(invalid("step", format!("unknown step mode `{s}`"))),
    }
}

fn parse_active(s: &str) -> Result<ActiveRule> {
    match s {
        "inclusive" => Ok(ActiveRule::Inclusive),
        "strict" => Ok(ActiveRule::Strict),
        _ => Err(invalid("active", format!("unknown active rule `{s}`"))),
    }
}
