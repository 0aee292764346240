use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use xproc_core::family::{GraphFamily, GraphSpec, RateRule};
use xproc_core::fourier::{BooleanFunction, FunctionFamily};
use xproc_core::graph::Graph;
use xproc_core::statespace::StateCap;
use xproc_core::Error;

pub const STATE_CAP_VAR: &str = "XPROC_STATE_CAP";

/// A failure carrying its exit code and the offending config field.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub field: String,
    pub message: String,
}

impl CliError {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        Self {
            code: 2,
            field: field.to_string(),
            message: message.into(),
        }
    }

    /// Maps a library error raised while handling `field`.
    pub fn from_core(field: &str, e: Error) -> Self {
        let (code, field) = match &e {
            Error::InvalidParameter { name, .. } => (2, (*name).to_string()),
            Error::CapExceeded { .. } => (2, STATE_CAP_VAR.to_string()),
            Error::Disconnected | Error::Parse { .. } | Error::VertexOutOfRange { .. } => (2, field.to_string()),
            Error::NotBoolean { .. } | Error::UnknownFamily(_) | Error::DimensionMismatch { .. } => {
                (2, field.to_string())
            }
            Error::Hypothesis(_) => (2, field.to_string()),
            _ => (1, field.to_string()),
        };
        Self {
            code,
            field,
            message: e.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error in `{}`: {}", self.field, self.message)
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Lifts a core result, blaming `field` when the error does not name one.
pub trait Blame<T> {
    fn blame(self, field: &str) -> CliResult<T>;
    /// Like `blame`, but always reports `field`.
    fn blame_as(self, field: &str) -> CliResult<T>;
}

impl<T> Blame<T> for xproc_core::Result<T> {
    fn blame(self, field: &str) -> CliResult<T> {
        self.map_err(|e| CliError::from_core(field, e))
    }

    fn blame_as(self, field: &str) -> CliResult<T> {
        self.map_err(|e| CliError {
            field: field.to_string(),
            ..CliError::from_core(field, e)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatePolicy {
    /// One rate on every edge, given by `--rate`.
    Uniform,
    /// Keep the rates stored in a graph file.
    PerEdge,
    /// Rate 1 / max degree on every edge.
    OneOverMaxDegree,
}

/// Every option of every subcommand. Flags override values from `--config`.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    /// Graph: `complete:N`, `cycle:N`, `half-complete-cycle:H`, `random:N:P:SEED` or `@file.json`.
    /// With --n-grid, the family alone (`cycle`, `random:P:SEED`, ...).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph: Option<String>,

    /// Second graph for `compare`; the subgraph in monotonicity checks.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub other_graph: Option<String>,

    /// Uniform rate: a number, `a/b`, `1/n`, `1/(n-1)`, `1/v` or `1/d`.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<String>,

    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_policy: Option<RatePolicy>,

    /// Rate for --other-graph; defaults to the --rate settings.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub other_rate: Option<String>,

    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub other_rate_policy: Option<RatePolicy>,

    /// Level number or `all`; for `simulate`, the starting level.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<String>,

    /// `dictator:V`, `parity:a,b,..`, `parity:lower-half`, `majority`, `constant:C` or `@table.json`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub function: Option<String>,

    /// Times, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<Vec<f64>>,

    /// Flip-probability times, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,

    /// Eigenvalue thresholds, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<f64>>,

    /// Second thresholds, paired with --k; defaults to 2k.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kprime: Option<Vec<f64>>,

    /// Family parameter range `a:b` or `a:b:step`, inclusive.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<String>,

    /// Monte Carlo sample count (default 10000)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,

    /// Random seed for `simulate` and `verify` (default 0)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    /// Verification suite: generator, spectral, fourier, oracle, diagnostics, dynamics or all.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,

    /// Largest vertex count swept by `verify`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nmax: Option<usize>,

    /// Include the level generators in `spectrum` output.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub dump_matrix: bool,

    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,

    /// Write the report here instead of stdout.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,

    /// JSON file with any of these options (snake_case keys).
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

macro_rules! overlay {
    ($cli:ident, $file:ident; $($field:ident),*) => {
        Options {
            $($field: $cli.$field.or($file.$field),)*
            dump_matrix: $cli.dump_matrix || $file.dump_matrix,
            out: $cli.out,
            config: $cli.config,
        }
    };
}

impl Options {
    /// Loads `--config` if given and lets the flags win.
    pub fn resolve(self) -> CliResult<Options> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::config("config", format!("cannot read {}: {e}", path.display())))?;
        let file: Options =
            serde_json::from_str(&text).map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
        let cli = self;
        Ok(
            overlay!(cli, file; graph, other_graph, rate, rate_policy, other_rate, other_rate_policy, level,
            function, t, eps, k, kprime, n_grid, samples, seed, suite, nmax, format),
        )
    }
}

pub fn state_cap() -> CliResult<StateCap> {
    match std::env::var(STATE_CAP_VAR) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&c| c > 0)
            .map(StateCap)
            .ok_or_else(|| CliError::config(STATE_CAP_VAR, format!("expected a positive integer, got `{v}`"))),
        Err(_) => Ok(StateCap::default()),
    }
}

pub fn require<'a, T>(value: &'a Option<T>, field: &str) -> CliResult<&'a T> {
    value
        .as_ref()
        .ok_or_else(|| CliError::config(field, "is required for this command"))
}

/// A graph before rates are applied.
enum Source {
    Spec(GraphSpec),
    File(Graph),
}

fn read_file(spec: &str, field: &str) -> CliResult<Option<(PathBuf, String)>> {
    let Some(path) = spec.strip_prefix('@') else {
        return Ok(None);
    };
    let path = Path::new(path).to_path_buf();
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::config(field, format!("cannot read {}: {e}", path.display())))?;
    Ok(Some((path, text)))
}

/// Builds the graph named by `spec` and applies the rate settings.
pub fn load_graph(spec: &str, field: &str, rate: Option<&str>, policy: Option<RatePolicy>) -> CliResult<Graph> {
    let source = match read_file(spec, field)? {
        Some((path, text)) => Source::File(
            Graph::from_json_str(&text).map_err(|e| CliError::config(field, format!("{}: {e}", path.display())))?,
        ),
        None => Source::Spec(spec.parse().blame(field)?),
    };
    let (base, param) = match &source {
        Source::Spec(s) => (s.build().blame(field)?, s.param),
        Source::File(g) => (g.clone(), g.n()),
    };
    let rate_field = if field == "graph" { "rate" } else { "other_rate" };
    let policy = policy.unwrap_or(match (&source, rate) {
        (Source::File(_), None) => RatePolicy::PerEdge,
        _ => RatePolicy::Uniform,
    });
    let graph = match policy {
        RatePolicy::Uniform => {
            let rule: RateRule = rate.unwrap_or("1").parse().blame_as(rate_field)?;
            rule.apply(param, &base).blame_as(rate_field)?
        }
        RatePolicy::PerEdge | RatePolicy::OneOverMaxDegree if rate.is_some() => {
            let name = policy.to_possible_value().expect("no skipped variants");
            return Err(CliError::config(
                rate_field,
                format!("conflicts with the {} rate policy", name.get_name()),
            ));
        }
        RatePolicy::PerEdge => base,
        RatePolicy::OneOverMaxDegree => base.with_inverse_degree_rate().blame_as(rate_field)?,
    };
    if !graph.is_connected() {
        return Err(CliError::config(field, "graph is not connected"));
    }
    Ok(graph)
}

pub fn primary_graph(o: &Options) -> CliResult<Graph> {
    load_graph(require(&o.graph, "graph")?, "graph", o.rate.as_deref(), o.rate_policy)
}

pub fn other_graph(o: &Options) -> CliResult<Graph> {
    // either side of the pair set explicitly replaces the inherited settings
    let (rate, policy) = if o.other_rate.is_some() || o.other_rate_policy.is_some() {
        (o.other_rate.as_deref(), o.other_rate_policy)
    } else {
        (o.rate.as_deref(), o.rate_policy)
    };
    load_graph(require(&o.other_graph, "other_graph")?, "other_graph", rate, policy)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TableFile {
    Plain(Vec<f64>),
    Tagged { n: usize, values: Vec<f64> },
}

/// Builds the function for an `n`-vertex graph.
pub fn load_function(o: &Options, n: usize) -> CliResult<BooleanFunction> {
    let spec = require(&o.function, "function")?;
    if let Some((path, text)) = read_file(spec, "function")? {
        let table: TableFile = serde_json::from_str(&text)
            .map_err(|e| CliError::config("function", format!("{}: {e}", path.display())))?;
        let values = match table {
            TableFile::Plain(v) => v,
            TableFile::Tagged { n: m, values } if m == n => values,
            TableFile::Tagged { n: m, .. } => {
                return Err(CliError::config(
                    "function",
                    format!("table is for n = {m}, graph has n = {n}"),
                ));
            }
        };
        return BooleanFunction::explicit_table(n, values).blame("function");
    }
    let family: FunctionFamily = spec.parse().blame("function")?;
    family.build(n).blame("function")
}

pub fn function_family(o: &Options) -> CliResult<FunctionFamily> {
    let spec = require(&o.function, "function")?;
    if spec.starts_with('@') {
        return Err(CliError::config(
            "function",
            "--n-grid needs a function family, not a table",
        ));
    }
    spec.parse().blame("function")
}

pub fn graph_family(o: &Options) -> CliResult<GraphFamily> {
    let spec = require(&o.graph, "graph")?;
    spec.parse().blame("graph")
}

pub fn rate_rule(o: &Options) -> CliResult<RateRule> {
    match (o.rate_policy, o.rate.as_deref()) {
        (Some(RatePolicy::OneOverMaxDegree), None) => Ok(RateRule::InverseMaxDegree),
        (Some(RatePolicy::PerEdge), _) => Err(CliError::config("rate_policy", "per-edge rates need a graph file")),
        (Some(RatePolicy::OneOverMaxDegree), Some(_)) => Err(CliError::config(
            "rate",
            "conflicts with the one-over-max-degree rate policy",
        )),
        (_, r) => r.unwrap_or("1").parse().blame("rate"),
    }
}

pub enum LevelChoice {
    All,
    One(usize),
}

pub fn level_choice(o: &Options) -> CliResult<LevelChoice> {
    match o.level.as_deref() {
        None | Some("all") => Ok(LevelChoice::All),
        Some(s) => s
            .parse()
            .map(LevelChoice::One)
            .map_err(|_| CliError::config("level", format!("expected a level number or `all`, got `{s}`"))),
    }
}

pub fn parse_grid(s: &str) -> CliResult<Vec<usize>> {
    let bad = || CliError::config("n_grid", format!("expected a:b or a:b:step, got `{s}`"));
    let parts: Vec<usize> = s
        .split(':')
        .map(|p| p.trim().parse().map_err(|_| bad()))
        .collect::<CliResult<_>>()?;
    let (a, b, step) = match parts.as_slice() {
        [a, b] => (*a, *b, 1),
        [a, b, s] => (*a, *b, *s),
        _ => return Err(bad()),
    };
    if a > b || step == 0 {
        return Err(bad());
    }
    Ok((a..=b).step_by(step).collect())
}

pub fn positive_list(values: &[f64], field: &str, allow_zero: bool) -> CliResult<()> {
    for &v in values {
        let ok = v.is_finite() && (v > 0.0 || (allow_zero && v == 0.0));
        if !ok {
            let need = if allow_zero {
                "finite and >= 0"
            } else {
                "finite and > 0"
            };
            return Err(CliError::config(field, format!("values must be {need}, got {v}")));
        }
    }
    Ok(())
}
