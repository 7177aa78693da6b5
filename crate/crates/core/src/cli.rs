//! Command-line front end: exact values, simulation, sweeps and checks.
//!
//! Exit codes: 0 success, 1 I/O or internal failure, 2 usage error,
//! 3 invalid parameter, 4 some rows failed, 5 a checked property is violated.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::Error;
use crate::exact::{self, EvalMethod, Family, DEFAULT_QUADRATURE_NODES};
use crate::frontier::write_trajectory_csv;
use crate::model::{DistributionSpec, ExperimentConfig};
use crate::ordering::{self, RpRelation};
use crate::simulate::{self, Estimator, McSettings, SweepAxis, SweepRequest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INVALID: i32 = 3;
pub const EXIT_PARTIAL: i32 = 4;
pub const EXIT_VIOLATION: i32 = 5;

/// Version of the JSON output layout.
pub const SCHEMA_VERSION: u32 = 1;
const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "records", version, about = "Record-setting probabilities of multivariate Pareto records")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact values: p*_{n,d}, p_n for Dir_a and PA_a, Roman harmonic numbers.
    Exact(ExactArgs),
    /// Monte Carlo estimates of p_n.
    Simulate(SimulateArgs),
    /// Exact values, optionally with Monte Carlo, along a parameter grid.
    Sweep(SweepArgs),
    /// Empirical checks of ordering and dependence properties.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutFormat {
    Csv,
    Json,
}

#[derive(Debug, Args, Serialize)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    pub out: OutFormat,
    /// Write to this file instead of stdout.
    #[arg(long)]
    #[serde(skip)]
    pub out_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formula {
    Pstar,
    Pdir,
    Ppa,
    Roman,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    /// Alternating sum for n <= 30, quadrature beyond.
    Auto,
    Exact,
    Float,
    Quad,
}

#[derive(Debug, Args, Serialize)]
pub struct ExactArgs {
    #[arg(long, value_enum)]
    pub formula: Formula,
    /// One or more horizons, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// Order of the Roman harmonic number.
    #[arg(long)]
    pub k: Option<u32>,
    /// Also print the exact fraction (pstar, roman).
    #[arg(long)]
    pub rational: bool,
    #[arg(long, value_enum, default_value = "auto")]
    pub method: MethodArg,
    #[arg(long, default_value_t = DEFAULT_QUADRATURE_NODES)]
    pub nodes: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyArg {
    #[value(name = "iid-exp", alias = "iid")]
    IidExp,
    Dir,
    Pa,
    Dirichlet,
    Comonotone,
    /// q-mixture of Dir_a (weight 1-q) and a Dirichlet antichain (weight q).
    Mixture,
}

#[derive(Debug, Args, Serialize)]
pub struct SpecArgs {
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// Dirichlet parameters, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub b: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    pub q: Option<f64>,
    /// A spec, or an array of specs, as JSON. Overrides the flags above.
    #[arg(long)]
    pub spec_json: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorArg {
    Indicator,
    Survival,
}

impl From<EstimatorArg> for Estimator {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Indicator => Estimator::Indicator,
            EstimatorArg::Survival => Estimator::Survival,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct RunArgs {
    #[arg(long, default_value_t = 100_000)]
    pub reps: usize,
    /// Falls back to RECORDS_SEED, then to 1.
    #[arg(long, env = "RECORDS_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads. Never changes results.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// One or more horizons, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_enum, default_value = "indicator")]
    pub estimator: EstimatorArg,
    /// Write the step-by-step trajectory of replicate 0 of the first row.
    #[arg(long)]
    #[serde(skip)]
    pub emit_trajectory: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepFamily {
    Dir,
    Pa,
}

impl From<SweepFamily> for Family {
    fn from(f: SweepFamily) -> Self {
        match f {
            SweepFamily::Dir => Family::Dir,
            SweepFamily::Pa => Family::Pa,
        }
    }
}

#[derive(Debug, Args, Serialize)]
#[group(id = "axis", required = true, multiple = false, args = ["a_grid", "n_grid", "d_grid"])]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub family: SweepFamily,
    /// `lo:hi:steps` (log-spaced) or a comma list.
    #[arg(long)]
    pub a_grid: Option<String>,
    /// Comma list of horizons, or `lo:hi:steps` log-spaced and rounded.
    #[arg(long)]
    pub n_grid: Option<String>,
    /// Comma list of dimensions.
    #[arg(long)]
    pub d_grid: Option<String>,
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub a: f64,
    /// Add Monte Carlo estimates next to the exact values.
    #[arg(long)]
    pub with_mc: bool,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_enum, default_value = "indicator")]
    pub estimator: EstimatorArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    RpOrder,
    Nuod,
    P2,
    Concomitant,
    Limits,
}

#[derive(Debug, Args, Serialize)]
pub struct CheckArgs {
    #[arg(long, value_enum)]
    pub check: CheckKind,
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Second spec for rp-order; defaults to iid-exp of the same dimension.
    #[arg(long, value_enum)]
    pub vs_family: Option<FamilyArg>,
    #[arg(long, allow_negative_numbers = true)]
    pub vs_a: Option<f64>,
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// NUOD probe points, `x1,x2,..;y1,y2,..`. Defaults to a small grid.
    #[arg(long)]
    pub probes: Option<String>,
    #[arg(long, default_value_t = 0.001)]
    pub alpha: f64,
    #[command(flatten)]
    pub run: RunArgs,
    /// Reports are JSON; this only chooses the destination.
    #[arg(long)]
    #[serde(skip)]
    pub out_file: Option<PathBuf>,
}

/// Failure of a command, mapped to an exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Invalid(Error),
    Io(io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Invalid(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.into())
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Io(_) => EXIT_FAILURE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Invalid(e) => write!(f, "invalid parameter: {e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn round12(x: f64) -> f64 {
    if x.is_finite() {
        format!("{x:.11e}").parse().expect("valid float literal")
    } else {
        x
    }
}

/// Rounds to 12 significant digits and prints the shortest decimal that
/// parses back to the rounded value.
pub fn format_float(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    format!("{:?}", round12(x))
}

fn opt_float(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

/// Parses `lo:hi:steps` into log-spaced points, or a comma list.
pub fn parse_grid(s: &str) -> std::result::Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("bad number {t:?}: {e}"));
    match parts.len() {
        1 => s.split(',').map(num).collect(),
        3 => {
            let (lo, hi) = (num(parts[0])?, num(parts[1])?);
            let steps: usize = parts[2]
                .trim()
                .parse()
                .map_err(|e| format!("bad step count {:?}: {e}", parts[2]))?;
            if !(lo > 0.0 && hi > 0.0 && lo.is_finite() && hi.is_finite()) {
                return Err(format!("log grid needs positive finite ends, got {lo}:{hi}"));
            }
            if steps == 0 {
                return Err("log grid needs at least one step".into());
            }
            if steps == 1 {
                return Ok(vec![lo]);
            }
            let ratio = (hi / lo).ln();
            Ok((0..steps)
                .map(|i| match i {
                    0 => lo,
                    i if i == steps - 1 => hi,
                    // Rounded so that decades land on exact decimals.
                    i => round12(lo * (ratio * i as f64 / (steps - 1) as f64).exp()),
                })
                .collect())
        }
        _ => Err(format!("grid must be `lo:hi:steps` or a comma list, got {s:?}")),
    }
}

fn parse_int_grid(s: &str) -> std::result::Result<Vec<usize>, String> {
    let mut v: Vec<usize> = parse_grid(s)?
        .into_iter()
        .map(|x| {
            if x >= 0.0 && x.is_finite() {
                Ok(x.round() as usize)
            } else {
                Err(format!("grid value {x} is not a nonnegative integer"))
            }
        })
        .collect::<std::result::Result<_, _>>()?;
    if s.contains(':') {
        v.dedup();
    }
    Ok(v)
}

fn parse_probes(s: &str) -> std::result::Result<Vec<Vec<f64>>, String> {
    s.split(';')
        .map(|p| {
            p.split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad probe {t:?}: {e}")))
                .collect()
        })
        .collect()
}

impl SpecArgs {
    fn build(&self) -> CliResult<Vec<DistributionSpec>> {
        let specs = if let Some(js) = &self.spec_json {
            let value: Value =
                serde_json::from_str(js).map_err(|e| usage(format!("--spec-json: {e}")))?;
            let specs: Vec<DistributionSpec> = if value.is_array() {
                serde_json::from_value(value)
            } else {
                serde_json::from_value(value).map(|s| vec![s])
            }
            .map_err(|e| CliError::Invalid(Error::invalid("spec-json", e.to_string())))?;
            if specs.is_empty() {
                return Err(usage("--spec-json: empty spec list"));
            }
            specs
        } else {
            let family = self
                .family
                .ok_or_else(|| usage("one of --family or --spec-json is required"))?;
            vec![self.build_family(family, self.d, self.a)?]
        };
        for s in &specs {
            s.validate()?;
        }
        Ok(specs)
    }

    fn build_family(&self, family: FamilyArg, d: Option<usize>, a: Option<f64>) -> CliResult<DistributionSpec> {
        let need_d = || d.ok_or_else(|| usage("--d is required for this family"));
        let need_a = || a.ok_or_else(|| usage("--a is required for this family"));
        Ok(match family {
            FamilyArg::IidExp => DistributionSpec::iid_exponential(need_d()?),
            FamilyArg::Dir => DistributionSpec::marginal_dirichlet(need_d()?, need_a()?),
            FamilyArg::Pa => DistributionSpec::pa_scale_mixture(need_d()?, need_a()?),
            FamilyArg::Comonotone => DistributionSpec::comonotone(need_d()?),
            FamilyArg::Dirichlet => DistributionSpec::dirichlet(
                self.b
                    .clone()
                    .ok_or_else(|| usage("--b is required for the dirichlet family"))?,
            ),
            FamilyArg::Mixture => {
                let d = need_d()?;
                let q = self.q.ok_or_else(|| usage("--q is required for the mixture family"))?;
                let b = self.b.clone().unwrap_or_else(|| vec![1.0; d]);
                DistributionSpec::mixture(
                    q,
                    DistributionSpec::marginal_dirichlet(d, need_a()?),
                    DistributionSpec::dirichlet(b),
                )
            }
        })
    }
}

fn flush_output(buf: Vec<u8>, path: &Option<PathBuf>, stdout: &mut dyn Write) -> CliResult<()> {
    match path {
        Some(p) => {
            let mut f = BufWriter::new(File::create(p)?);
            f.write_all(&buf)?;
            f.flush()?;
        }
        None => {
            stdout.write_all(&buf)?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn write_csv(header: &[&str], rows: &[Vec<String>]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.into_error()))
}

fn json_record(command: &str, params: &impl Serialize, seed: Option<u64>, start: Instant, body: Value) -> Vec<u8> {
    let mut record = json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "params": params,
        "seed": seed,
        "version": env!("CARGO_PKG_VERSION"),
        "wall_time_secs": start.elapsed().as_secs_f64(),
    });
    if let (Value::Object(m), Value::Object(extra)) = (&mut record, body) {
        m.extend(extra);
    }
    let mut out = serde_json::to_vec(&record).expect("JSON values serialize");
    out.push(b'\n');
    out
}

fn method_of(m: MethodArg, n: usize, nodes: usize) -> EvalMethod {
    match m {
        MethodArg::Auto => EvalMethod::default_for(n),
        MethodArg::Exact => EvalMethod::AlternatingSumExact,
        MethodArg::Float => EvalMethod::AlternatingSumFloat,
        MethodArg::Quad => EvalMethod::GaussQuadrature { nodes },
    }
}

#[derive(Serialize)]
struct ExactRow {
    formula: Formula,
    n: usize,
    d: Option<usize>,
    a: Option<f64>,
    k: Option<u32>,
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    rational: Option<String>,
}

fn cmd_exact(args: &ExactArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let start = Instant::now();
    let mut rows = Vec::new();
    for &n in &args.n {
        let row = match args.formula {
            Formula::Pstar => {
                let d = args.d.ok_or_else(|| usage("--d is required for pstar"))?;
                ExactRow {
                    formula: args.formula,
                    n,
                    d: Some(d),
                    a: None,
                    k: None,
                    value: exact::p_star(n, d)?,
                    rational: args
                        .rational
                        .then(|| exact::p_star_exact(n, d).map(|r| r.to_string()))
                        .transpose()?,
                }
            }
            Formula::Roman => {
                let k = args.k.ok_or_else(|| usage("--k is required for roman"))?;
                ExactRow {
                    formula: args.formula,
                    n,
                    d: None,
                    a: None,
                    k: Some(k),
                    value: exact::roman_harmonic_f64(n, k)?,
                    rational: args
                        .rational
                        .then(|| exact::roman_harmonic(n, k).map(|r| r.to_string()))
                        .transpose()?,
                }
            }
            Formula::Pdir | Formula::Ppa => {
                let d = args.d.ok_or_else(|| usage("--d is required for pdir/ppa"))?;
                let a = args.a.ok_or_else(|| usage("--a is required for pdir/ppa"))?;
                let family = if args.formula == Formula::Pdir { Family::Dir } else { Family::Pa };
                let value = match args.method {
                    MethodArg::Auto => exact::p_family_auto(family, n, d, a)?,
                    m => exact::p_family(family, n, d, a, method_of(m, n, args.nodes))?,
                };
                ExactRow {
                    formula: args.formula,
                    n,
                    d: Some(d),
                    a: Some(a),
                    k: None,
                    value,
                    rational: None,
                }
            }
        };
        rows.push(row);
    }
    let out = match args.output.out {
        OutFormat::Json => json_record("exact", args, None, start, json!({ "rows": rows })),
        OutFormat::Csv => {
            let mut header = vec!["formula", "n", "d", "a", "k", "value"];
            if args.rational {
                header.push("rational");
            }
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let mut v = vec![
                        r.formula.to_possible_value().expect("named").get_name().to_string(),
                        r.n.to_string(),
                        r.d.map(|d| d.to_string()).unwrap_or_default(),
                        opt_float(r.a),
                        r.k.map(|k| k.to_string()).unwrap_or_default(),
                        format_float(r.value),
                    ];
                    if args.rational {
                        v.push(r.rational.clone().unwrap_or_default());
                    }
                    v
                })
                .collect();
            write_csv(&header, &table)?
        }
    };
    flush_output(out, &args.output.out_file, stdout)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct SimulateRow {
    spec: String,
    d: usize,
    n: usize,
    reps: usize,
    seed: u64,
    estimator: Estimator,
    estimate: Option<f64>,
    std_error: Option<f64>,
    exact: Option<f64>,
    sigma_gap: Option<f64>,
    elapsed_secs: Option<f64>,
    error: Option<String>,
}

fn cmd_simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let start = Instant::now();
    let specs = args.spec.build()?;
    if args.run.workers == Some(0) {
        return Err(Error::invalid("workers", "must be >= 1").into());
    }
    let estimator: Estimator = args.estimator.into();
    let mut rows = Vec::new();
    for spec in &specs {
        for &n in &args.n {
            let mut config = ExperimentConfig::new(spec.clone(), n, args.run.reps, args.run.seed);
            config.workers = args.run.workers;
            let exact = if n >= 1 { simulate::exact_pn(spec, n) } else { None };
            let mut row = SimulateRow {
                spec: spec.to_string(),
                d: spec.dimension(),
                n,
                reps: args.run.reps,
                seed: args.run.seed,
                estimator,
                estimate: None,
                std_error: None,
                exact,
                sigma_gap: None,
                elapsed_secs: None,
                error: None,
            };
            match simulate::estimate_pn_with(&config, estimator) {
                Ok(e) => {
                    row.sigma_gap = exact.map(|x| e.z_score(x));
                    row.estimate = Some(e.point);
                    row.std_error = Some(e.std_error);
                    row.elapsed_secs = Some(e.elapsed.as_secs_f64());
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            rows.push(row);
        }
    }
    if let Some(path) = &args.emit_trajectory {
        let n = args.n.iter().copied().find(|&n| n >= 1).unwrap_or(0);
        let run = simulate::simulate_trajectory(&specs[0], n, args.run.seed, 0)?;
        let f = BufWriter::new(File::create(path)?);
        write_trajectory_csv(&run.steps, f)?;
    }
    let failed = rows.iter().any(|r| r.error.is_some());
    let out = match args.output.out {
        OutFormat::Json => json_record("simulate", args, Some(args.run.seed), start, json!({ "rows": rows })),
        OutFormat::Csv => {
            let header = [
                "spec", "d", "n", "reps", "seed", "estimator", "estimate", "std_error", "exact",
                "sigma_gap", "error",
            ];
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.spec.clone(),
                        r.d.to_string(),
                        r.n.to_string(),
                        r.reps.to_string(),
                        r.seed.to_string(),
                        match r.estimator {
                            Estimator::Indicator => "indicator".into(),
                            Estimator::Survival => "survival".into(),
                        },
                        opt_float(r.estimate),
                        opt_float(r.std_error),
                        opt_float(r.exact),
                        opt_float(r.sigma_gap),
                        r.error.clone().unwrap_or_default(),
                    ]
                })
                .collect();
            write_csv(&header, &table)?
        }
    };
    flush_output(out, &args.output.out_file, stdout)?;
    Ok(if failed { EXIT_PARTIAL } else { EXIT_OK })
}

fn cmd_sweep(args: &SweepArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let start = Instant::now();
    let axis = if let Some(g) = &args.a_grid {
        SweepAxis::A(parse_grid(g).map_err(usage)?)
    } else if let Some(g) = &args.n_grid {
        SweepAxis::N(parse_int_grid(g).map_err(usage)?)
    } else if let Some(g) = &args.d_grid {
        SweepAxis::D(parse_int_grid(g).map_err(usage)?)
    } else {
        return Err(usage("one of --a-grid, --n-grid, --d-grid is required"));
    };
    if args.run.workers == Some(0) {
        return Err(Error::invalid("workers", "must be >= 1").into());
    }
    let request = SweepRequest {
        family: args.family.into(),
        axis,
        n: args.n,
        d: args.d,
        a: args.a,
        mc: args.with_mc.then(|| McSettings {
            reps: args.run.reps,
            seed: args.run.seed,
            workers: args.run.workers,
            estimator: args.estimator.into(),
        }),
    };
    let table = simulate::sweep(&request)?;
    let failed = table.rows.iter().any(|r| r.failed());
    let family = args.family.to_possible_value().expect("named").get_name().to_string();
    let out = match args.output.out {
        OutFormat::Json => json_record(
            "sweep",
            args,
            args.with_mc.then_some(args.run.seed),
            start,
            json!({ "family": family, "rows": table.rows, "sampling_time_secs": table.sampling_time.as_secs_f64() }),
        ),
        OutFormat::Csv => {
            let header = ["family", "a", "n", "d", "exact", "mc", "se", "sigma_gap", "error"];
            let rows: Vec<Vec<String>> = table
                .rows
                .iter()
                .map(|r| {
                    vec![
                        family.clone(),
                        format_float(r.a),
                        r.n.to_string(),
                        r.d.to_string(),
                        opt_float(r.exact),
                        opt_float(r.mc),
                        opt_float(r.se),
                        opt_float(r.sigma_gap),
                        r.error.clone().unwrap_or_default(),
                    ]
                })
                .collect();
            write_csv(&header, &rows)?
        }
    };
    flush_output(out, &args.output.out_file, stdout)?;
    Ok(if failed { EXIT_PARTIAL } else { EXIT_OK })
}

/// Relation predicted by the known structure, when there is one: Dir_a
/// decreases and PA_a increases in `a`, Dir_a sits above independence and
/// PA_a below, and the comonotone law is the minimum.
fn expected_rp(first: &DistributionSpec, second: &DistributionSpec) -> Option<RpRelation> {
    use DistributionSpec as S;
    if first == second {
        return Some(RpRelation::Indistinguishable);
    }
    if first.dimension() != second.dimension() {
        return None;
    }
    let rank = |s: &S| match s {
        S::MarginalDirichlet { .. } => Some(3),
        S::IidExponential { .. } => Some(2),
        S::PaScaleMixture { .. } => Some(1),
        S::Comonotone { .. } => Some(0),
        _ => None,
    };
    let (ra, rb) = (rank(first)?, rank(second)?);
    let greater = |first_wins: bool| {
        if first_wins {
            RpRelation::FirstGreater
        } else {
            RpRelation::SecondGreater
        }
    };
    match (first, second) {
        (S::MarginalDirichlet { a: x, .. }, S::MarginalDirichlet { a: y, .. }) => Some(greater(x < y)),
        (S::PaScaleMixture { a: x, .. }, S::PaScaleMixture { a: y, .. }) => Some(greater(x > y)),
        _ if ra == rb => Some(RpRelation::Indistinguishable),
        _ => Some(greater(ra > rb)),
    }
}

fn single_spec(args: &SpecArgs) -> CliResult<DistributionSpec> {
    let mut specs = args.build()?;
    if specs.len() != 1 {
        return Err(usage("checks take exactly one spec"));
    }
    Ok(specs.remove(0))
}

fn cmd_check(args: &CheckArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let start = Instant::now();
    if args.run.workers == Some(0) {
        return Err(Error::invalid("workers", "must be >= 1").into());
    }
    let seed = args.run.seed;
    let (pass, verdict): (bool, Value) = match args.check {
        CheckKind::RpOrder => {
            let first = single_spec(&args.spec)?;
            let second = match args.vs_family {
                Some(f) => args
                    .spec
                    .build_family(f, Some(first.dimension()), args.vs_a.or(args.spec.a))?,
                None => DistributionSpec::iid_exponential(first.dimension()),
            };
            second.validate()?;
            let v = ordering::check_rp_order(&first, &second, args.samples, seed)?;
            let expected = expected_rp(&first, &second);
            let pass = match expected {
                Some(e) => v.relation == e || v.relation == RpRelation::Indistinguishable,
                None => true,
            };
            (pass, json!({ "result": v, "expected": expected }))
        }
        CheckKind::Nuod => {
            let spec = single_spec(&args.spec)?;
            let probes = match &args.probes {
                Some(p) => parse_probes(p).map_err(usage)?,
                None => ordering::default_probe_grid(spec.dimension()),
            };
            let v = ordering::check_nuod(&spec, &probes, args.samples, seed)?;
            (v.consistent, json!({ "result": v }))
        }
        CheckKind::P2 => {
            let spec = single_spec(&args.spec)?;
            let v = ordering::check_p2_bounds(&spec, args.run.reps, seed, args.run.workers)?;
            (v.pass, json!({ "result": v }))
        }
        CheckKind::Concomitant => {
            let spec = single_spec(&args.spec)?;
            let mut config = ExperimentConfig::new(spec, args.n, args.run.reps, seed);
            config.workers = args.run.workers;
            let v = simulate::concomitant_check(&config)?;
            let pass = !v.rejected_at(args.alpha);
            (pass, json!({ "result": v, "alpha": args.alpha }))
        }
        CheckKind::Limits => {
            let family = match args.spec.family {
                Some(FamilyArg::Dir) => Family::Dir,
                Some(FamilyArg::Pa) => Family::Pa,
                _ => return Err(usage("limits needs --family dir or pa")),
            };
            let d = args.spec.d.ok_or_else(|| usage("--d is required"))?;
            let probes = ordering::check_limits(family, args.n, d)?;
            (probes.iter().all(|p| p.pass), json!({ "result": probes }))
        }
    };
    let out = json_record("check", args, Some(seed), start, json!({ "pass": pass, "verdict": verdict }));
    flush_output(out, &args.out_file, stdout)?;
    Ok(if pass { EXIT_OK } else { EXIT_VIOLATION })
}

/// Parses `argv` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Exact(a) => cmd_exact(a, stdout),
        Command::Simulate(a) => cmd_simulate(a, stdout),
        Command::Sweep(a) => cmd_sweep(a, stdout),
        Command::Check(a) => cmd_check(a, stdout),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "records: {e}");
            e.exit_code()
        }
    }
}
