//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid configuration,
//! 3 a guaranteed bound failed under `--strict`.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::engine::config::fmt_num;
use crate::engine::{self, prepare, validate, PresetSpec, RunConfig};
use crate::error::{Error, Result};
use crate::metrics::{self, Summary};
use crate::oracle;
use crate::protocol::Variant;
use crate::topology::TopologySpec;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BOUND: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "gradsync",
    version,
    about = "Gradient clock synchronization simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one configuration and write its trace and summary.
    Run {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        out: PathBuf,
        /// Exit with status 3 if a guaranteed bound fails.
        #[arg(long)]
        strict: bool,
        /// Skip trace.csv.
        #[arg(long)]
        no_trace: bool,
    },
    /// Run a parameter sweep described by a JSON file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        strict: bool,
        /// Worker threads; defaults to the available parallelism.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Compare the engine against the fixed-step reference simulator.
    OracleCheck {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 8)]
        max_nodes: usize,
    },
    /// Check a configuration without running it.
    Validate {
        #[command(flatten)]
        source: Source,
    },
}

#[derive(Debug, Args)]
pub struct Source {
    /// Run configuration, preset spec, or a summary.json from an earlier run.
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub preset: Option<String>,
    /// `D` for chain presets, node count for random_geometric.
    #[arg(long, requires = "preset")]
    pub size: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, requires = "preset")]
    pub variant: Option<VariantArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VariantArg {
    Gradient,
    NoSlowdown,
    LargeC,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Gradient => Variant::Gradient,
            VariantArg::NoSlowdown => Variant::NoSlowdown,
            VariantArg::LargeC => Variant::LargeC,
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

fn read_json(path: &Path) -> Result<serde_json::Value> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Invalid(vec![format!("{}: {e}", path.display())]))
}

fn from_value<T: serde::de::DeserializeOwned>(v: serde_json::Value, what: &str) -> Result<T> {
    serde_json::from_value(v).map_err(|e| Error::Invalid(vec![format!("{what}: {e}")]))
}

/// Accepts a bare run config, a preset spec (`{"preset": ...}`), or any
/// object carrying a resolved config under `"config"`.
pub fn config_from_value(mut value: serde_json::Value) -> Result<RunConfig> {
    if let Some(inner) = value.get_mut("config") {
        return from_value(inner.take(), "config");
    }
    if value.get("preset").is_some() {
        return from_value::<PresetSpec>(value, "preset")?.build();
    }
    from_value(value, "config")
}

pub fn config_from_json(text: &str) -> Result<RunConfig> {
    let value = serde_json::from_str(text).map_err(|e| Error::Invalid(vec![e.to_string()]))?;
    config_from_value(value)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    config_from_value(read_json(path)?)
}

impl Source {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut config = match (&self.config, &self.preset) {
            (Some(path), _) => load_config(path)?,
            (None, Some(name)) => PresetSpec {
                size: self.size,
                seed: self.seed,
                variant: self.variant.map(Into::into),
                ..PresetSpec::named(name)
            }
            .build()?,
            (None, None) => unreachable!("clap requires one input"),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        Ok(config)
    }
}

pub struct RunOutput {
    pub summary: Summary,
    pub trace: crate::trace::Trace,
}

/// Simulates, analyzes and checks bounds.
pub fn execute(config: &RunConfig) -> Result<RunOutput> {
    let prepared = prepare(config)?;
    let trace = engine::simulate(&prepared)?;
    let report = metrics::analyze(&trace, &prepared.topology);
    let verdicts = metrics::bound_checks(&report, &trace.config);
    let summary = Summary::new(&trace, &prepared.topology, report, verdicts);
    Ok(RunOutput { summary, trace })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn make_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn write_outputs(out: &RunOutput, dir: &Path, with_trace: bool) -> Result<()> {
    make_dir(dir)?;
    metrics::write_summary_json(&out.summary, create(&dir.join("summary.json"))?)?;
    if with_trace {
        metrics::write_trace_csv(&out.trace, create(&dir.join("trace.csv"))?)?;
    }
    Ok(())
}

fn print_verdicts(w: &mut impl Write, summary: &Summary) -> std::io::Result<()> {
    for v in &summary.verdicts {
        let scope = match v.scope {
            metrics::Scope::Guaranteed => "guaranteed",
            metrics::Scope::Observed => "observed",
        };
        writeln!(
            w,
            "{:<5} {:<27} {:<10} measured {:<14} threshold {}",
            if v.pass { "ok" } else { "FAIL" },
            v.name,
            scope,
            fmt_num(v.measured),
            fmt_num(v.threshold)
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParameter {
    #[serde(rename = "D")]
    Diameter,
    #[serde(rename = "c")]
    C,
    #[serde(rename = "rho_hat")]
    RhoHat,
    #[serde(rename = "d")]
    D,
    #[serde(rename = "seed")]
    Seed,
}

impl SweepParameter {
    fn name(self) -> &'static str {
        match self {
            SweepParameter::Diameter => "D",
            SweepParameter::C => "c",
            SweepParameter::RhoHat => "rho_hat",
            SweepParameter::D => "d",
            SweepParameter::Seed => "seed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepBase {
    Preset(PresetSpec),
    Config { config: RunConfig },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: SweepBase,
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    /// Defaults to the base configuration's variant alone.
    #[serde(default)]
    pub variants: Vec<Variant>,
    #[serde(default)]
    pub write_traces: bool,
}

fn as_count(value: f64, what: &str) -> Result<u32> {
    if value >= 1.0 && value.fract() == 0.0 && value <= f64::from(u32::MAX) {
        Ok(value as u32)
    } else {
        Err(Error::Invalid(vec![format!(
            "{what} must be a positive integer, got {value}"
        )]))
    }
}

impl SweepSpec {
    pub fn point(&self, value: f64, variant: Option<Variant>) -> Result<RunConfig> {
        let mut config = match &self.base {
            SweepBase::Preset(p) => {
                let mut p = p.clone();
                match self.parameter {
                    SweepParameter::Diameter => p.size = Some(as_count(value, "D")?),
                    SweepParameter::C => p.c = Some(value),
                    SweepParameter::RhoHat => p.rho_hat = Some(value),
                    SweepParameter::D => p.d = Some(value),
                    SweepParameter::Seed => p.seed = Some(value as u64),
                }
                p.variant = variant.or(p.variant);
                p.build()?
            }
            SweepBase::Config { config } => {
                let mut c = config.clone();
                match self.parameter {
                    SweepParameter::Diameter => {
                        let dd = as_count(value, "D")?;
                        match c.topology {
                            TopologySpec::Chain { .. } => {
                                c.topology = TopologySpec::Chain { n: dd as usize + 1 };
                                c.d_known = Some(dd);
                            }
                            _ => c.d_known = Some(dd),
                        }
                    }
                    SweepParameter::C => c.c = value,
                    SweepParameter::RhoHat => c.rho_hat = value,
                    SweepParameter::D => c.d = value,
                    SweepParameter::Seed => c.seed = value as u64,
                }
                if let Some(v) = variant {
                    c.variant = v;
                }
                c
            }
        };
        if self.parameter == SweepParameter::Seed {
            config.seed = value as u64;
        }
        Ok(config)
    }

    /// Every `(variant, value)` point, variants outermost.
    pub fn points(&self) -> Result<Vec<(Option<Variant>, f64, RunConfig)>> {
        let variants: Vec<Option<Variant>> = if self.variants.is_empty() {
            vec![None]
        } else {
            self.variants.iter().copied().map(Some).collect()
        };
        let mut out = Vec::new();
        let mut problems = Vec::new();
        for v in variants {
            for &x in &self.values {
                match self.point(x, v).and_then(|c| {
                    let errs = validate(&c);
                    if errs.is_empty() {
                        Ok(c)
                    } else {
                        Err(Error::Invalid(errs))
                    }
                }) {
                    Ok(c) => out.push((v, x, c)),
                    Err(e) => {
                        problems.push(format!("{} = {}: {e}", self.parameter.name(), fmt_num(x)))
                    }
                }
            }
        }
        if problems.is_empty() {
            Ok(out)
        } else {
            Err(Error::Invalid(problems))
        }
    }
}

const AGGREGATE_HEADER: &str = "variant,parameter,value,nodes,diameter,global_skew,global_bound,\
neighbor_skew,neighbor_bound,min_rate,rate_floor,reduced_intervals,reduced_mean,reduced_max,all_pass";

fn aggregate_row(param: SweepParameter, value: f64, s: &Summary) -> String {
    let verdict = |name: &str| s.verdicts.iter().find(|v| v.name == name);
    let threshold = |name: &str| verdict(name).map_or(String::new(), |v| fmt_num(v.threshold));
    let r = &s.report;
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        s.config.variant.name(),
        param.name(),
        fmt_num(value),
        s.topology.node_count,
        s.topology.diameter,
        fmt_num(r.max_global_skew.value),
        threshold("global_skew"),
        fmt_num(r.neighbor_skew()),
        threshold("neighbor_skew"),
        r.min_rate.map_or(String::new(), fmt_num),
        threshold("rate_floor"),
        r.reduced_rate.count,
        fmt_num(r.reduced_rate.mean),
        fmt_num(r.reduced_rate.max),
        s.all_pass()
    )
}

/// Runs every point of `spec`, writing `<variant>/<param>_<value>/` per
/// point and `aggregate.csv` at the top. Returns the summaries in point order.
pub fn run_sweep(spec: &SweepSpec, out: &Path, jobs: usize) -> Result<Vec<Summary>> {
    let points = spec.points()?;
    make_dir(out)?;
    let jobs = jobs.clamp(1, points.len().max(1));
    let results: Vec<Result<Summary>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..jobs)
            .map(|w| {
                let points = &points;
                scope.spawn(move || {
                    points
                        .iter()
                        .enumerate()
                        .filter(|(k, _)| k % jobs == w)
                        .map(|(k, (_, value, config))| {
                            let result =
                                execute(config).and_then(|o| {
                                    let dir = out.join(o.summary.config.variant.name()).join(
                                        format!("{}_{}", spec.parameter.name(), fmt_num(*value)),
                                    );
                                    write_outputs(&o, &dir, spec.write_traces)?;
                                    Ok(o.summary)
                                });
                            (k, result)
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        let mut all: Vec<(usize, Result<Summary>)> = handles
            .into_iter()
            .flat_map(|h| h.join().expect("sweep worker panicked"))
            .collect();
        all.sort_by_key(|(k, _)| *k);
        all.into_iter().map(|(_, r)| r).collect()
    });
    let summaries = results.into_iter().collect::<Result<Vec<_>>>()?;
    let mut w = create(&out.join("aggregate.csv"))?;
    writeln!(w, "{AGGREGATE_HEADER}")?;
    for ((_, value, _), s) in points.iter().zip(&summaries) {
        writeln!(w, "{}", aggregate_row(spec.parameter, *value, s))?;
    }
    w.flush()?;
    Ok(summaries)
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    match command {
        Command::Validate { source } => {
            let config = source.resolve()?;
            let errs = validate(&config);
            if errs.is_empty() {
                writeln!(w, "ok")?;
                Ok(EXIT_OK)
            } else {
                for e in &errs {
                    eprintln!("invalid: {e}");
                }
                Ok(EXIT_CONFIG)
            }
        }
        Command::Run {
            source,
            out,
            strict,
            no_trace,
        } => {
            let config = source.resolve()?;
            let errs = validate(&config);
            if !errs.is_empty() {
                return Err(Error::Invalid(errs));
            }
            let output = execute(&config)?;
            write_outputs(&output, &out, !no_trace)?;
            print_verdicts(&mut w, &output.summary)?;
            if strict && !output.summary.guaranteed_pass() {
                Ok(EXIT_BOUND)
            } else {
                Ok(EXIT_OK)
            }
        }
        Command::Sweep {
            config,
            out,
            strict,
            jobs,
        } => {
            let spec: SweepSpec = from_value(read_json(&config)?, "sweep")?;
            let jobs =
                jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let summaries = run_sweep(&spec, &out, jobs)?;
            let failed = summaries.iter().filter(|s| !s.guaranteed_pass()).count();
            writeln!(
                w,
                "{} points, {} with a failed guaranteed bound; aggregate in {}",
                summaries.len(),
                failed,
                out.join("aggregate.csv").display()
            )?;
            Ok(if strict && failed > 0 {
                EXIT_BOUND
            } else {
                EXIT_OK
            })
        }
        Command::OracleCheck {
            source,
            dt,
            tol,
            max_nodes,
        } => {
            let config = source.resolve()?;
            let prepared = prepare(&config)?;
            let n = prepared.topology.node_count();
            if n > max_nodes {
                return Err(Error::Invalid(vec![format!(
                    "oracle check is limited to {max_nodes} nodes, configuration has {n}"
                )]));
            }
            let engine_trace = engine::simulate(&prepared)?;
            let oracle_trace = oracle::oracle_run(&config, dt)?;
            let cmp = oracle::compare(&engine_trace, &oracle_trace, tol)?;
            writeln!(
                w,
                "{} samples, max deviation {} (tolerance {})",
                cmp.samples,
                fmt_num(cmp.max_deviation),
                fmt_num(tol)
            )?;
            match cmp.first_exceedance {
                None => {
                    writeln!(w, "agree")?;
                    Ok(EXIT_OK)
                }
                Some(d) => {
                    writeln!(
                        w,
                        "disagree: node {} at t = {}: engine {:?}, oracle {:?}",
                        d.node,
                        fmt_num(d.time),
                        d.engine,
                        d.oracle
                    )?;
                    Ok(EXIT_BOUND)
                }
            }
        }
    }
}
