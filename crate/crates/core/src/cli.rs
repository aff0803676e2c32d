//! Command-line front end.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::evaluator::{self, fmt_bound, is_satisfied, EvalError};
use crate::files::{self, FileError};
use crate::keyrate::{key_rate, QkdSystemParams};
use crate::mcfp::{self, BoundResult, McfpError};
use crate::model::{
    apply_modification, DemandModel, ModelError, Modification, NetworkInstance, NodeId,
    DEFAULT_PACKET_BITS,
};
use crate::solver::{lp_format, SolverConfig, SolverError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SOLVER_LIMIT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "qkdnet", version, about = "Evaluate QKD network topologies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Secret key rate of one link over a length or a length range.
    Keyrate(KeyrateArgs),
    /// Communication bound of one topology.
    Bound(BoundArgs),
    /// Bound after adding one QKD system to each candidate edge.
    Place(PlaceArgs),
    /// Bound for every subset of optional nodes.
    Select(SelectArgs),
    /// Write the flow program in LP format.
    ExportLp(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Table,
    Csv,
    Structured,
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    /// System parameter file; the reference system when omitted.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Override the finite-key setting of the parameter file.
    #[arg(long, value_enum)]
    pub finite_key: Option<Switch>,
}

#[derive(Debug, Args)]
pub struct KeyrateArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// A length in km, or an inclusive range `start..end`.
    #[arg(long, default_value = "85")]
    pub length: String,
    /// Step of a length range, in km.
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Topology file.
    #[arg(long)]
    pub topology: PathBuf,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Uniform demand between every ordered pair of non-optional nodes, in
    /// bits/s. Without it the topology file's connections are used.
    #[arg(long)]
    pub demand: Option<f64>,
    /// Key consumption ratio applied to every connection.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_PACKET_BITS)]
    pub packet_bits: u32,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Branch-and-bound node limit per solve.
    #[arg(long)]
    pub node_limit: Option<u64>,
    /// Primal feasibility tolerance of the simplex.
    #[arg(long)]
    pub feasibility_tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Comma-separated optional nodes to bring in; the rest are left out.
    #[arg(long)]
    pub select: Option<String>,
    /// Comma-separated edges that each get one more QKD system.
    #[arg(long)]
    pub add_system: Option<String>,
    /// Write the integral flows as CSV.
    #[arg(long)]
    pub dump_flows: Option<PathBuf>,
    /// Write the flow program in LP format.
    #[arg(long)]
    pub export_lp: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlaceArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// `all`, or comma-separated edge labels / `a-b` names.
    #[arg(long, default_value = "all")]
    pub candidates: String,
    /// Worker threads; 0 uses one per core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Comma-separated optional nodes; all optional nodes when omitted.
    #[arg(long)]
    pub optional: Option<String>,
    /// Worker threads; 0 uses one per core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Comma-separated optional nodes to bring in; the rest are left out.
    #[arg(long)]
    pub select: Option<String>,
    /// Comma-separated edges that each get one more QKD system.
    #[arg(long)]
    pub add_system: Option<String>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Failure of a command, mapped to an exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    File(#[from] FileError),
    #[error("{context}: {source}")]
    Model {
        context: String,
        source: ModelError,
    },
    #[error("{0}")]
    Input(String),
    #[error("{context}: {source}")]
    Solver {
        context: String,
        source: SolverError,
    },
    #[error("{0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::File(_) | CliError::Model { .. } | CliError::Input(_) => EXIT_INPUT,
            CliError::Solver {
                source: SolverError::NodeLimitExceeded { .. },
                ..
            } => EXIT_SOLVER_LIMIT,
            CliError::Solver { .. } | CliError::Output(_) => EXIT_FAILURE,
        }
    }

    /// Names `path` in errors that do not already carry a file.
    fn at(self, path: &Path) -> Self {
        let shown = path.display().to_string();
        match self {
            CliError::Solver { context, source } if context.is_empty() => CliError::Solver {
                context: shown,
                source,
            },
            CliError::Model { context, source } if context.is_empty() => CliError::Model {
                context: shown,
                source,
            },
            CliError::Input(msg) if !msg.starts_with(&shown) => CliError::Input(format!("{shown}: {msg}")),
            other => other,
        }
    }
}

impl From<McfpError> for CliError {
    fn from(e: McfpError) -> Self {
        match e {
            McfpError::Solver(source) => CliError::Solver {
                context: String::new(),
                source,
            },
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Mcfp(m) => m.into(),
            EvalError::Model(source) => CliError::Model {
                context: String::new(),
                source,
            },
            other => CliError::Input(other.to_string()),
        }
    }
}

/// The run-level settings shared by `bound`, `place`, `select` and
/// `export-lp`.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub topology_path: PathBuf,
    pub instance: NetworkInstance,
    pub format: Format,
    pub solver: SolverConfig,
}

fn load_params(args: &ParamArgs) -> Result<QkdSystemParams, CliError> {
    let mut params = match &args.params {
        Some(path) => files::load_params(path)?,
        None => QkdSystemParams::reference(),
    };
    if let Some(s) = args.finite_key {
        params.finite_key = s == Switch::On;
    }
    Ok(params)
}

fn model_err(path: &Path) -> impl Fn(ModelError) -> CliError + '_ {
    move |source| CliError::Model {
        context: path.display().to_string(),
        source,
    }
}

impl RunConfig {
    pub fn from_args(args: &RunArgs) -> Result<Self, CliError> {
        let file = files::load_topology(&args.topology)?;
        let params = load_params(&args.params)?;
        let topo = file.topology();
        let on_path = model_err(&args.topology);
        let demand = match args.demand {
            Some(d) if !(d > 0.0 && d.is_finite()) => {
                return Err(CliError::Input(format!("--demand must be a positive number of bits/s, got {d}")))
            }
            Some(d) => DemandModel::uniform(&topo.nodes, d, args.beta.unwrap_or(1.0)).map_err(&on_path)?,
            None if file.connections.is_empty() => {
                return Err(CliError::Input(format!(
                    "{}: no [[connections]] in the file; pass --demand",
                    args.topology.display()
                )))
            }
            None => {
                let d = DemandModel::new(file.connections.clone()).map_err(&on_path)?;
                match args.beta {
                    Some(b) => d.with_beta(b).map_err(&on_path)?,
                    None => d,
                }
            }
        };
        if demand.is_empty() {
            return Err(CliError::Input(format!(
                "{}: the demand has no connections",
                args.topology.display()
            )));
        }
        let instance = NetworkInstance::new(topo, demand, args.packet_bits, params).map_err(&on_path)?;
        let mut solver = SolverConfig::default();
        if let Some(n) = args.node_limit {
            solver.node_limit = n;
        }
        if let Some(t) = args.feasibility_tol {
            solver.feasibility_tol = t;
        }
        Ok(Self {
            topology_path: args.topology.clone(),
            instance,
            format: args.format,
            solver,
        })
    }

    /// Applies `--select` and `--add-system`.
    fn modified(&self, select: Option<&str>, add_system: Option<&str>) -> Result<NetworkInstance, CliError> {
        let on_path = model_err(&self.topology_path);
        let mut topo = self.instance.topology().clone();
        if let Some(sel) = select {
            let ids = node_list(sel)?;
            topo = apply_modification(&topo, &Modification::SelectNodes(ids)).map_err(&on_path)?;
        }
        if let Some(list) = add_system {
            for name in split_list(list) {
                let i = topo.find_edge(name).map_err(&on_path)?;
                let key = topo.edges[i].key();
                topo = apply_modification(&topo, &Modification::AddSystem(key)).map_err(&on_path)?;
            }
        }
        self.instance.with_topology(topo).map_err(on_path)
    }
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|p| !p.is_empty())
}

fn node_list(s: &str) -> Result<Vec<NodeId>, CliError> {
    split_list(s)
        .map(|p| NodeId::new(p).map_err(|e| CliError::Input(e.to_string())))
        .collect()
}

/// Parses `85` or `0..150` into the lengths to evaluate.
pub fn parse_lengths(spec: &str, step: f64) -> Result<Vec<f64>, CliError> {
    let num = |s: &str| -> Result<f64, CliError> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| CliError::Input(format!("--length: {s:?} is not a number")))?;
        if v.is_finite() && v >= 0.0 {
            Ok(v)
        } else {
            Err(CliError::Input(format!("--length: {v} must be a non-negative length in km")))
        }
    };
    match spec.split_once("..") {
        None => Ok(vec![num(spec)?]),
        Some((a, b)) => {
            let (a, b) = (num(a)?, num(b)?);
            if !(step > 0.0 && step.is_finite()) {
                return Err(CliError::Input(format!("--step must be positive, got {step}")));
            }
            if b < a {
                return Err(CliError::Input(format!("--length: empty range {spec}")));
            }
            let n = ((b - a) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| a + i as f64 * step).collect())
        }
    }
}

fn cmd_keyrate(args: &KeyrateArgs) -> Result<String, CliError> {
    let params = load_params(&args.params)?;
    let mut out = String::from("length_km,rate_bps\n");
    for l in parse_lengths(&args.length, args.step)? {
        let _ = writeln!(out, "{l},{}", key_rate(l, &params));
    }
    Ok(out)
}

fn verdict(b: f64) -> &'static str {
    if is_satisfied(b) {
        "satisfied"
    } else {
        "not satisfied"
    }
}

fn render_bound(r: &BoundResult, format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::Csv => {
            out.push_str("Source,Sink,Satisfaction\n");
            for ((s, t), m) in &r.satisfactions {
                let _ = writeln!(out, "{s},{t},{m}");
            }
            let _ = writeln!(out, "Bound,,{}", r.bound);
        }
        Format::Table => {
            let _ = writeln!(out, "Bound: {} ({})", fmt_bound(r.bound), verdict(r.bound));
            let _ = writeln!(out, "Connections: {}", r.satisfactions.len());
            let width = r
                .satisfactions
                .iter()
                .map(|((s, t), _)| s.as_str().len() + t.as_str().len() + 2)
                .max()
                .unwrap_or(0)
                .max("Connection".len());
            let _ = writeln!(out, "{:<width$}  Satisfaction", "Connection");
            for ((s, t), m) in &r.satisfactions {
                let _ = writeln!(out, "{:<width$}  {}", format!("{s}->{t}"), fmt_bound(*m));
            }
        }
        Format::Structured => {
            let _ = writeln!(out, "bound = {}", r.bound);
            let _ = writeln!(out, "satisfied = {}", is_satisfied(r.bound));
            for ((s, t), m) in &r.satisfactions {
                let _ = writeln!(out, "satisfaction.{s}.{t} = {m}");
            }
        }
    }
    out
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

fn flows_csv(r: &BoundResult) -> String {
    let mut out = String::from("source,sink,from,to,packets_per_s\n");
    for (k, v) in &r.assignment.flows {
        if *v != 0.0 {
            let _ = writeln!(out, "{},{},{},{},{}", k.source, k.sink, k.from, k.to, v);
        }
    }
    out
}

fn export_text(instance: &NetworkInstance) -> Result<String, CliError> {
    let milp = mcfp::build_milp(instance)?;
    lp_format::to_lp_string(&milp.program).map_err(|source| CliError::Solver {
        context: String::new(),
        source,
    })
}

fn cmd_bound(args: &BoundArgs) -> Result<String, CliError> {
    let cfg = RunConfig::from_args(&args.run)?;
    let inst = cfg.modified(args.select.as_deref(), args.add_system.as_deref())?;
    let topo = cfg.topology_path.as_path();
    if let Some(path) = &args.export_lp {
        write_file(path, &export_text(&inst).map_err(|e| e.at(topo))?)?;
    }
    let r = mcfp::its_bound(&inst, &cfg.solver).map_err(|e| CliError::from(e).at(topo))?;
    if let Some(path) = &args.dump_flows {
        write_file(path, &flows_csv(&r))?;
    }
    Ok(render_bound(&r, cfg.format))
}

fn cmd_place(args: &PlaceArgs) -> Result<String, CliError> {
    let cfg = RunConfig::from_args(&args.run)?;
    let candidates: Vec<String> = if args.candidates.trim() == "all" {
        cfg.instance
            .topology()
            .active_edges()
            .map(|(_, e)| e.name())
            .collect()
    } else {
        split_list(&args.candidates).map(str::to_owned).collect()
    };
    let rep = evaluator::evaluate_placements(&cfg.instance, &candidates, &cfg.solver, args.workers)
        .map_err(|e| CliError::from(e).at(&cfg.topology_path))?;
    Ok(match cfg.format {
        Format::Csv => rep.to_csv(),
        Format::Table => rep.to_table(),
        Format::Structured => rep.to_structured(),
    })
}

fn cmd_select(args: &SelectArgs) -> Result<String, CliError> {
    let cfg = RunConfig::from_args(&args.run)?;
    let nodes = match &args.optional {
        Some(list) => node_list(list)?,
        None => cfg
            .instance
            .topology()
            .nodes
            .iter()
            .filter(|n| n.optional)
            .map(|n| n.id.clone())
            .collect(),
    };
    let rep = evaluator::evaluate_selection(&cfg.instance, &nodes, &cfg.solver, args.workers)
        .map_err(|e| CliError::from(e).at(&cfg.topology_path))?;
    Ok(match cfg.format {
        Format::Csv => rep.to_csv(),
        Format::Table => rep.to_table(),
        Format::Structured => rep.to_structured(),
    })
}

fn cmd_export(args: &ExportArgs) -> Result<String, CliError> {
    let cfg = RunConfig::from_args(&args.run)?;
    let inst = cfg.modified(args.select.as_deref(), args.add_system.as_deref())?;
    let text = export_text(&inst).map_err(|e| e.at(&cfg.topology_path))?;
    match &args.output {
        Some(path) => {
            write_file(path, &text)?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

/// Runs a parsed command and returns its standard output.
pub fn execute(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Keyrate(a) => cmd_keyrate(a),
        Command::Bound(a) => cmd_bound(a),
        Command::Place(a) => cmd_place(a),
        Command::Select(a) => cmd_select(a),
        Command::ExportLp(a) => cmd_export(a),
    }
}

/// Parses `args`, runs the command, and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(text) => match stdout.write_all(text.as_bytes()) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                let _ = writeln!(stderr, "error: {e}");
                EXIT_FAILURE
            }
        },
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
