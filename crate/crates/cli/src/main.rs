mod device;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Map, Value};

use device::{read_channel, read_joint, read_povm, DeviceError, DeviceFile};
use incompat_core::measures::{
    diamond_distance, l1_povm_error, minimize_disturbance, robustness_of_measurement,
    roi_channel_channel, roi_channel_povm, roi_povm_povm, woi_channel_channel, DualSource,
    IncompatReport, MeasureOptions, Method,
};
use incompat_core::quantum::{sample_random_channel, sample_random_povm};
use incompat_core::sdp::SolverSettings;
use incompat_core::sweep::{format_significant, run_sweep, to_csv, Family, SweepSpec};
use incompat_core::tradeoff::{
    verify_hm_dominance, verify_lipschitz, verify_prop3, verify_theorem1, verify_theorem2,
    verify_theorem4, TradeoffReport,
};

const DEFAULT_CONFIG: &str = "incompat.toml";

#[derive(Parser)]
#[command(
    name = "incompat",
    version,
    about = "Incompatibility measures and tradeoff checks for quantum devices"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Output format [default: csv for sweeps, json otherwise].
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Seed for random sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Relative duality gap tolerance.
    #[arg(long, global = true)]
    gap_tol: Option<f64>,
    /// Primal and dual residual tolerance.
    #[arg(long, global = true)]
    res_tol: Option<f64>,
    /// Interior-point iteration limit.
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    /// TOML file with solver settings [default: ./incompat.toml if present].
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Generalized robustness of incompatibility.
    #[command(subcommand)]
    Roi(RoiCommand),
    /// Weight of incompatibility of two channels.
    Woi { a: PathBuf, b: PathBuf },
    /// Diamond-norm distance between two channels.
    Diamond { a: PathBuf, b: PathBuf },
    /// Robustness of measurement.
    Rom { e: PathBuf },
    /// Sum of operator-norm distances between matching effects.
    L1Error { e: PathBuf, g: PathBuf },
    /// Smallest diamond distance to the identity after a recovery channel.
    Disturbance { lambda: PathBuf },
    /// Evaluate a tradeoff inequality.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Parameter sweep over a measurement family, as CSV.
    #[command(subcommand)]
    Sweep(SweepCommand),
    /// Sample a random device file.
    #[command(subcommand)]
    Random(RandomCommand),
}

#[derive(Subcommand)]
enum RoiCommand {
    ChannelChannel { a: PathBuf, b: PathBuf },
    ChannelPovm { lambda: PathBuf, e: PathBuf },
    PovmPovm { e: PathBuf, f: PathBuf },
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// 2 R(a, b) against the diamond errors of a joint channel's marginals.
    Theorem1 {
        a: PathBuf,
        b: PathBuf,
        joint: PathBuf,
    },
    /// 2 R(e, f) against the effect errors of a joint measurement.
    Theorem2 { e: PathBuf, f: PathBuf, g: PathBuf },
    /// Closed-form bound against R(id, e).
    Prop3 { e: PathBuf },
    /// Error plus disturbance of a K-channel against the robustness bound.
    Theorem4 {
        e: PathBuf,
        k: PathBuf,
        lambda: PathBuf,
    },
    /// Robustness bound against the Heinosaari-Miyadera bound.
    HmDominance { e: PathBuf },
    /// 2 |R(a, b) - R(c, d)| against the diamond distances.
    Lipschitz {
        a: PathBuf,
        b: PathBuf,
        c: PathBuf,
        d: PathBuf,
    },
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, default_value_t = 0.0)]
    start: f64,
    #[arg(long, default_value_t = 1.0)]
    end: f64,
    #[arg(long, default_value_t = 11)]
    steps: usize,
    /// Comma-separated subset of columns.
    #[arg(long, value_delimiter = ',')]
    columns: Vec<String>,
}

#[derive(Subcommand)]
enum SweepCommand {
    /// Z(eta): columns eta, rom, roi_id_povm, bound_corollary, bound_hm.
    UnbiasedEta(GridArgs),
    /// Six-outcome family: columns p, rom, bound_corollary, bound_hm, effect_norm, complement_norm.
    SixfoldP(GridArgs),
}

#[derive(Subcommand)]
enum RandomCommand {
    Povm {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        outcomes: usize,
    },
    Channel {
        #[arg(long)]
        dim_in: usize,
        #[arg(long)]
        dim_out: usize,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    gap_tol: Option<f64>,
    res_tol: Option<f64>,
    max_iters: Option<usize>,
    jobs: Option<usize>,
}

enum Failure {
    /// An inequality evaluated to a negative slack.
    Inequality,
    Input(String),
    Solver(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Inequality => 1,
            Failure::Input(_) => 2,
            Failure::Solver(_) => 3,
        }
    }
}

impl From<DeviceError> for Failure {
    fn from(e: DeviceError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<incompat_core::Error> for Failure {
    fn from(e: incompat_core::Error) -> Self {
        use incompat_core::Error as E;
        match e {
            E::Solver { .. } | E::CrossCheck { .. } => Failure::Solver(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

struct Context {
    format: Format,
    format_given: Option<Format>,
    seed: u64,
    opts: MeasureOptions,
    jobs: usize,
}

fn load_config(path: Option<&Path>) -> Result<ConfigFile, Failure> {
    let (path, required) = match path {
        Some(p) => (p.to_path_buf(), true),
        None => (PathBuf::from(DEFAULT_CONFIG), false),
    };
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if !required && e.kind() == std::io::ErrorKind::NotFound => {
            return Ok(ConfigFile::default())
        }
        Err(e) => return Err(Failure::Input(format!("{}: {e}", path.display()))),
    };
    toml::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn context(g: &GlobalArgs) -> Result<Context, Failure> {
    let cfg = load_config(g.config.as_deref())?;
    let defaults = SolverSettings::default();
    let settings = SolverSettings {
        gap_tol: g.gap_tol.or(cfg.gap_tol).unwrap_or(defaults.gap_tol),
        res_tol: g.res_tol.or(cfg.res_tol).unwrap_or(defaults.res_tol),
        max_iters: g.max_iters.or(cfg.max_iters).unwrap_or(defaults.max_iters),
    };
    if !(settings.gap_tol > 0.0 && settings.res_tol > 0.0 && settings.max_iters > 0) {
        return Err(Failure::Input(
            "solver tolerances and the iteration limit must be positive".into(),
        ));
    }
    let jobs = g.jobs.or(cfg.jobs).unwrap_or(1);
    if jobs == 0 {
        return Err(Failure::Input("--jobs must be at least 1".into()));
    }
    Ok(Context {
        format: g.format.unwrap_or(Format::Json),
        format_given: g.format,
        seed: g.seed,
        opts: MeasureOptions::with_settings(settings),
        jobs,
    })
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::PrimalSdp => "primal-sdp",
        Method::DualSdp => "dual-sdp",
        Method::Bisection => "bisection",
        Method::Analytic => "analytic",
    }
}

fn dual_source_name(s: DualSource) -> &'static str {
    match s {
        DualSource::SeparateProgram => "separate-program",
        DualSource::PrimalMultipliers => "primal-multipliers",
    }
}

fn measure_record(r: &IncompatReport) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("value".into(), json!(r.value));
    m.insert("primal".into(), json!(r.primal_value));
    m.insert("dual".into(), json!(r.dual_value));
    m.insert("gap".into(), json!(r.gap()));
    m.insert("method".into(), json!(method_name(r.method)));
    m.insert("dual_source".into(), json!(dual_source_name(r.dual_source)));
    m.insert("iterations".into(), json!(r.iterations));
    m
}

fn value_record(v: f64) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("value".into(), json!(v));
    m
}

fn tradeoff_record(r: &TradeoffReport) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("inequality".into(), json!(r.inequality.as_str()));
    m.insert("lhs".into(), json!(r.lhs));
    m.insert("rhs".into(), json!(r.rhs));
    m.insert("slack".into(), json!(r.slack));
    m.insert("pass".into(), json!(r.pass));
    m.insert("instance".into(), json!(r.instance));
    m
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Number(n) => n.as_f64().map_or_else(|| n.to_string(), format_significant),
        Value::String(s) if s.contains([',', '"', '\n']) => {
            format!("\"{}\"", s.replace('"', "\"\""))
        }
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn render(record: &Map<String, Value>, format: Format) -> String {
    match format {
        Format::Json => format!("{}\n", Value::Object(record.clone())),
        Format::Csv => {
            let header: Vec<&str> = record.keys().map(String::as_str).collect();
            let row: Vec<String> = record.values().map(csv_cell).collect();
            format!("{}\n{}\n", header.join(","), row.join(","))
        }
    }
}

fn verify_output(r: TradeoffReport, ctx: &Context) -> Result<String, Failure> {
    let text = render(&tradeoff_record(&r), ctx.format);
    if r.pass {
        Ok(text)
    } else {
        print!("{text}");
        Err(Failure::Inequality)
    }
}

fn run_verify(cmd: VerifyCommand, ctx: &Context) -> Result<String, Failure> {
    let opts = &ctx.opts;
    let report = match cmd {
        VerifyCommand::Theorem1 { a, b, joint } => verify_theorem1(
            &read_channel(&a)?,
            &read_channel(&b)?,
            &read_joint(&joint)?,
            opts,
        )?,
        VerifyCommand::Theorem2 { e, f, g } => {
            verify_theorem2(&read_povm(&e)?, &read_povm(&f)?, &read_povm(&g)?, opts)?
        }
        VerifyCommand::Prop3 { e } => verify_prop3(&read_povm(&e)?, opts)?,
        VerifyCommand::Theorem4 { e, k, lambda } => verify_theorem4(
            &read_povm(&e)?,
            &read_povm(&k)?,
            &read_channel(&lambda)?,
            opts,
        )?,
        VerifyCommand::HmDominance { e } => verify_hm_dominance(&read_povm(&e)?)?,
        VerifyCommand::Lipschitz { a, b, c, d } => verify_lipschitz(
            &read_channel(&a)?,
            &read_channel(&b)?,
            &read_channel(&c)?,
            &read_channel(&d)?,
            opts,
        )?,
    };
    verify_output(report, ctx)
}

fn run_sweep_command(cmd: SweepCommand, ctx: &Context) -> Result<String, Failure> {
    let (family, grid) = match cmd {
        SweepCommand::UnbiasedEta(g) => (Family::UnbiasedEta, g),
        SweepCommand::SixfoldP(g) => (Family::SixfoldP, g),
    };
    let spec = SweepSpec {
        columns: grid.columns,
        ..SweepSpec::new(family, grid.start, grid.end, grid.steps)
    };
    let rows = run_sweep(&spec, &ctx.opts, ctx.jobs)?;
    if ctx.format_given != Some(Format::Json) {
        return Ok(to_csv(&spec, &rows));
    }
    let all = family.columns();
    let records: Vec<Value> = rows
        .iter()
        .map(|row| {
            let mut m = Map::new();
            for col in spec.selected_columns() {
                let i = all
                    .iter()
                    .position(|c| *c == col)
                    .expect("validated column");
                m.insert(col.to_string(), json!(row.values[i]));
            }
            Value::Object(m)
        })
        .collect();
    Ok(format!("{}\n", Value::Array(records)))
}

fn run(cli: Cli) -> Result<String, Failure> {
    let ctx = context(&cli.global)?;
    let opts = &ctx.opts;
    let record = match cli.command {
        Command::Roi(RoiCommand::ChannelChannel { a, b }) => measure_record(&roi_channel_channel(
            &read_channel(&a)?,
            &read_channel(&b)?,
            opts,
        )?),
        Command::Roi(RoiCommand::ChannelPovm { lambda, e }) => measure_record(&roi_channel_povm(
            &read_channel(&lambda)?,
            &read_povm(&e)?,
            opts,
        )?),
        Command::Roi(RoiCommand::PovmPovm { e, f }) => {
            measure_record(&roi_povm_povm(&read_povm(&e)?, &read_povm(&f)?, opts)?)
        }
        Command::Woi { a, b } => measure_record(&woi_channel_channel(
            &read_channel(&a)?,
            &read_channel(&b)?,
            opts,
        )?),
        Command::Diamond { a, b } => measure_record(&diamond_distance(
            &read_channel(&a)?,
            &read_channel(&b)?,
            opts,
        )?),
        Command::Rom { e } => value_record(robustness_of_measurement(&read_povm(&e)?)?),
        Command::L1Error { e, g } => value_record(l1_povm_error(&read_povm(&e)?, &read_povm(&g)?)?),
        Command::Disturbance { lambda } => {
            let r = minimize_disturbance(&read_channel(&lambda)?, opts)?;
            let mut m = value_record(r.recovered_distance);
            m.insert("sdp_value".into(), json!(r.value));
            m.insert("iterations".into(), json!(r.iterations));
            if ctx.format == Format::Json {
                let rec = serde_json::to_value(DeviceFile::from_channel(&r.best_recovery))
                    .expect("serializable");
                m.insert("recovery".into(), rec);
            }
            m
        }
        Command::Verify(cmd) => return run_verify(cmd, &ctx),
        Command::Sweep(cmd) => return run_sweep_command(cmd, &ctx),
        Command::Random(cmd) => {
            if ctx.format == Format::Csv {
                return Err(Failure::Input(
                    "device files are only written as JSON".into(),
                ));
            }
            let file = match cmd {
                RandomCommand::Povm { dim, outcomes } => {
                    DeviceFile::from_povm(&sample_random_povm(dim, outcomes, ctx.seed)?)
                }
                RandomCommand::Channel { dim_in, dim_out } => {
                    if dim_in == 0 || dim_out == 0 {
                        return Err(Failure::Input("channel dimensions must be positive".into()));
                    }
                    DeviceFile::from_channel(&sample_random_channel(dim_in, dim_out, ctx.seed)?)
                }
            };
            return Ok(format!("{}\n", file.to_json()));
        }
    };
    Ok(render(&record, ctx.format))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            match &f {
                Failure::Inequality => eprintln!("error: inequality check failed"),
                Failure::Input(m) => eprintln!("input error: {m}"),
                Failure::Solver(m) => eprintln!("solver error: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
