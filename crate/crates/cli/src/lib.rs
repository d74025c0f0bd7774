//! Argument parsing and command dispatch for the `mqrk` binary.
//!
//! [`parse_args`] turns an argv into a validated [`CliConfig`]; [`run`]
//! executes it and maps failures onto the exit-code contract:
//! `0` success, `1` domain error during integration, `2` usage error.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use mqrk::exec::Execution;
use mqrk::harness::{
    self, default_steps, emit_report, find_problem, format_error, local_order_probe_on, run_convergence_on,
    shape_override, ConvergenceReport, ConvergenceRow, ReportFormat, PROBLEM_IDS,
};
use mqrk::shape::{shape_for, ShapeResult};
use mqrk::stability::{derive_stability_poly, exp_match_order, rasterize_region, real_stability_interval};
use mqrk::stepper::{integrate_with, IntegrateOptions, Trajectory};
use mqrk::{catalog, find_method, Error, MethodSpec, OdeProblem};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Default stability window `reMin:reMax:imMin:imMax`.
pub const DEFAULT_WINDOW: Window = Window {
    re_min: -6.0,
    re_max: 2.0,
    im_min: -4.5,
    im_max: 4.5,
};
pub const DEFAULT_GRID_STEP: f64 = 0.01;

#[derive(Parser, Debug)]
#[command(name = "mqrk", version, about = "Shape-optimized explicit Runge-Kutta integrators and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Print every method id with its stage count, order and shape ratios
    ListMethods(Options),
    /// Integrate one problem with one method and write the trajectory
    Solve(Options),
    /// Global error and observed order over a sequence of step counts
    Converge(Options),
    /// Rasterize the absolute stability region of a method
    Stability(Options),
    /// Print the shape parameters of one step
    Shape(Options),
    /// Single-step error against step size
    LocalOrder(Options),
}

/// Every flag, as given on the command line or in a `--config` JSON file.
///
/// Absent fields fall back to the config file, then to per-command defaults.
#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    /// Method id (see `list-methods`)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,

    /// Problem id: eg1..eg5
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub problem: Option<String>,

    /// Step counts, comma separated (`solve` takes exactly one)
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<Vec<usize>>,

    /// Stability window `reMin:reMax:imMin:imMax`
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<String>,

    /// Stability grid spacing
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,

    /// Step sizes for `local-order`, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hs: Option<Vec<f64>>,

    /// Time of the evaluation point for `shape` and `local-order`
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,

    /// State of the evaluation point for `shape`, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<f64>>,

    /// Override the initial time for `solve`
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,

    /// Override the initial state for `solve`, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u0: Option<Vec<f64>>,

    /// Output file; stdout when absent
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,

    /// Output format: csv, markdown or json
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,

    /// Sweep execution: parallel or sequential
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exec: Option<String>,

    /// JSON file with any of the above; flags win
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl Options {
    /// Fill every field unset here from `base`.
    fn or(self, base: Options) -> Options {
        Options {
            method: self.method.or(base.method),
            problem: self.problem.or(base.problem),
            steps: self.steps.or(base.steps),
            window: self.window.or(base.window),
            step: self.step.or(base.step),
            hs: self.hs.or(base.hs),
            t: self.t.or(base.t),
            u: self.u.or(base.u),
            t0: self.t0.or(base.t0),
            u0: self.u0.or(base.u0),
            out: self.out.or(base.out),
            format: self.format.or(base.format),
            exec: self.exec.or(base.exec),
            config: None,
        }
    }

    /// Names of the flags that are set.
    fn present(&self) -> Vec<&'static str> {
        let flags = [
            ("method", self.method.is_some()),
            ("problem", self.problem.is_some()),
            ("steps", self.steps.is_some()),
            ("window", self.window.is_some()),
            ("step", self.step.is_some()),
            ("hs", self.hs.is_some()),
            ("t", self.t.is_some()),
            ("u", self.u.is_some()),
            ("t0", self.t0.is_some()),
            ("u0", self.u0.is_some()),
            ("out", self.out.is_some()),
            ("format", self.format.is_some()),
            ("exec", self.exec.is_some()),
        ];
        flags.iter().filter(|f| f.1).map(|f| f.0).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    ListMethods,
    Solve,
    Converge,
    Stability,
    Shape,
    LocalOrder,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::ListMethods => "list-methods",
            Command::Solve => "solve",
            Command::Converge => "converge",
            Command::Stability => "stability",
            Command::Shape => "shape",
            Command::LocalOrder => "local-order",
        }
    }

    fn accepts(self) -> &'static [&'static str] {
        const IO: [&str; 2] = ["out", "format"];
        match self {
            Command::ListMethods => &IO,
            Command::Solve => &["method", "problem", "steps", "t0", "u0", "out", "format"],
            Command::Converge => &["method", "problem", "steps", "exec", "out", "format"],
            Command::Stability => &["method", "window", "step", "exec", "out", "format"],
            Command::Shape => &["method", "problem", "t", "u", "out", "format"],
            Command::LocalOrder => &["method", "problem", "t", "hs", "out", "format"],
        }
    }

    fn needs(self) -> &'static [&'static str] {
        match self {
            Command::ListMethods => &[],
            Command::Stability => &["method"],
            _ => &["method", "problem"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl std::str::FromStr for Window {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| format!("--window `{s}`: {e}"))?;
        let [re_min, re_max, im_min, im_max] = parts[..] else {
            return Err(format!("--window `{s}`: expected reMin:reMax:imMin:imMax"));
        };
        if !(re_min < re_max && im_min < im_max) {
            return Err(format!("--window `{s}`: bounds must be increasing"));
        }
        Ok(Window {
            re_min,
            re_max,
            im_min,
            im_max,
        })
    }
}

/// A fully validated invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub command: Command,
    pub method: Option<&'static MethodSpec>,
    pub problem: Option<String>,
    pub steps: Vec<usize>,
    pub window: Window,
    pub grid_step: f64,
    pub hs: Vec<f64>,
    pub t: Option<f64>,
    pub u: Option<Vec<f64>>,
    pub t0: Option<f64>,
    pub u0: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
    pub format: ReportFormat,
    pub exec: Execution,
    /// The merged options this config was built from.
    pub options: Options,
}

impl CliConfig {
    /// JSON that reproduces this config through `--config`.
    pub fn to_config_json(&self) -> String {
        serde_json::to_string_pretty(&self.options).expect("options serialize")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum UsageError {
    #[error(transparent)]
    Clap(#[from] clap::Error),
    #[error("{0}")]
    Invalid(String),
}

impl UsageError {
    pub fn exit_code(&self) -> i32 {
        match self {
            UsageError::Clap(e) => e.exit_code(),
            UsageError::Invalid(_) => EXIT_USAGE,
        }
    }

    /// Print to the stream clap would use (stdout for `--help`).
    pub fn print(&self) {
        match self {
            UsageError::Clap(e) => {
                let _ = e.print();
            }
            UsageError::Invalid(msg) => eprintln!("error: {msg}"),
        }
    }
}

fn invalid(msg: impl Into<String>) -> UsageError {
    UsageError::Invalid(msg.into())
}

/// The default `local-order` ladder `2⁻⁶ … 2⁻¹²`.
pub fn default_hs() -> Vec<f64> {
    (6..=12).map(|k| 2f64.powi(-k)).collect()
}

/// Parse and validate `argv` (including the program name).
pub fn parse_args<I, T>(argv: I) -> Result<CliConfig, UsageError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    let (command, flags) = match cli.command {
        Cmd::ListMethods(o) => (Command::ListMethods, o),
        Cmd::Solve(o) => (Command::Solve, o),
        Cmd::Converge(o) => (Command::Converge, o),
        Cmd::Stability(o) => (Command::Stability, o),
        Cmd::Shape(o) => (Command::Shape, o),
        Cmd::LocalOrder(o) => (Command::LocalOrder, o),
    };
    let file = match &flags.config {
        Some(path) => read_config(path)?,
        None => Options::default(),
    };
    validate(command, flags.or(file))
}

fn read_config(path: &Path) -> Result<Options, UsageError> {
    let text = fs::read_to_string(path).map_err(|e| invalid(format!("--config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("--config {}: {e}", path.display())))
}

fn validate(command: Command, opts: Options) -> Result<CliConfig, UsageError> {
    let name = command.name();
    if let Some(flag) = opts.present().into_iter().find(|f| !command.accepts().contains(f)) {
        return Err(invalid(format!("--{flag} is not used by `{name}`")));
    }
    let present = opts.present();
    if let Some(flag) = command.needs().iter().find(|f| !present.contains(f)) {
        return Err(invalid(format!("`{name}` requires --{flag}")));
    }

    let method = opts
        .method
        .as_deref()
        .map(find_method)
        .transpose()
        .map_err(|e| invalid(format!("--method: {e}")))?;
    let problem = match opts.problem.as_deref() {
        Some(id) if !PROBLEM_IDS.contains(&id) => {
            return Err(invalid(format!(
                "--problem: unknown problem `{id}`; valid ids: {}",
                PROBLEM_IDS.join(", ")
            )))
        }
        other => other.map(str::to_string),
    };

    let steps = match (&opts.steps, &problem) {
        (Some(s), _) => s.clone(),
        (None, Some(p)) if command == Command::Solve => vec![*default_steps(p).last().expect("non-empty")],
        (None, Some(p)) => default_steps(p),
        (None, None) => Vec::new(),
    };
    if steps.contains(&0) {
        return Err(invalid("--steps: step counts must be positive"));
    }
    match command {
        Command::Solve if steps.len() != 1 => {
            return Err(invalid("--steps: `solve` takes a single step count"));
        }
        Command::Converge if steps.windows(2).any(|w| w[0] >= w[1]) => {
            return Err(invalid("--steps: step counts must be strictly increasing"));
        }
        _ => {}
    }

    let window = match &opts.window {
        Some(w) => w.parse::<Window>().map_err(invalid)?,
        None => DEFAULT_WINDOW,
    };
    let grid_step = opts.step.unwrap_or(DEFAULT_GRID_STEP);
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(invalid("--step: grid spacing must be positive"));
    }
    let hs = opts.hs.clone().unwrap_or_else(default_hs);
    if hs.len() < 2 || hs.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
        return Err(invalid("--hs: need at least two positive step sizes"));
    }
    for (flag, v) in [("t", opts.t), ("t0", opts.t0)] {
        if v.is_some_and(|x| !x.is_finite()) {
            return Err(invalid(format!("--{flag}: must be finite")));
        }
    }
    if let (Some(p), Some(u)) = (&problem, opts.u.as_ref().or(opts.u0.as_ref())) {
        let dim = find_problem(p).expect("id checked").dim;
        if u.len() != dim {
            let flag = if opts.u.is_some() { "u" } else { "u0" };
            return Err(invalid(format!("--{flag}: {p} has dimension {dim}, got {} values", u.len())));
        }
    }

    let format = match opts.format.as_deref() {
        Some(f) => f.parse::<ReportFormat>().map_err(|e| invalid(format!("--format: {e}")))?,
        None => ReportFormat::Csv,
    };
    let exec = match opts.exec.as_deref() {
        None | Some("parallel") => Execution::Parallel,
        Some("sequential") => Execution::Sequential,
        Some(other) => {
            return Err(invalid(format!(
                "--exec: unknown mode `{other}`; expected parallel or sequential"
            )))
        }
    };

    Ok(CliConfig {
        command,
        method,
        problem,
        steps,
        window,
        grid_step,
        hs,
        t: opts.t,
        u: opts.u.clone(),
        t0: opts.t0,
        u0: opts.u0.clone(),
        out: opts.out.clone(),
        format,
        exec,
        options: opts,
    })
}

/// A failure while running a valid config.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    /// Integration hit a domain error; `output` is the partial result.
    #[error("{error}")]
    Aborted { error: Error, output: String },
    #[error(transparent)]
    Core(Error),
    #[error("writing output: {0}")]
    Io(#[from] io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Aborted { .. } | RunError::Io(_) => EXIT_DOMAIN,
            RunError::Core(e) if is_domain(e) => EXIT_DOMAIN,
            RunError::Core(_) => EXIT_USAGE,
        }
    }
}

fn is_domain(e: &Error) -> bool {
    match e {
        Error::Domain(_) | Error::Stage { .. } => true,
        Error::Run { source, .. } => is_domain(source),
        _ => false,
    }
}

/// Size the global rayon pool from `MQRK_THREADS` (unset or 0 = automatic).
pub fn configure_threads() {
    #[cfg(feature = "parallel")]
    if let Some(n) = std::env::var("MQRK_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            // a second call in the same process keeps the first pool
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Run `config`, writing results to `--out` or stdout and diagnostics to
/// stderr. Returns the process exit code.
pub fn run(config: &CliConfig) -> i32 {
    configure_threads();
    let result = execute(config);
    let (text, code) = match result {
        Ok(text) => (Some(text), EXIT_OK),
        Err(RunError::Aborted { error, output }) => {
            eprintln!("error: {error}");
            (Some(output), EXIT_DOMAIN)
        }
        Err(e) => {
            eprintln!("error: {e}");
            (None, e.exit_code())
        }
    };
    if let Some(text) = text {
        if let Err(e) = write_output(config.out.as_deref(), &text) {
            eprintln!("error: writing output: {e}");
            return EXIT_DOMAIN;
        }
    }
    code
}

fn write_output(out: Option<&Path>, text: &str) -> io::Result<()> {
    match out {
        Some(path) => fs::write(path, text),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()
        }
    }
}

/// Produce the output document for `config`.
pub fn execute(config: &CliConfig) -> Result<String, RunError> {
    match config.command {
        Command::ListMethods => Ok(list_methods(config.format)),
        Command::Solve => solve(config),
        Command::Converge => converge(config),
        Command::Stability => stability(config),
        Command::Shape => shape(config),
        Command::LocalOrder => local_order(config),
    }
}

fn method(config: &CliConfig) -> &'static MethodSpec {
    config.method.expect("validated: method present")
}

fn problem(config: &CliConfig) -> OdeProblem {
    find_problem(config.problem.as_deref().expect("validated: problem present")).expect("validated id")
}

fn join<T: ToString>(xs: &[T], sep: &str) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(sep)
}

fn list_methods(format: ReportFormat) -> String {
    #[derive(Serialize)]
    struct Row<'a> {
        id: &'a str,
        stages: usize,
        order: usize,
        classical: bool,
        kappa: &'a [f64],
    }
    let rows: Vec<Row> = catalog()
        .iter()
        .map(|m| Row {
            id: m.id,
            stages: m.stages,
            order: m.formal_order,
            classical: m.classical,
            kappa: &m.kappa,
        })
        .collect();
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            out.push_str("id,stages,order,classical,kappa\n");
            for r in &rows {
                let _ = writeln!(out, "{},{},{},{},{}", r.id, r.stages, r.order, r.classical, join(r.kappa, ";"));
            }
        }
        ReportFormat::Markdown => {
            out.push_str("| id | stages | order | classical | kappa |\n|---|---:|---:|---|---|\n");
            for r in &rows {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {} |",
                    r.id,
                    r.stages,
                    r.order,
                    r.classical,
                    join(r.kappa, ", ")
                );
            }
        }
        ReportFormat::Json => {
            out = serde_json::to_string_pretty(&serde_json::json!({ "schema": 1, "methods": rows }))
                .expect("rows serialize");
            out.push('\n');
        }
    }
    out
}

fn solve(config: &CliConfig) -> Result<String, RunError> {
    let spec = method(config);
    let mut p = problem(config);
    if config.t0.is_some() || config.u0.is_some() {
        let t0 = config.t0.unwrap_or(p.t0);
        let u0 = config.u0.clone().unwrap_or_else(|| p.u0.clone());
        p = p.with_initial(t0, u0);
    }
    let n = config.steps[0];
    let opts = IntegrateOptions {
        shape_override: shape_override(&p.name, spec.id),
        final_only: false,
    };
    match integrate_with(spec, &p, n, &opts) {
        Ok(traj) => Ok(render_trajectory(&traj, spec, &p, config.format, None)?),
        Err(aborted) => {
            if !is_domain(&aborted.error) {
                return Err(RunError::Core(aborted.error));
            }
            let output = render_trajectory(&aborted.partial, spec, &p, config.format, Some(&aborted.error))?;
            Err(RunError::Aborted {
                error: aborted.error,
                output,
            })
        }
    }
}

fn render_trajectory(
    traj: &Trajectory,
    spec: &MethodSpec,
    p: &OdeProblem,
    format: ReportFormat,
    aborted: Option<&Error>,
) -> io::Result<String> {
    let error = if aborted.is_none() {
        p.exact(traj.final_t).map(|e| {
            e.iter()
                .zip(&traj.final_u)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
    } else {
        None
    };
    let status = if aborted.is_some() { "aborted" } else { "completed" };
    match format {
        ReportFormat::Csv => {
            let mut buf = Vec::new();
            traj.write_csv(&mut buf, spec.stages)?;
            let mut out = String::from_utf8(buf).expect("csv is utf-8");
            if let Some(e) = aborted {
                let _ = writeln!(out, "# status: aborted; {e}");
            }
            Ok(out)
        }
        ReportFormat::Markdown => {
            let mut out = String::new();
            let _ = writeln!(out, "Solution: {} on {}", traj.method, traj.problem);
            out.push('\n');
            out.push_str("| quantity | value |\n|---|---|\n");
            let _ = writeln!(out, "| steps | {} |", traj.steps_taken);
            let _ = writeln!(out, "| h | {:e} |", traj.h);
            let _ = writeln!(out, "| final t | {:e} |", traj.final_t);
            let _ = writeln!(out, "| final u | {} |", join(&traj.final_u, ", "));
            if let Some(err) = error {
                let _ = writeln!(out, "| error | {} |", format_error(err));
            }
            let _ = writeln!(out, "| max eps^2 h^2 | {:e} |", traj.monitors.max_eps_h2);
            let _ = writeln!(out, "| fallback steps | {} |", traj.monitors.fallback_count);
            let _ = writeln!(out, "| status | {status} |");
            if let Some(e) = aborted {
                let _ = writeln!(out, "\nstatus: aborted; {e}");
            }
            Ok(out)
        }
        ReportFormat::Json => {
            let doc = serde_json::json!({
                "schema": 1,
                "problem": traj.problem,
                "method": traj.method,
                "steps": traj.steps_taken,
                "h": traj.h,
                "final_t": traj.final_t,
                "final_u": traj.final_u,
                "error": error,
                "monitors": traj.monitors,
                "status": status,
                "abort_reason": aborted.map(|e| e.to_string()),
            });
            let mut out = serde_json::to_string_pretty(&doc).expect("summary serializes");
            out.push('\n');
            Ok(out)
        }
    }
}

fn converge(config: &CliConfig) -> Result<String, RunError> {
    let spec = method(config);
    let p = problem(config);
    let over = shape_override(&p.name, spec.id);
    // one job per N so that a failure keeps the rows before it
    let start = std::time::Instant::now();
    let singles = config.exec.map(&config.steps, |&n| {
        run_convergence_on(spec, &p, &[n], over.clone(), Execution::Sequential)
    });
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    let mut failure = None;
    for single in singles {
        match single {
            Ok(r) => {
                let error = r.rows[0].error;
                let order = rows.last().map(|prev| (prev.error / error).log2());
                rows.push(ConvergenceRow { n: r.rows[0].n, error, order });
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    let report = ConvergenceReport {
        problem: p.name.clone(),
        method: spec.id.to_string(),
        rows,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    let mut out = emit_report(&report, config.format);
    match failure {
        None => Ok(out),
        Some(e) if is_domain(&e) => {
            match config.format {
                ReportFormat::Json => {
                    let mut v: serde_json::Value = serde_json::from_str(&out).expect("own json");
                    v["status"] = "aborted".into();
                    v["abort_reason"] = e.to_string().into();
                    out = serde_json::to_string_pretty(&v).expect("json") + "\n";
                }
                ReportFormat::Csv => {
                    let _ = writeln!(out, "# status: aborted; {e}");
                }
                ReportFormat::Markdown => {
                    let _ = writeln!(out, "\nstatus: aborted; {e}");
                }
            }
            Err(RunError::Aborted { error: e, output: out })
        }
        Some(e) => Err(RunError::Core(e)),
    }
}

fn stability(config: &CliConfig) -> Result<String, RunError> {
    let spec = method(config);
    let poly = derive_stability_poly(spec);
    let w = config.window;
    let grid = rasterize_region(
        &poly,
        (w.re_min, w.re_max),
        (w.im_min, w.im_max),
        config.grid_step,
        config.exec,
    );
    let interval = real_stability_interval(&poly);
    let order = exp_match_order(&poly);
    match config.format {
        ReportFormat::Csv => {
            let mut buf = Vec::new();
            grid.write_csv(&mut buf)?;
            Ok(String::from_utf8(buf).expect("csv is utf-8"))
        }
        ReportFormat::Markdown => {
            let mut out = String::new();
            let _ = writeln!(out, "Stability polynomial: {}", spec.id);
            out.push('\n');
            out.push_str("| k | coefficient of z^k |\n|---:|---:|\n");
            for (k, c) in poly.coeffs.iter().enumerate() {
                let _ = writeln!(out, "| {k} | {c:e} |");
            }
            let _ = writeln!(out, "\nreal interval length: {interval:.6}");
            let _ = writeln!(out, "order of agreement with exp: {order}");
            let _ = writeln!(out, "grid points inside: {} of {}", grid.count_inside(), grid.xs.len() * grid.ys.len());
            Ok(out)
        }
        ReportFormat::Json => {
            let doc = serde_json::json!({
                "schema": 1,
                "method": spec.id,
                "coefficients": poly.coeffs,
                "exp_match_order": order,
                "real_interval": interval,
                "window": [w.re_min, w.re_max, w.im_min, w.im_max],
                "step": config.grid_step,
                "inside": grid.count_inside(),
                "points": grid.xs.len() * grid.ys.len(),
            });
            Ok(serde_json::to_string_pretty(&doc).expect("json") + "\n")
        }
    }
}

fn shape(config: &CliConfig) -> Result<String, RunError> {
    let spec = method(config);
    let p = problem(config);
    let t = config.t.unwrap_or(p.t0);
    let u = config.u.clone().unwrap_or_else(|| p.u0.clone());
    let result = if spec.classical {
        ShapeResult::disabled(spec.stages, u.len())
    } else {
        let table = p.partials_at(t, &u).map_err(RunError::Core)?;
        let over = shape_override(&p.name, spec.id);
        shape_for(spec, &table, t, &u, over.as_ref()).map_err(RunError::Core)?
    };
    let status = serde_json::to_value(result.status).expect("status serializes");
    let status = status.as_str().expect("string status");
    let root = serde_json::to_value(result.diag.root_choice_used).expect("root serializes");
    let root = root.as_str().expect("string root");
    let disc = result.diag.discriminant.map(|d| format!("{d:e}")).unwrap_or_default();
    match config.format {
        ReportFormat::Csv => {
            let mut out = String::from("stage,component,eps_sq,status,denominator,discriminant,root\n");
            for (j, stage) in result.eps_sq.iter().enumerate() {
                for (i, e) in stage.iter().enumerate() {
                    let _ = writeln!(
                        out,
                        "{},{},{e:e},{status},{:e},{disc},{root}",
                        j + 2,
                        i + 1,
                        result.diag.denominator_magnitude
                    );
                }
            }
            Ok(out)
        }
        ReportFormat::Markdown => {
            let mut out = String::new();
            let _ = writeln!(out, "Shape of {} on {} at t = {t}, u = {}", spec.id, p.name, join(&u, ", "));
            out.push('\n');
            out.push_str("| stage | component | eps^2 |\n|---:|---:|---:|\n");
            for (j, stage) in result.eps_sq.iter().enumerate() {
                for (i, e) in stage.iter().enumerate() {
                    let _ = writeln!(out, "| {} | {} | {e:e} |", j + 2, i + 1);
                }
            }
            let _ = writeln!(out, "\nstatus: {status}, root: {root}");
            Ok(out)
        }
        ReportFormat::Json => {
            let doc = serde_json::json!({
                "schema": 1,
                "method": spec.id,
                "problem": p.name,
                "t": t,
                "u": u,
                "shape": result,
            });
            Ok(serde_json::to_string_pretty(&doc).expect("json") + "\n")
        }
    }
}

fn local_order(config: &CliConfig) -> Result<String, RunError> {
    let spec = method(config);
    let p = problem(config);
    let t = config.t.unwrap_or(p.t0);
    let u = p
        .exact(t)
        .ok_or_else(|| RunError::Core(Error::Unsupported(format!("{} has no exact solution", p.name))))?;
    let over = shape_override(&p.name, spec.id);
    let probe = local_order_probe_on(spec, &p, t, &u, &config.hs, over.as_ref()).map_err(RunError::Core)?;
    let orders: Vec<Option<f64>> = std::iter::once(None)
        .chain(probe.points.windows(2).map(|w| Some((w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln())))
        .collect();
    match config.format {
        ReportFormat::Csv => {
            let mut out = String::from("h,error,order\n");
            for ((h, e), o) in probe.points.iter().zip(&orders) {
                let _ = writeln!(out, "{h:e},{},{}", format_error(*e), harness::report::format_order(*o));
            }
            Ok(out)
        }
        ReportFormat::Markdown => {
            let mut out = String::new();
            let _ = writeln!(out, "Local error against step size: {} on {} at t = {t}", spec.id, p.name);
            out.push('\n');
            out.push_str("| h | error | order |\n|---:|---:|---:|\n");
            for ((h, e), o) in probe.points.iter().zip(&orders) {
                let _ = writeln!(out, "| {h:e} | {} | {} |", format_error(*e), harness::report::format_order(*o));
            }
            let _ = writeln!(out, "\nfitted slope: {:.4} ({} points)", probe.slope, probe.used);
            Ok(out)
        }
        ReportFormat::Json => {
            let doc = serde_json::json!({
                "schema": 1,
                "method": spec.id,
                "problem": p.name,
                "t": t,
                "points": probe.points,
                "slope": probe.slope,
                "used": probe.used,
            });
            Ok(serde_json::to_string_pretty(&doc).expect("json") + "\n")
        }
    }
}
