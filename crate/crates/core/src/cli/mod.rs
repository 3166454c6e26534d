//! Command-line front end: `analyze`, `verify`, `sweep` and `classify`.
//!
//! Exit codes: 0 success, 1 input or usage error, 2 violated hypothesis
//! (no Jordan block, degenerate numerator, tracking ambiguity, …),
//! 3 oracle disagreement above `--tol`.

mod report;
mod scenario;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use crate::flow::FlowError;
use crate::pipeline::{analyze, Mode, PipelineError};
use crate::spectral::detect_double_unitary;
use crate::verify::{compare, CompareOptions, Family, GridSpec, VerifyError};

pub use scenario::{load_scenario, parse_scenario, Scenario, ScenarioError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_HYPOTHESIS: i32 = 2;
pub const EXIT_TOLERANCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "krein",
    version,
    about = "Second-order asymptotics of a double Krein-indefinite multiplier"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form coefficients, Jordan chain and stability verdict.
    Analyze(CommonArgs),
    /// Run the eigenvalue-tracking oracle against the closed forms.
    Verify(CommonArgs),
    /// Tabulate the four eigenvalues over the grid as CSV.
    Sweep(CommonArgs),
    /// Print the stability verdict.
    Classify(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    scenario: PathBuf,
    /// Directory for CSV output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Largest accepted relative error in `verify`.
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    /// Grid override as `min,max,count,log|lin`.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<GridSpec>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    T,
    Eps,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::T => Mode::T,
            ModeArg::Eps => Mode::Eps,
        }
    }
}

fn parse_grid(text: &str) -> Result<GridSpec, String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let [min, max, count, spacing] = parts.as_slice() else {
        return Err("expected min,max,count,log|lin".into());
    };
    let num = |s: &str| s.parse::<f64>().map_err(|e| format!("`{s}`: {e}"));
    let log = match *spacing {
        "log" | "true" => true,
        "lin" | "linear" | "false" => false,
        other => return Err(format!("spacing must be log or lin, got `{other}`")),
    };
    let spec = GridSpec {
        min: num(min)?,
        max: num(max)?,
        count: count.parse().map_err(|e| format!("`{count}`: {e}"))?,
        log,
    };
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

/// Failure of a subcommand, already mapped to an exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, err: &dyn std::error::Error) -> Self {
        let mut message = err.to_string();
        let mut source = err.source();
        while let Some(s) = source {
            let text = s.to_string();
            if !message.contains(&text) {
                message.push_str(": ");
                message.push_str(&text);
            }
            source = s.source();
        }
        Self { code, message }
    }

    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

fn flow_code(e: &FlowError) -> i32 {
    match e {
        FlowError::NonSymplecticInit { .. } => EXIT_HYPOTHESIS,
        _ => EXIT_INPUT,
    }
}

fn pipeline_code(e: &PipelineError) -> i32 {
    match e {
        PipelineError::NonSymplectic { .. }
        | PipelineError::NoDoubleEigenvalue { .. }
        | PipelineError::Spectral(_)
        | PipelineError::Bifurcation(_) => EXIT_HYPOTHESIS,
        PipelineError::Flow(f) => flow_code(f),
        PipelineError::Usage(_) | PipelineError::Expr(_) => EXIT_INPUT,
    }
}

fn verify_code(e: &VerifyError) -> i32 {
    match e {
        VerifyError::Ambiguity { .. } | VerifyError::Escaped { .. } | VerifyError::Discontinuity { .. } => {
            EXIT_HYPOTHESIS
        }
        VerifyError::BadGrid(_) | VerifyError::IllConditioned(_) => EXIT_INPUT,
        VerifyError::Flow(f) => flow_code(f),
        VerifyError::Pipeline(p) => pipeline_code(p),
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure::new(pipeline_code(&e), &e)
    }
}

impl From<VerifyError> for Failure {
    fn from(e: VerifyError) -> Self {
        Failure::new(verify_code(&e), &e)
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        let code = match e {
            ScenarioError::Generator(_) => EXIT_HYPOTHESIS,
            _ => EXIT_INPUT,
        };
        Failure::new(code, &e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(EXIT_INPUT, &e)
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::new(EXIT_INPUT, &e)
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{rendered}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{rendered}");
                    EXIT_INPUT
                }
            };
        }
    };
    let result = match &cli.command {
        Command::Analyze(a) => cmd_analyze(a, stdout, stderr),
        Command::Verify(a) => cmd_verify(a, stdout, stderr),
        Command::Sweep(a) => cmd_sweep(a, stdout),
        Command::Classify(a) => cmd_classify(a, stdout),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn load(args: &CommonArgs) -> Result<Scenario, Failure> {
    let mut s = load_scenario(&args.scenario)?;
    if let Some(g) = args.grid {
        match args.mode.map(Mode::from) {
            Some(Mode::T) => s.t_grid = g,
            Some(Mode::Eps) => s.eps_grid = g,
            None => {
                s.t_grid = g;
                s.eps_grid = g;
            }
        }
    }
    Ok(s)
}

fn write_json(stdout: &mut dyn Write, value: &serde_json::Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::new(EXIT_INPUT, &e))?;
    writeln!(stdout, "{text}")?;
    Ok(())
}

fn cmd_analyze(args: &CommonArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Failure> {
    let s = load(args)?;
    let mode = s.problem.select_mode(args.mode.map(Mode::from))?;
    let a = analyze(&s.problem, mode)?;
    if let Err(e) = &a.verdict {
        return Err(Failure::new(EXIT_HYPOTHESIS, e));
    }
    if let Some(flow) = &a.flow {
        if !flow.conforming {
            writeln!(
                stderr,
                "warning: symplectic drift {:.3e} exceeds {:.1e}",
                flow.drift, s.problem.settings.drift
            )?;
        }
        if flow.asymmetry_warning {
            writeln!(
                stderr,
                "warning: perturbation Hamiltonian asymmetry {:.3e} before symmetrizing",
                flow.asymmetry
            )?;
        }
    }
    write_json(stdout, &report::analysis(&s.problem, &a))?;
    Ok(EXIT_OK)
}

fn cmd_verify(args: &CommonArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Failure> {
    if !(args.tol > 0.0) {
        return Err(Failure::usage(format!("--tol must be positive, got {}", args.tol)));
    }
    let s = load(args)?;
    let options = CompareOptions {
        t_grid: s.t_grid,
        eps_grid: s.eps_grid,
        mode: args.mode.map(Mode::from),
    };
    let r = compare(&s.problem, &options)?;
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
        for m in &r.modes {
            report::write_track_csv(&dir.join(format!("track_{}.csv", m.mode.label())), &m.track)?;
        }
    }
    let passed = r.max_relative_error() <= args.tol;
    write_json(stdout, &report::oracle(&r, args.tol))?;
    if passed {
        Ok(EXIT_OK)
    } else {
        writeln!(
            stderr,
            "verify: largest relative error {:.3e} exceeds --tol {:.1e}",
            r.max_relative_error(),
            args.tol
        )?;
        Ok(EXIT_TOLERANCE)
    }
}

fn cmd_sweep(args: &CommonArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let s = load(args)?;
    let p = &s.problem;
    let mode = match args.mode.map(Mode::from) {
        Some(m) => p.select_mode(Some(m))?,
        None => p.select_mode(None).unwrap_or(Mode::T),
    };
    let grid = match mode {
        Mode::T => s.t_grid,
        Mode::Eps => s.eps_grid,
    }
    .points()?;
    let family = Family::new(p, mode)?;
    let st = &p.settings;
    let center = detect_double_unitary(&family.base().to_complex(), st.tol_cluster, st.tol_circle)
        .unwrap_or(Complex64::new(0.0, 0.0));
    let rows = report::sweep_rows(&family, &grid, center)?;
    match &args.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(format!("sweep_{}.csv", mode.label()));
            report::write_sweep_csv(std::fs::File::create(&path)?, &rows)?;
        }
        None => report::write_sweep_csv(stdout, &rows)?,
    }
    Ok(EXIT_OK)
}

fn cmd_classify(args: &CommonArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let s = load(args)?;
    let mode = s.problem.select_mode(args.mode.map(Mode::from))?;
    let a = analyze(&s.problem, mode)?;
    match a.verdict {
        Ok(v) => {
            writeln!(stdout, "verdict: {}", v.stability.label())?;
            writeln!(stdout, "kappa: {:.16e}", v.kappa)?;
            writeln!(stdout, "mode: {}", mode.label())?;
            Ok(EXIT_OK)
        }
        Err(e) => {
            writeln!(stdout, "verdict: inconclusive")?;
            writeln!(stdout, "kappa: {:.16e}", a.coeffs.kappa)?;
            Err(Failure::new(EXIT_HYPOTHESIS, &e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_argument() {
        let g = parse_grid("1e-6, 1e-2, 8, lin").unwrap();
        assert_eq!(
            g,
            GridSpec {
                min: 1e-6,
                max: 1e-2,
                count: 8,
                log: false
            }
        );
        assert!(parse_grid("1e-6,1e-2,8").is_err());
        assert!(parse_grid("1e-2,1e-6,8,log").is_err());
        assert!(parse_grid("1e-6,1e-2,8,cubic").is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["krein"], &mut out, &mut err), EXIT_INPUT);
        assert_eq!(run(["krein", "frobnicate", "x.json"], &mut out, &mut err), EXIT_INPUT);
        assert_eq!(
            run(["krein", "analyze", "/nonexistent/x.json"], &mut out, &mut err),
            EXIT_INPUT
        );
        assert_eq!(run(["krein", "--help"], &mut out, &mut err), EXIT_OK);
    }
}
