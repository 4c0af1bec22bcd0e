//! The `visbench` command line.
//!
//! Exit status is 0 on success, 1 for usage errors and 2 for runtime
//! failures. Failures print one JSON line on stderr:
//! `{"error":{"code":"...","message":"..."}}`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use visbench::calibration::{
    fit_luminance_curve, parse_luminance_samples, CalibrationProfile, DisplayGeometry, GrayscaleScale,
    DEFAULT_FIT_DEGREE,
};
use visbench::observer::ObserverModel;
use visbench::session::{read_trials_csv, write_trials_csv, FileStore, SessionDocument, SystemClock, TrialLog};
use visbench::simulation::{simulate, SimulationConfig};
use visbench::stats::analysis::{read_results_csv, write_results_csv};
use visbench::stats::{analyze_benchmark, AnalysisConfig, BenchmarkReport, ResultRow};

use crate::api::{self, AppState, ServiceConfig};

pub const DATA_DIR_ENV: &str = "VISBENCH_DATA_DIR";

#[derive(Debug, Parser)]
#[command(name = "visbench", version, about = "Vision benchmark sessions, simulation and analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP session service.
    Serve(ServeArgs),
    /// Run seeded sessions with simulated observers and write result tables.
    Simulate(SimulateArgs),
    /// Fit a luminance curve to meter readings and write a calibration profile.
    Calibrate(CalibrateArgs),
    /// Run the statistical analysis on a results table.
    Analyze(AnalyzeArgs),
    /// Convert session data between the structured and tabular formats.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: IpAddr,
    #[arg(long, env = DATA_DIR_ENV, default_value = "visbench-data")]
    pub data_dir: PathBuf,
    /// Extra calibration profile (JSON); may be repeated.
    #[arg(long)]
    pub calibration: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Observer per device, e.g. `step:0.3` or `logistic:0.2:15:guess=0.25`.
    /// Comma-separated or repeated. Without it the four-device benchmark runs.
    #[arg(long, value_delimiter = ',', conflicts_with = "input")]
    pub observers: Vec<ObserverModel>,
    /// Number of participants (one session each).
    #[arg(long)]
    pub sessions: Option<u32>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Simulation config (JSON) instead of the built-in benchmark.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    /// Output directory for `results` and `trials` tables.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Two-column readings: grayscale (0-1 or 0-255) and luminance in cd/m².
    #[arg(long)]
    pub input: PathBuf,
    /// Profile path; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Base profile supplying the display geometry (reference display otherwise).
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_FIT_DEGREE)]
    pub degree: usize,
    #[arg(long, default_value = "custom")]
    pub id: String,
    #[arg(long)]
    pub viewing_distance_mm: Option<f64>,
    /// Smallest logMAR actually resolvable on the device, if measured.
    #[arg(long, allow_hyphen_values = true)]
    pub min_logmar: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Results table (CSV, or JSON array of rows).
    #[arg(long)]
    pub input: PathBuf,
    /// Directory for report.json, plots.json and report.md; the Markdown
    /// report goes to stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Analysis settings (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Format of the summary printed to stdout.
    #[arg(long, value_enum, default_value_t = ReportFormat::Md)]
    pub format: ReportFormat,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Trial table (.csv), trial log or session document (.json).
    #[arg(long, required_unless_present = "session")]
    pub input: Option<PathBuf>,
    /// Export a stored session by id instead of a file.
    #[arg(long, conflicts_with = "input")]
    pub session: Option<String>,
    #[arg(long, env = DATA_DIR_ENV, default_value = "visbench-data")]
    pub data_dir: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Output format; inferred from the output extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Md,
    Json,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] visbench::Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            _ => 2,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Core(e) => e.code(),
            CliError::Io { .. } => "io",
        }
    }
}

fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

fn report_error(code: &str, message: &str) {
    let line = json!({ "error": { "code": code, "message": message } });
    eprintln!("{line}");
}

/// Parses `args` and runs the command.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let message = e
                .to_string()
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with("Usage:") && !l.starts_with("For more information"))
                .collect::<Vec<_>>()
                .join(" ");
            report_error("usage", message.strip_prefix("error: ").unwrap_or(&message));
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(e.code(), &e.to_string());
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Serve(a) => serve(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Analyze(a) => analyze(a),
        Command::Export(a) => export(a),
    }
}

fn serve(args: ServeArgs) -> Result<(), CliError> {
    let calibrations = args
        .calibration
        .iter()
        .map(|p| CalibrationProfile::load(p))
        .collect::<visbench::Result<Vec<_>>>()?;
    let state = AppState::open(ServiceConfig {
        data_dir: args.data_dir,
        calibrations,
        clock: Arc::new(SystemClock),
    })?;
    let runtime = tokio::runtime::Runtime::new().map_err(io("starting runtime"))?;
    runtime
        .block_on(api::serve(state, SocketAddr::new(args.host, args.port)))
        .map_err(io(format!("serving on port {}", args.port)))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(io(format!("reading {}", path.display())))?;
    Ok(serde_json::from_str(&text).map_err(visbench::Error::from)?)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(io(format!("writing {}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path).map_err(io(format!("creating {}", path.display())))?))
}

fn pretty<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

fn run_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let mut config = if let Some(path) = &args.input {
        read_json::<SimulationConfig>(path)?
    } else if !args.observers.is_empty() {
        SimulationConfig::from_observers(&args.observers, args.sessions.unwrap_or(1), args.seed)
    } else {
        SimulationConfig::default_benchmark(args.seed)
    };
    if let Some(n) = args.sessions {
        config.participants = n;
    }
    if args.input.is_none() {
        config.seed = args.seed;
    }
    if config.participants == 0 {
        return Err(CliError::Usage("--sessions must be at least 1".into()));
    }
    let calibration = match &args.calibration {
        Some(p) => CalibrationProfile::load(p)?,
        None => CalibrationProfile::reference(),
    };
    let out = simulate(&config, &calibration)?;

    fs::create_dir_all(&args.output).map_err(io(format!("creating {}", args.output.display())))?;
    let trials = out.trials();
    let (results_path, trials_path) = match args.format {
        Format::Json => {
            let results_path = args.output.join("results.json");
            let trials_path = args.output.join("trials.json");
            write_file(&results_path, &pretty(&out.results))?;
            write_file(&trials_path, &pretty(&TrialLog::new(trials.clone())))?;
            (results_path, trials_path)
        }
        Format::Csv => {
            let results_path = args.output.join("results.csv");
            let trials_path = args.output.join("trials.csv");
            write_results_csv(create(&results_path)?, &out.results)?;
            write_trials_csv(create(&trials_path)?, &trials)?;
            (results_path, trials_path)
        }
    };
    write_file(&args.output.join("simulation.json"), &pretty(&config))?;
    println!(
        "{}",
        json!({
            "sessions": out.sessions.len(),
            "trials": trials.len(),
            "result_rows": out.results.len(),
            "results_path": results_path,
            "trials_path": trials_path,
        })
    );
    Ok(())
}

fn calibrate(args: CalibrateArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.input).map_err(io(format!("reading {}", args.input.display())))?;
    let samples = parse_luminance_samples(&text, GrayscaleScale::Auto)?;
    let curve = fit_luminance_curve(&samples, args.degree)?;
    let base = match &args.calibration {
        Some(p) => CalibrationProfile::load(p)?,
        None => CalibrationProfile::reference(),
    };
    let mut geometry = base.geometry;
    if let Some(d) = args.viewing_distance_mm {
        geometry = DisplayGeometry::new(geometry.width_px, geometry.height_px, geometry.pixel_pitch_mm, d)?;
    }
    let mut profile = CalibrationProfile::new(args.id, geometry, curve, base.min_letter_pixels)?;
    if let Some(m) = args.min_logmar {
        profile = profile.with_measured_min_logmar(m);
    }
    profile.validate()?;
    match &args.output {
        Some(path) => {
            profile.save(path)?;
            println!(
                "{}",
                json!({
                    "profile": path,
                    "coefficients": profile.curve.coefficients,
                    "residual_rms_cd_m2": profile.curve.residual_rms_cd_m2,
                    "negative_luminance_warning": profile.curve.negative_luminance_warning,
                })
            );
        }
        None => println!("{}", profile.to_json()?),
    }
    Ok(())
}

fn read_rows(path: &Path) -> Result<Vec<ResultRow>, CliError> {
    if path.extension().is_some_and(|e| e == "json") {
        return read_json(path);
    }
    let file = File::open(path).map_err(io(format!("opening {}", path.display())))?;
    Ok(read_results_csv(BufReader::new(file))?)
}

fn analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let rows = read_rows(&args.input)?;
    let config = match &args.config {
        Some(p) => read_json::<AnalysisConfig>(p)?,
        None => AnalysisConfig::default(),
    };
    let (report, plots) = analyze_benchmark(&rows, &config)?;
    let markdown = render_report(&report);
    if let Some(dir) = &args.output {
        fs::create_dir_all(dir).map_err(io(format!("creating {}", dir.display())))?;
        write_file(&dir.join("report.json"), &pretty(&report))?;
        write_file(&dir.join("plots.json"), &pretty(&plots))?;
        write_file(&dir.join("report.md"), markdown.as_bytes())?;
    }
    match args.format {
        ReportFormat::Json => println!("{}", serde_json::to_string(&report).expect("serializable")),
        ReportFormat::Md => print!("{markdown}"),
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.digits$}"))
}

/// Markdown tables: Friedman per light and metric, Bonferroni-adjusted
/// Wilcoxon pairs, and Mann-Whitney light-level effects.
pub fn render_report(report: &BenchmarkReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Benchmark analysis\n");
    let _ = writeln!(
        out,
        "{} conditions, {} light levels, metrics {}. Bonferroni family {}.\n",
        report.conditions.len(),
        report.light_levels.len(),
        report.metrics.join(", "),
        report.bonferroni_family
    );
    let _ = writeln!(out, "## Friedman tests\n");
    let _ = writeln!(out, "| light | metric | n | chi2 | df | p | W |\n|---|---|---|---|---|---|---|");
    for r in &report.friedman {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} |",
            r.light_level,
            r.metric,
            r.subjects,
            fmt_opt(r.chi_square, 2),
            fmt_opt(r.df, 0),
            fmt_opt(r.p_value, 4),
            fmt_opt(r.kendall_w, 3)
        );
    }
    let _ = writeln!(out, "\n## Pairwise Wilcoxon signed-rank tests\n");
    let _ = writeln!(
        out,
        "| light | metric | pair | n | W | z | p | p adj | |\n|---|---|---|---|---|---|---|---|---|"
    );
    for r in &report.pairwise {
        let _ = writeln!(
            out,
            "| {} | {} | {} vs {} | {} | {} | {} | {} | {} | {} |",
            r.light_level,
            r.metric,
            r.condition_a,
            r.condition_b,
            r.pairs,
            fmt_opt(r.statistic, 1),
            fmt_opt(r.z, 3),
            fmt_opt(r.p_raw, 4),
            fmt_opt(r.p_adjusted, 4),
            r.stars
        );
    }
    let _ = writeln!(out, "\n## Light-level effects (Mann-Whitney U)\n");
    let _ = writeln!(out, "| metric | condition | lights | U | p | |\n|---|---|---|---|---|---|");
    for r in &report.light_effects {
        let _ = writeln!(
            out,
            "| {} | {} | {} vs {} | {} | {} | {} |",
            r.metric,
            r.condition,
            r.light_a,
            r.light_b,
            fmt_opt(r.u, 1),
            fmt_opt(r.p_value, 4),
            r.stars
        );
    }
    if !report.warnings.is_empty() {
        let _ = writeln!(out, "\n## Warnings\n");
        for w in &report.warnings {
            let _ = writeln!(out, "- {w}");
        }
    }
    out
}

fn export(args: ExportArgs) -> Result<(), CliError> {
    let format = match args.format {
        Some(f) => f,
        None => match args.output.extension().and_then(|e| e.to_str()) {
            Some("csv") => Format::Csv,
            Some("json") => Format::Json,
            _ => return Err(CliError::Usage("cannot infer --format from the output extension".into())),
        },
    };
    // Either a full session document or a bare trial list.
    let (document, trials) = if let Some(id) = &args.session {
        let store = FileStore::open(args.data_dir.join("sessions"))?;
        if !store.exists(id) {
            return Err(CliError::Usage(format!("no stored session {id:?} in {}", args.data_dir.display())));
        }
        let doc = SessionDocument::from_session(&store.load(id)?);
        let trials = doc.trials.clone();
        (Some(doc), trials)
    } else {
        let input = args.input.as_deref().expect("clap enforces --input or --session");
        if input.extension().is_some_and(|e| e == "csv") {
            let file = File::open(input).map_err(io(format!("opening {}", input.display())))?;
            (None, read_trials_csv(BufReader::new(file))?)
        } else {
            let text = fs::read_to_string(input).map_err(io(format!("reading {}", input.display())))?;
            let value: serde_json::Value = serde_json::from_str(&text).map_err(visbench::Error::from)?;
            if value.get("events").is_some() {
                let doc = SessionDocument::from_json(&text)?;
                let trials = doc.trials.clone();
                (Some(doc), trials)
            } else {
                let log: TrialLog = serde_json::from_value(value).map_err(visbench::Error::from)?;
                (None, log.trials)
            }
        }
    };
    match format {
        Format::Csv => {
            let mut w = create(&args.output)?;
            write_trials_csv(&mut w, &trials)?;
            w.flush().map_err(io(format!("writing {}", args.output.display())))?;
        }
        Format::Json => match document {
            Some(doc) => write_file(&args.output, doc.to_json()?.as_bytes())?,
            None => write_file(&args.output, &pretty(&TrialLog::new(trials.clone())))?,
        },
    }
    println!("{}", json!({ "output": args.output, "trials": trials.len() }));
    Ok(())
}
