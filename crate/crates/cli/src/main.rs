use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use teachlens_core::config::AnalysisConfig;
use teachlens_core::pipeline::{analyze_session, validate_session, write_artifacts};
use teachlens_core::synth::{generate, Scenario, DEFAULT_SEED};
use teachlens_core::Error;
use teachlens_service::ServiceConfig;

#[derive(Parser)]
#[command(name = "teachlens", version, about = "Teacher behaviour analytics for recorded classroom sessions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a session directory and write summary.json, timeline.json and windows.csv.
    Analyze {
        session_dir: PathBuf,
        /// TOML or JSON config file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override one config field, e.g. `--set windows.fine_seconds=5`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Output directory (defaults to the session directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the per-frame tracking record as tracking.json.
        #[arg(long)]
        dump_tracking: bool,
    },
    /// Generate a synthetic session with a ground-truth sidecar.
    Synth {
        /// One of: stationary, crossing, exit_reentry, lecture_audio.
        scenario: String,
        out_dir: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Lint the manifest, zone polygons and input streams.
    Validate { session_dir: PathBuf },
    /// Serve analyzed sessions and the dashboard over HTTP.
    Serve {
        #[arg(long, env = "CI_DATA")]
        data: PathBuf,
        #[arg(long, env = "CI_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long = "static", env = "CI_STATIC")]
        static_dir: Option<PathBuf>,
    },
}

const EXIT_VIOLATIONS: u8 = 1;
const EXIT_MISSING_MANIFEST: u8 = 2;
const EXIT_USAGE: u8 = 2;
const EXIT_PARSE: u8 = 3;
const EXIT_PIPELINE: u8 = 4;

fn fail(code: u8, err: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(code)
}

/// Exit code for an error raised while loading inputs or running the analysis.
fn analysis_exit_code(err: &Error) -> u8 {
    match err {
        Error::ManifestMissing(_) => EXIT_MISSING_MANIFEST,
        Error::Io { .. }
        | Error::Parse { .. }
        | Error::UnsupportedAudio { .. }
        | Error::Audio(_)
        | Error::Manifest(_)
        | Error::Config(_)
        | Error::Json(_) => EXIT_PARSE,
        _ => EXIT_PIPELINE,
    }
}

fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<AnalysisConfig, Error> {
    let mut config = match path {
        Some(p) => AnalysisConfig::load(p)?,
        None => AnalysisConfig::default(),
    };
    for o in overrides {
        config.set(o)?;
    }
    config.validate()?;
    Ok(config)
}

fn run_analyze(session_dir: &Path, config: Option<&Path>, overrides: &[String], out: Option<&Path>, dump_tracking: bool) -> ExitCode {
    let config = match load_config(config, overrides) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_PARSE, e),
    };
    let artifacts = match analyze_session(session_dir, &config) {
        Ok(a) => a,
        Err(e) => return fail(analysis_exit_code(&e), e),
    };
    match write_artifacts(&artifacts, out.unwrap_or(session_dir), dump_tracking) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(EXIT_PIPELINE, e),
    }
}

fn run_synth(scenario: &str, out_dir: &Path, seed: u64) -> ExitCode {
    let Ok(scenario) = scenario.parse::<Scenario>() else {
        let known: Vec<&str> = Scenario::ALL.iter().map(|s| s.name()).collect();
        return fail(EXIT_USAGE, format!("unknown scenario '{scenario}' (expected one of: {})", known.join(", ")));
    };
    match generate(scenario, seed, out_dir) {
        Ok(truth) => {
            println!("{} session written to {} (seed {})", truth.scenario, out_dir.display(), truth.seed);
            ExitCode::SUCCESS
        }
        Err(e) => fail(EXIT_PIPELINE, e),
    }
}

fn run_validate(session_dir: &Path) -> ExitCode {
    let report = validate_session(session_dir);
    for w in &report.warnings {
        println!("warning: {}: {}", w.file, w.message);
    }
    for f in &report.findings {
        println!("{}: {}", f.file, f.message);
    }
    if report.is_clean() {
        println!("ok: {}", session_dir.display());
        ExitCode::SUCCESS
    } else {
        println!("{} problem(s) found", report.findings.len());
        ExitCode::from(EXIT_VIOLATIONS)
    }
}

fn run_serve(data: PathBuf, port: u16, static_dir: Option<PathBuf>) -> ExitCode {
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(r) => r,
        Err(e) => return fail(EXIT_PIPELINE, e),
    };
    eprintln!("serving {} on port {port}", data.display());
    match runtime.block_on(teachlens_service::serve(ServiceConfig { data_dir: data, static_dir }, port)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(EXIT_PIPELINE, e),
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Analyze { session_dir, config, overrides, out, dump_tracking } => {
            run_analyze(&session_dir, config.as_deref(), &overrides, out.as_deref(), dump_tracking)
        }
        Command::Synth { scenario, out_dir, seed } => run_synth(&scenario, &out_dir, seed),
        Command::Validate { session_dir } => run_validate(&session_dir),
        Command::Serve { data, port, static_dir } => run_serve(data, port, static_dir),
    }
}
