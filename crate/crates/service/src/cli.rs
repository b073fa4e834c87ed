use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand};
use woz_core::analysis::analyze_records;
use woz_core::sim::{simulate, SimulationConfig};
use woz_core::{import_csv, ErrorRepository, ErrorWeights, LogAnalysis, SessionMode};

use crate::config::{parse_weights, ServiceConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "woz",
    version,
    about = "Wizard-of-Oz session service for simulating a classifier and its errors"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP API, console push channel and prototype listener.
    Serve {
        #[arg(long = "http", env = "WOZ_HTTP", default_value = "127.0.0.1:8080")]
        http: SocketAddr,
        #[arg(long = "proto", env = "WOZ_PROTO", default_value = "127.0.0.1:7878")]
        proto: SocketAddr,
        #[arg(long = "data", env = "WOZ_DATA", default_value = "woz-data")]
        data: PathBuf,
        #[arg(long, env = "WOZ_DEFAULT_MODE", default_value = "manual")]
        default_mode: SessionMode,
        /// Error weights `segmentation,similarity,wild,no_recognition`.
        #[arg(long, env = "WOZ_DEFAULT_WEIGHTS", default_value = "1,1,1,1", value_parser = parse_weights)]
        default_weights: ErrorWeights,
        /// Per-frame write timeout for prototype clients, in milliseconds.
        #[arg(long, env = "WOZ_WRITE_TIMEOUT_MS", default_value_t = 500)]
        write_timeout_ms: u64,
    },
    /// Check an error repository CSV.
    Validate { repo: PathBuf },
    /// Summarize a session log CSV.
    Analyze {
        log: PathBuf,
        /// Print the full analysis as JSON.
        #[arg(long)]
        json: bool,
        /// Repository CSV whose row order fixes the distribution table order.
        #[arg(long)]
        repo: Option<PathBuf>,
    },
    /// Headless auto-mode session; writes the log CSV.
    Simulate {
        #[arg(long)]
        repo: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        trials: u32,
        #[arg(long, value_parser = parse_target)]
        target: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_parser = parse_weights)]
        weights: Option<ErrorWeights>,
        /// Write the log here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Hide correctness from prototype frames.
        #[arg(long)]
        hide_correctness: bool,
    },
}

fn parse_target(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !(0.0..=100.0).contains(&v) {
        return Err(format!("target {v} is outside [0, 100]"));
    }
    Ok(v)
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Serve {
            http,
            proto,
            data,
            default_mode,
            default_weights,
            write_timeout_ms,
        } => {
            let mut config = ServiceConfig::new(http, proto, data);
            config.default_mode = default_mode;
            config.default_weights = default_weights;
            config.write_timeout = Duration::from_millis(write_timeout_ms);
            serve(config)
        }
        Command::Validate { repo } => validate(&repo),
        Command::Analyze { log, json, repo } => analyze(&log, json, repo.as_deref()),
        Command::Simulate {
            repo,
            trials,
            target,
            seed,
            weights,
            out,
            hide_correctness,
        } => {
            let mut config = SimulationConfig::new(trials, target, seed);
            if let Some(w) = weights {
                config.weights = w;
            }
            config.expose_correctness_to_prototype = !hide_correctness;
            run_simulation(&repo, &config, out.as_deref())
        }
    }
}

fn serve(config: ServiceConfig) -> i32 {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .init();
    if let Err(e) = config.validate() {
        eprintln!("error: {e:#}");
        return EXIT_INVALID;
    }
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: cannot start runtime: {e}");
            return EXIT_INVALID;
        }
    };
    runtime.block_on(async move {
        let running = match crate::start(config).await {
            Ok(r) => r,
            Err(e) => {
                eprintln!("error: {e:#}");
                return EXIT_INVALID;
            }
        };
        tokio::select! {
            _ = tokio::signal::ctrl_c() => tracing::info!("shutting down"),
            _ = running.wait() => {}
        }
        EXIT_OK
    })
}

fn read_file(path: &Path) -> Result<Vec<u8>, i32> {
    std::fs::read(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_USAGE
    })
}

fn load_repository(path: &Path) -> Result<ErrorRepository, i32> {
    let bytes = read_file(path)?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("repository");
    ErrorRepository::parse(name, &bytes).map_err(|e| {
        eprintln!("invalid repository {}: {e}", path.display());
        EXIT_INVALID
    })
}

fn validate(path: &Path) -> i32 {
    match load_repository(path) {
        Ok(repo) => {
            println!(
                "{}: {} entries ({})",
                path.display(),
                repo.entries().len(),
                repo.ground_truths().join(", ")
            );
            EXIT_OK
        }
        Err(code) => code,
    }
}

fn analyze(path: &Path, json: bool, repo: Option<&Path>) -> i32 {
    let bytes = match read_file(path) {
        Ok(b) => b,
        Err(code) => return code,
    };
    let repo = match repo.map(load_repository).transpose() {
        Ok(r) => r,
        Err(code) => return code,
    };
    let imported = match import_csv(&bytes) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("invalid log {}: {e}", path.display());
            return EXIT_INVALID;
        }
    };
    if !imported.report.out_of_order_seq.is_empty() {
        eprintln!(
            "warning: {} record(s) out of seq order: {:?}",
            imported.report.out_of_order_seq.len(),
            imported.report.out_of_order_seq
        );
    }
    let labels = repo.as_ref().map(|r| r.ground_truths()).unwrap_or_default();
    let analysis = match analyze_records::<f64>(&imported.records, &labels) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("invalid log {}: {e}", path.display());
            return EXIT_INVALID;
        }
    };
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&analysis).expect("analysis serializes")
        );
    } else {
        print!("{}", render_text(&analysis));
    }
    EXIT_OK
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v}"))
}

/// Plain-text report printed by `analyze`.
pub fn render_text(a: &LogAnalysis) -> String {
    let mut out = String::new();
    out.push_str("sessions\n");
    for s in &a.sessions {
        let s = &s.summary;
        let _ = writeln!(
            out,
            "  {} mode={} target={} trials={} correct={} accuracy={:.2} deviation={:.2}",
            s.session_id, s.mode, s.target_accuracy, s.n_trials, s.n_correct, s.final_accuracy, s.deviation
        );
    }
    if let Some(acc) = &a.accuracy {
        out.push_str("accuracy by target\n");
        for g in &acc.groups {
            let _ = writeln!(
                out,
                "  target={} sessions={} mean={:.2} sd={}",
                g.target,
                g.n_sessions,
                g.mean,
                g.sd.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}"))
            );
        }
    }
    out.push_str("distribution\n");
    for line in String::from_utf8_lossy(&a.distribution.to_csv()).lines() {
        let _ = writeln!(out, "  {line}");
    }
    out.push_str("regression (confidence ~ correct)\n");
    match (&a.regression, &a.regression_error) {
        (Some(r), _) => {
            let _ = writeln!(
                out,
                "  n={} slope={} intercept={} r2={} adj_r2={}\n  F({},{})={} t={} p={} beta={}",
                r.n,
                r.slope,
                r.intercept,
                r.r_squared,
                r.adjusted_r_squared,
                r.df.0,
                r.df.1,
                opt(r.f_stat),
                opt(r.t_stat),
                opt(r.p_value),
                opt(r.standardized_beta)
            );
        }
        (None, Some(e)) => {
            let _ = writeln!(out, "  unavailable: {e}");
        }
        (None, None) => {}
    }
    out
}

fn run_simulation(repo_path: &Path, config: &SimulationConfig, out: Option<&Path>) -> i32 {
    let repo = match load_repository(repo_path) {
        Ok(r) => Arc::new(r),
        Err(code) => return code,
    };
    let outcome = match simulate(repo, config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    let written = match out {
        Some(path) => std::fs::write(path, &outcome.log_csv),
        None => std::io::stdout().lock().write_all(&outcome.log_csv),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write log: {e}");
        return EXIT_USAGE;
    }
    let s = &outcome.summary;
    eprintln!(
        "{}: {} trials, {} correct, final accuracy {:.2} (target {})",
        s.session_id, s.n_trials, s.n_correct, s.final_accuracy, s.target_accuracy
    );
    EXIT_OK
}
