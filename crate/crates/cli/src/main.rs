//! `diqkd`: key rates, threshold efficiencies and rate curves for
//! device-independent QKD with photonic sources.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod output;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use diqkd_core::verify::{run_suite, VerifyConfig};
use diqkd_core::{
    optimize_rate, protocol_curves, threshold_efficiency, ProtocolSpec, ProtocolVariant,
};

use config::{Command, ConfigError, RawConfig, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "diqkd",
    version,
    about = "DIQKD key rates for SPDC and qubit sources"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Optimized key rate at one efficiency.
    Rate(Flags),
    /// Smallest efficiency with a positive optimized rate.
    Threshold(Flags),
    /// Optimized rates on an efficiency grid, as CSV.
    Curve(Flags),
    /// Run the numerical property suites.
    Verify(Flags),
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// pironio, ma, noisy, a comma-separated list, or all
    #[arg(long)]
    protocol: Option<String>,
    /// spdc or qubit
    #[arg(long)]
    source: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    eta_min: Option<String>,
    #[arg(long)]
    eta_max: Option<String>,
    #[arg(long)]
    eta_steps: Option<String>,
    /// Noise probability, or `opt` to optimize it
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    n_min: Option<String>,
    #[arg(long)]
    n_max: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    restarts: Option<String>,
    #[arg(long)]
    max_evals: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    eta_tol: Option<String>,
    #[arg(long)]
    positive_rate: Option<String>,
    #[arg(long)]
    dark_count: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; falls back to DIQKD_THREADS, then all cores
    #[arg(long)]
    threads: Option<String>,
    /// bound-tightness, soundness, monotonicity, fock-oracle, symmetrization or all
    #[arg(long)]
    suite: Option<String>,
    #[arg(long)]
    verbose: bool,
    /// `key = value` file; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Flags {
    fn merge_into(&self, raw: &mut RawConfig) {
        let pairs = [
            ("protocol", &self.protocol),
            ("source", &self.source),
            ("eta", &self.eta),
            ("eta_min", &self.eta_min),
            ("eta_max", &self.eta_max),
            ("eta_steps", &self.eta_steps),
            ("p", &self.p),
            ("n_min", &self.n_min),
            ("n_max", &self.n_max),
            ("seed", &self.seed),
            ("restarts", &self.restarts),
            ("max_evals", &self.max_evals),
            ("tol", &self.tol),
            ("eta_tol", &self.eta_tol),
            ("positive_rate", &self.positive_rate),
            ("dark_count", &self.dark_count),
            ("threads", &self.threads),
            ("suite", &self.suite),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                raw.set(k, v);
            }
        }
        if let Some(out) = &self.out {
            raw.set("out", out.display());
        }
        if self.verbose {
            raw.set("verbose", true);
        }
    }
}

enum Failure {
    Config(String),
    Runtime(String),
    Verification,
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<diqkd_core::Error> for Failure {
    fn from(e: diqkd_core::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("diqkd: configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("diqkd: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Verification) => ExitCode::from(3),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (cmd, flags) = match &cli.command {
        Cmd::Rate(f) => (Command::Rate, f),
        Cmd::Threshold(f) => (Command::Threshold, f),
        Cmd::Curve(f) => (Command::Curve, f),
        Cmd::Verify(f) => (Command::Verify, f),
    };
    let mut raw = match &flags.config {
        Some(path) => RawConfig::load(path)?,
        None => RawConfig::default(),
    };
    if raw.get("threads").is_none() {
        if let Ok(t) = std::env::var("DIQKD_THREADS") {
            raw.set("threads", t);
        }
    }
    flags.merge_into(&mut raw);
    let cfg = RunConfig::from_raw(&raw, cmd)?;
    if cfg.verbose {
        eprintln!("{}", cfg.describe());
    }
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Runtime(format!("thread pool: {e}")))?;
    }

    let text = match cmd {
        Command::Rate => cmd_rate(&cfg)?,
        Command::Threshold => cmd_threshold(&cfg)?,
        Command::Curve => cmd_curve(&cfg)?,
        Command::Verify => return cmd_verify(&cfg),
    };
    emit(&cfg, &text)
}

fn emit(cfg: &RunConfig, text: &str) -> Result<(), Failure> {
    match &cfg.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn spec_for(cfg: &RunConfig, variant: ProtocolVariant) -> ProtocolSpec {
    let mut spec = ProtocolSpec::new(variant, cfg.source);
    if variant == ProtocolVariant::NoisyPreprocessing {
        spec = spec.with_noise(cfg.noise);
    }
    spec.dark_count = cfg.dark_count;
    spec
}

fn cmd_rate(cfg: &RunConfig) -> Result<String, Failure> {
    let variant = cfg.protocols[0];
    let eta = cfg.eta.expect("validated");
    let r = optimize_rate(&spec_for(cfg, variant), eta, &cfg.optimizer)?;
    Ok(output::table(&[(variant, r)]))
}

fn cmd_threshold(cfg: &RunConfig) -> Result<String, Failure> {
    let variant = cfg.protocols[0];
    let t = threshold_efficiency(&spec_for(cfg, variant), &cfg.optimizer)?;
    if cfg.verbose {
        for (eta, rate) in &t.trace {
            eprintln!(
                "probe eta={} rate={}",
                output::sig(*eta, 12),
                output::sig(*rate, 12)
            );
        }
    }
    let mut s = String::new();
    let _ = writeln!(s, "protocol={}", variant.name());
    let _ = writeln!(s, "source={}", cfg.source.name());
    let _ = writeln!(s, "threshold={}", output::sig(t.eta, 12));
    let _ = writeln!(s, "lower={}", output::sig(t.lower, 12));
    s.push_str(&output::table(&[(variant, t.witness)]));
    Ok(s)
}

fn cmd_curve(cfg: &RunConfig) -> Result<String, Failure> {
    let curves = protocol_curves(&cfg.protocols, cfg.source, &cfg.eta_grid, &cfg.optimizer)?;
    let rows: Vec<_> = curves
        .into_iter()
        .flat_map(|(v, c)| c.into_iter().map(move |r| (v, r)))
        .collect();
    Ok(output::table(&rows))
}

fn cmd_verify(cfg: &RunConfig) -> Result<(), Failure> {
    let vc = VerifyConfig {
        seed: cfg.optimizer.seed,
        ..VerifyConfig::default()
    };
    let mut report = String::new();
    let mut all_passed = true;
    for &suite in &cfg.suites {
        for check in run_suite(suite, &vc)? {
            all_passed &= check.passed;
            let _ = writeln!(report, "{check}");
        }
    }
    emit(cfg, &report)?;
    if all_passed {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}
