//! Run configuration: a flat `key = value` file overridden by command-line
//! flags, validated before any computation starts.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use diqkd_core::optim::NelderMeadOptions;
use diqkd_core::rate::POSITIVE_RATE;
use diqkd_core::verify::Suite;
use diqkd_core::{NoiseChoice, NoiseParam, OptimizerOptions, ProtocolVariant, SourceKind};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Every recognized key. Flags use the same names with `-` in place of `_`.
pub const KEYS: &[&str] = &[
    "protocol",
    "source",
    "eta",
    "eta_min",
    "eta_max",
    "eta_steps",
    "p",
    "n_min",
    "n_max",
    "seed",
    "restarts",
    "max_evals",
    "tol",
    "eta_tol",
    "positive_rate",
    "dark_count",
    "out",
    "threads",
    "suite",
    "verbose",
];

/// Raw settings gathered from the file and the flags, before validation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

impl RawConfig {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(format!("line {}: expected `key = value`", i + 1)))?;
            let key = normalize_key(k.trim());
            if !KEYS.contains(&key.as_str()) {
                return Err(err(format!("line {}: unknown key `{}`", i + 1, k.trim())));
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| err(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.values.insert(normalize_key(key), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| err(format!("invalid {key} `{v}`: {e}")))
            })
            .transpose()
    }
}

fn normalize_key(k: &str) -> String {
    k.replace('-', "_")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Rate,
    Threshold,
    Curve,
    Verify,
}

/// Validated settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub protocols: Vec<ProtocolVariant>,
    pub source: SourceKind,
    pub eta: Option<f64>,
    pub eta_grid: Vec<f64>,
    pub noise: NoiseChoice,
    pub dark_count: f64,
    pub optimizer: OptimizerOptions,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub suites: Vec<Suite>,
    pub verbose: bool,
}

fn check_unit(name: &str, v: f64) -> Result<f64, ConfigError> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(err(format!("{name} = {v} is outside [0, 1]")))
    }
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig, cmd: Command) -> Result<Self, ConfigError> {
        let protocols = match raw.get("protocol") {
            None if cmd == Command::Curve => ProtocolVariant::ALL.to_vec(),
            None => vec![ProtocolVariant::NoisyPreprocessing],
            Some("all") => ProtocolVariant::ALL.to_vec(),
            Some(list) => {
                let mut out = Vec::new();
                for name in list.split(',') {
                    let v: ProtocolVariant = name.trim().parse().map_err(err)?;
                    if !out.contains(&v) {
                        out.push(v);
                    }
                }
                out
            }
        };
        if protocols.len() > 1 && matches!(cmd, Command::Rate | Command::Threshold) {
            return Err(err("rate and threshold take a single protocol"));
        }
        let source: SourceKind = raw.get("source").unwrap_or("spdc").parse().map_err(err)?;

        let eta = raw
            .parsed::<f64>("eta")?
            .map(|v| check_unit("eta", v))
            .transpose()?;
        if cmd == Command::Rate && eta.is_none() {
            return Err(err("rate needs --eta"));
        }
        let eta_min = check_unit("eta_min", raw.parsed("eta_min")?.unwrap_or(0.8))?;
        let eta_max = check_unit("eta_max", raw.parsed("eta_max")?.unwrap_or(1.0))?;
        let eta_steps: usize = raw.parsed("eta_steps")?.unwrap_or(21);
        if eta_min > eta_max {
            return Err(err(format!(
                "eta_min = {eta_min} exceeds eta_max = {eta_max}"
            )));
        }
        if eta_steps == 0 {
            return Err(err("eta_steps must be at least 1"));
        }
        let eta_grid = if eta_steps == 1 {
            vec![eta_min]
        } else {
            (0..eta_steps)
                .map(|k| eta_min + (eta_max - eta_min) * k as f64 / (eta_steps - 1) as f64)
                .collect()
        };

        let noise = match raw.get("p") {
            None | Some("opt") => NoiseChoice::Optimize,
            Some(v) => {
                let p: f64 = v
                    .parse()
                    .map_err(|e| err(format!("invalid p `{v}`: {e}")))?;
                if !(0.0..0.5).contains(&p) {
                    return Err(err(format!("p = {p} is outside [0, 0.5)")));
                }
                NoiseChoice::Fixed(NoiseParam::new(p).map_err(|e| err(e.to_string()))?)
            }
        };
        let dark_count: f64 = raw.parsed("dark_count")?.unwrap_or(0.0);
        if !(0.0..1.0).contains(&dark_count) {
            return Err(err(format!("dark_count = {dark_count} is outside [0, 1)")));
        }

        let defaults = OptimizerOptions::default();
        let optimizer = OptimizerOptions {
            seed: raw.parsed("seed")?.unwrap_or(defaults.seed),
            restarts: raw.parsed("restarts")?.unwrap_or(defaults.restarts),
            n_min: raw.parsed("n_min")?.unwrap_or(defaults.n_min),
            n_max: raw.parsed("n_max")?.unwrap_or(defaults.n_max),
            nelder_mead: NelderMeadOptions {
                max_evals: raw
                    .parsed("max_evals")?
                    .unwrap_or(defaults.nelder_mead.max_evals),
                tol: raw.parsed("tol")?.unwrap_or(defaults.nelder_mead.tol),
            },
            eta_tol: raw.parsed("eta_tol")?.unwrap_or(defaults.eta_tol),
            positive_rate: raw.parsed("positive_rate")?.unwrap_or(POSITIVE_RATE),
            warm_starts: Vec::new(),
        };
        if optimizer.restarts == 0 {
            return Err(err("restarts must be at least 1"));
        }
        if optimizer.n_min == 0 || optimizer.n_min > optimizer.n_max {
            return Err(err(format!(
                "mode range n_min = {} .. n_max = {} is invalid",
                optimizer.n_min, optimizer.n_max
            )));
        }
        if !(optimizer.eta_tol > 0.0) || !(optimizer.nelder_mead.tol >= 0.0) {
            return Err(err("tolerances must be positive"));
        }

        let threads = match raw.parsed::<usize>("threads")? {
            Some(0) => return Err(err("threads must be at least 1")),
            t => t,
        };
        let suites = match raw.get("suite") {
            None | Some("all") => Suite::ALL.to_vec(),
            Some(name) => vec![name.parse().map_err(err)?],
        };
        let verbose = match raw.get("verbose") {
            None | Some("false") | Some("0") => false,
            Some("true") | Some("1") => true,
            Some(v) => return Err(err(format!("invalid verbose `{v}`"))),
        };

        Ok(Self {
            protocols,
            source,
            eta,
            eta_grid,
            noise,
            dark_count,
            optimizer,
            out: raw.get("out").map(PathBuf::from),
            threads,
            suites,
            verbose,
        })
    }

    /// `key = value` lines of the effective settings.
    pub fn describe(&self) -> String {
        let o = &self.optimizer;
        let names: Vec<&str> = self.protocols.iter().map(|p| p.name()).collect();
        let mut lines = vec![
            format!("protocol = {}", names.join(",")),
            format!("source = {}", self.source.name()),
        ];
        if let Some(eta) = self.eta {
            lines.push(format!("eta = {eta}"));
        }
        lines.extend([
            format!(
                "eta_min = {}",
                self.eta_grid.first().copied().unwrap_or_default()
            ),
            format!(
                "eta_max = {}",
                self.eta_grid.last().copied().unwrap_or_default()
            ),
            format!("eta_steps = {}", self.eta_grid.len()),
            match self.noise {
                NoiseChoice::Optimize => "p = opt".to_string(),
                NoiseChoice::Fixed(p) => format!("p = {}", p.p()),
            },
            format!("dark_count = {}", self.dark_count),
            format!("n_min = {}", o.n_min),
            format!("n_max = {}", o.n_max),
            format!("seed = {}", o.seed),
            format!("restarts = {}", o.restarts),
            format!("max_evals = {}", o.nelder_mead.max_evals),
            format!("tol = {}", o.nelder_mead.tol),
            format!("eta_tol = {}", o.eta_tol),
            format!("positive_rate = {}", o.positive_rate),
            format!(
                "threads = {}",
                self.threads.map_or("auto".to_string(), |t| t.to_string())
            ),
        ]);
        if let Some(out) = &self.out {
            lines.push(format!("out = {}", out.display()));
        }
        let suites: Vec<&str> = self.suites.iter().map(|s| s.name()).collect();
        lines.push(format!("suite = {}", suites.join(",")));
        lines.join("\n")
    }
}
