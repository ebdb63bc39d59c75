//! Flat `key = value` experiment files with `#` comments.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use trotterlab::bounds::{gamma_rate, Rational};
use trotterlab::oracle::Check;
use trotterlab::ratefit::{CrossoverOptions, DEFAULT_CROSSOVER_THRESHOLD, DEFAULT_WINDOW};
use trotterlab::spectral::{Coulomb, Interaction};
use trotterlab::trotter::{Backend, SplittingScheme};

/// Every key the commands understand. Anything else is rejected so typos
/// surface as errors instead of silently falling back to defaults.
pub const KNOWN_KEYS: &[&str] = &[
    "scheme",
    "state",
    "ell_condition",
    "c",
    "sign",
    "grid_n",
    "r_max",
    "T",
    "L",
    "output",
    "seed",
    "predicted",
    "tol",
    "window",
    "threshold",
    "backend",
    "dim",
    "t",
    "nodes",
    "check",
    "steps",
    "ell_max",
    "particles",
    "c0",
    "abs_const",
    "t_step",
    "h2_norm",
    "m_e",
    "m_p",
    "hbar",
    "e_sq",
    "beta",
    "samples",
    "times_end",
    "times_n",
    "free_end",
    "free_n",
    "norm_threshold",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    /// 1-based; 0 when the problem is not tied to one line.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}: {}", self.path, self.message)
        } else {
            write!(f, "{}:{}: {}", self.path, self.line, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

type ConfigResult<T> = Result<T, ConfigError>;

/// Parsed but untyped entries, remembering the line each came from.
#[derive(Debug, Clone)]
pub struct RawConfig {
    label: String,
    base_dir: PathBuf,
    entries: BTreeMap<String, (usize, String)>,
}

impl RawConfig {
    pub fn load(path: &Path) -> ConfigResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            path: path.display().to_string(),
            line: 0,
            message: format!("cannot read config: {e}"),
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &path.display().to_string(), base)
    }

    pub fn parse(text: &str, label: &str, base_dir: PathBuf) -> ConfigResult<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| ConfigError {
                path: label.to_string(),
                line,
                message,
            };
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got {content:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(err("missing key before `=`".into()));
            }
            if !KNOWN_KEYS.contains(&key) {
                return Err(err(format!("unknown key {key:?}")));
            }
            if value.is_empty() {
                return Err(err(format!("key {key:?} has no value")));
            }
            if let Some((first, _)) = entries.insert(key.to_string(), (line, value.to_string())) {
                return Err(err(format!("key {key:?} repeats line {first}")));
            }
        }
        Ok(Self {
            label: label.to_string(),
            base_dir,
            entries,
        })
    }

    fn error(&self, key: &str, message: String) -> ConfigError {
        ConfigError {
            path: self.label.clone(),
            line: self.entries.get(key).map_or(0, |e| e.0),
            message,
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.1.as_str())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> ConfigResult<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| self.error(key, format!("bad value {v:?} for {key}: {e}"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> ConfigResult<T>
    where
        T::Err: fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> ConfigResult<T>
    where
        T::Err: fmt::Display,
    {
        self.get(key)?.ok_or_else(|| ConfigError {
            path: self.label.clone(),
            line: 0,
            message: format!("missing required key {key:?}"),
        })
    }

    /// Comma or whitespace separated values; `2^a..2^b` expands to powers of two.
    pub fn list(&self, key: &str) -> ConfigResult<Option<Vec<usize>>> {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        let mut out = Vec::new();
        for item in v.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()) {
            let parsed = parse_list_item(item).map_err(|m| self.error(key, format!("{key}: {m}")))?;
            out.extend(parsed);
        }
        if out.is_empty() {
            return Err(self.error(key, format!("{key} must not be empty")));
        }
        Ok(Some(out))
    }

    pub fn require_list(&self, key: &str) -> ConfigResult<Vec<usize>> {
        self.list(key)?.ok_or_else(|| ConfigError {
            path: self.label.clone(),
            line: 0,
            message: format!("missing required key {key:?}"),
        })
    }

    pub fn resolve(&self, relative: &str) -> PathBuf {
        let p = Path::new(relative);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn positive(&self, key: &str, default: Option<f64>) -> ConfigResult<f64> {
        let v: f64 = match default {
            Some(d) => self.get_or(key, d)?,
            None => self.require(key)?,
        };
        if !(v.is_finite() && v > 0.0) {
            return Err(self.error(key, format!("{key} must be positive and finite, got {v}")));
        }
        Ok(v)
    }
}

fn parse_power(item: &str) -> Result<usize, String> {
    if let Some(exp) = item.strip_prefix("2^") {
        let k: u32 = exp.parse().map_err(|_| format!("bad exponent in {item:?}"))?;
        if k > 40 {
            return Err(format!("exponent too large in {item:?}"));
        }
        Ok(1usize << k)
    } else {
        item.parse().map_err(|_| format!("bad integer {item:?}"))
    }
}

fn parse_list_item(item: &str) -> Result<Vec<usize>, String> {
    match item.split_once("..") {
        Some((lo, hi)) => {
            let (lo, hi) = (
                lo.strip_prefix("2^").ok_or_else(|| format!("ranges take the form 2^a..2^b, got {item:?}"))?,
                hi.strip_prefix("2^").ok_or_else(|| format!("ranges take the form 2^a..2^b, got {item:?}"))?,
            );
            let (a, b): (u32, u32) = (
                lo.parse().map_err(|_| format!("bad exponent in {item:?}"))?,
                hi.parse().map_err(|_| format!("bad exponent in {item:?}"))?,
            );
            if a > b || b > 40 {
                return Err(format!("bad exponent range in {item:?}"));
            }
            Ok((a..=b).map(|k| 1usize << k).collect())
        }
        None => Ok(vec![parse_power(item)?]),
    }
}

/// `hydrogen:n:l:m` or a superposition CSV.
#[derive(Debug, Clone, PartialEq)]
pub enum StateSource {
    Hydrogen { n: usize, ell: usize, m: i32 },
    File(PathBuf),
}

impl StateSource {
    pub fn label(&self) -> String {
        match self {
            StateSource::Hydrogen { n, ell, m } => format!("hydrogen:{n}:{ell}:{m}"),
            StateSource::File(p) => p.display().to_string(),
        }
    }
}

fn parse_state(raw: &RawConfig) -> ConfigResult<StateSource> {
    let v = raw
        .raw("state")
        .ok_or_else(|| raw.error("state", "missing required key \"state\"".into()))?;
    if let Some(rest) = v.strip_prefix("hydrogen:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let bad = || raw.error("state", format!("expected hydrogen:n:l:m, got {v:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let n: usize = parts[0].parse().map_err(|_| bad())?;
        let ell: usize = parts[1].parse().map_err(|_| bad())?;
        let m: i32 = parts[2].parse().map_err(|_| bad())?;
        if n == 0 || ell >= n || m.unsigned_abs() as usize > ell {
            return Err(raw.error("state", format!("invalid quantum numbers in {v:?}")));
        }
        return Ok(StateSource::Hydrogen { n, ell, m });
    }
    let path = raw.resolve(v);
    if !path.is_file() {
        return Err(raw.error("state", format!("state file {} does not exist", path.display())));
    }
    Ok(StateSource::File(path))
}

/// Settings shared by the sweep-style commands.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub scheme: SplittingScheme,
    pub state: StateSource,
    pub ell_condition: usize,
    pub coulomb: Coulomb,
    pub grid_n: Vec<usize>,
    pub r_max: f64,
    pub total_time: f64,
    pub steps: Vec<usize>,
    pub output: PathBuf,
    pub seed: u64,
    pub predicted: Rational,
    pub tol: f64,
    pub crossover: CrossoverOptions,
    pub backend: Backend,
}

pub const DEFAULT_TOL: f64 = 0.15;

impl ExperimentConfig {
    pub fn from_raw(raw: &RawConfig) -> ConfigResult<Self> {
        let scheme: SplittingScheme = raw.require("scheme")?;
        let ell_condition: usize = raw.get_or("ell_condition", 0)?;
        let c: f64 = raw.get_or("c", 2.0)?;
        let sign: i32 = raw.get_or("sign", -1)?;
        let interaction = Interaction::from_sign(sign).map_err(|e| raw.error("sign", e.to_string()))?;
        let coulomb = Coulomb::new(c, interaction).map_err(|e| raw.error("c", e.to_string()))?;

        let grid_n = raw.require_list("grid_n")?;
        if grid_n.windows(2).any(|w| w[1] <= w[0]) {
            return Err(raw.error("grid_n", "grid_n must be strictly ascending".into()));
        }
        let steps = raw.require_list("L")?;
        if steps.contains(&0) {
            return Err(raw.error("L", "step counts must be positive".into()));
        }
        if steps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(raw.error("L", "L must be strictly ascending".into()));
        }

        let predicted = match raw.raw("predicted") {
            Some(v) => Rational::parse(v).ok_or_else(|| raw.error("predicted", format!("bad rational {v:?}")))?,
            None => gamma_rate(scheme, ell_condition),
        };
        let tol = raw.positive("tol", Some(DEFAULT_TOL))?;
        let window: usize = raw.get_or("window", DEFAULT_WINDOW)?;
        if window < 4 {
            return Err(raw.error("window", "window must be at least 4".into()));
        }
        if steps.len() < window {
            return Err(raw.error("L", format!("L needs at least {window} step counts to fit a slope")));
        }
        let threshold = raw.positive("threshold", Some(DEFAULT_CROSSOVER_THRESHOLD))?;
        let backend = match raw.raw("backend") {
            None | Some("auto") => Backend::Auto,
            Some("dense") => Backend::Dense,
            Some("chebyshev") => Backend::Chebyshev,
            Some(other) => return Err(raw.error("backend", format!("unknown backend {other:?}"))),
        };

        Ok(Self {
            scheme,
            state: parse_state(raw)?,
            ell_condition,
            coulomb,
            grid_n,
            r_max: raw.positive("r_max", None)?,
            total_time: raw.positive("T", None)?,
            steps,
            output: raw.resolve(raw.raw("output").unwrap_or("trotterlab")),
            seed: raw.get_or("seed", 0)?,
            predicted,
            tol,
            crossover: CrossoverOptions { window, threshold },
            backend,
        })
    }
}

/// State, grid and coupling for the single-state commands.
#[derive(Debug, Clone)]
pub struct StateConfig {
    pub state: StateSource,
    pub ell_condition: usize,
    pub coulomb: Coulomb,
    pub grid_n: Vec<usize>,
    pub r_max: f64,
    pub output: PathBuf,
}

impl StateConfig {
    pub fn from_raw(raw: &RawConfig) -> ConfigResult<Self> {
        let c: f64 = raw.get_or("c", 2.0)?;
        let sign: i32 = raw.get_or("sign", -1)?;
        let interaction = Interaction::from_sign(sign).map_err(|e| raw.error("sign", e.to_string()))?;
        let grid_n = raw.require_list("grid_n")?;
        if grid_n.windows(2).any(|w| w[1] <= w[0]) {
            return Err(raw.error("grid_n", "grid_n must be strictly ascending".into()));
        }
        Ok(Self {
            state: parse_state(raw)?,
            ell_condition: raw.require("ell_condition")?,
            coulomb: Coulomb::new(c, interaction).map_err(|e| raw.error("c", e.to_string()))?,
            grid_n,
            r_max: raw.positive("r_max", None)?,
            output: raw.resolve(raw.raw("output").unwrap_or("trotterlab")),
        })
    }
}

#[derive(Debug, Clone)]
pub struct OracleConfig {
    pub dim: usize,
    pub seed: u64,
    pub t: f64,
    pub nodes: usize,
    pub checks: Vec<Check>,
    pub steps: usize,
}

impl OracleConfig {
    pub fn from_raw(raw: &RawConfig) -> ConfigResult<Self> {
        let checks = match raw.raw("check") {
            None | Some("all") => vec![Check::Strang, Check::Lie, Check::Comm, Check::Relation],
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse::<Check>().map_err(|e| raw.error("check", e.to_string())))
                .collect::<ConfigResult<_>>()?,
        };
        Ok(Self {
            dim: raw.get_or("dim", 6)?,
            seed: raw.get_or("seed", 0)?,
            t: raw.get_or("t", 0.3)?,
            nodes: raw.get_or("nodes", 24)?,
            checks,
            steps: raw.get_or("steps", 4)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> ConfigResult<RawConfig> {
        RawConfig::parse(text, "test.cfg", PathBuf::new())
    }

    #[test]
    fn comments_and_lists() {
        let raw = parse("# header\nscheme = strang  # trailing\n\nL = 2^4..2^6, 100\ngrid_n = 10 20\n").unwrap();
        assert_eq!(raw.raw("scheme"), Some("strang"));
        assert_eq!(raw.list("L").unwrap().unwrap(), vec![16, 32, 64, 100]);
        assert_eq!(raw.list("grid_n").unwrap().unwrap(), vec![10, 20]);
    }

    #[test]
    fn line_numbers_in_errors() {
        let e = parse("scheme = lie\n\nbogus = 1\n").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(e.to_string().starts_with("test.cfg:3:"));
        let e = parse("scheme = lie\nscheme = strang\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert_eq!(parse("no equals sign\n").unwrap_err().line, 1);

        let raw = parse("scheme = lie\nstate = hydrogen:1:0:0\nr_max = 10\nT = 1\nL = 16\ngrid_n = 40, 20\n").unwrap();
        assert_eq!(ExperimentConfig::from_raw(&raw).unwrap_err().line, 6);
        let raw = parse("scheme = sideways\n").unwrap();
        assert_eq!(ExperimentConfig::from_raw(&raw).unwrap_err().line, 1);
    }

    #[test]
    fn experiment_defaults() {
        let raw = parse("scheme = strang\nstate = hydrogen:5:4:0\nell_condition = 3\nr_max = 60\nT = 1\nL = 2^4..2^8\ngrid_n = 100\n").unwrap();
        let cfg = ExperimentConfig::from_raw(&raw).unwrap();
        assert_eq!(cfg.predicted, Rational::new(2, 1));
        assert_eq!(cfg.state, StateSource::Hydrogen { n: 5, ell: 4, m: 0 });
        assert_eq!(cfg.coulomb, Coulomb::hydrogen());
        assert_eq!(cfg.steps.len(), 5);
        assert_eq!(cfg.crossover, CrossoverOptions::default());
    }

    #[test]
    fn rejects_bad_states() {
        for bad in ["hydrogen:2:2:0", "hydrogen:3:1:2", "hydrogen:1:0", "missing.csv"] {
            let raw = parse(&format!("state = {bad}\n")).unwrap();
            let e = parse_state(&raw).unwrap_err();
            assert_eq!(e.line, 1, "{bad}");
        }
    }
}
