//! Run configuration: a `key=value` file merged with command-line flags.
//!
//! Keys are the long flag names (`program`, `input`, `T`, `S`, `lambda`,
//! `hash`, `n`, `epsilon`, `delta`, `surplus`, `a`, `b`, `strategies`,
//! `seed`, `trials`, `out`, `t-grid`, `s-grid`, `keys`). Blank lines and lines
//! starting with `#` are skipped. A flag given on the command line wins over
//! the same key in the file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mrm_core::fixtures::{self, Fixture};
use mrm_core::mechanism::{DEFAULT_DELTA, DEFAULT_EPSILON};
use mrm_core::{program, Dims, HashAlgorithm, MachineSpec, Mechanism, StrategyKind};
use thiserror::Error;

pub const KEYS: &[&str] = &[
    "program",
    "input",
    "T",
    "S",
    "lambda",
    "hash",
    "n",
    "epsilon",
    "delta",
    "surplus",
    "a",
    "b",
    "strategies",
    "seed",
    "trials",
    "out",
    "t-grid",
    "s-grid",
    "keys",
];

pub const DEFAULT_PROGRAM: &str = "unary-increment";
pub const DEFAULT_TRIALS: u32 = 50;
const DEFAULT_DIMS: (u32, u32, u32) = (64, 64, Dims::DEFAULT_LAMBDA);

#[derive(Debug, Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

impl ConfigError {
    fn new(msg: impl fmt::Display) -> Self {
        ConfigError(msg.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Origin {
    Flag,
    File { path: PathBuf, line: usize },
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Flag => f.write_str("command line"),
            Origin::File { path, line } => write!(f, "{}:{line}", path.display()),
        }
    }
}

#[derive(Clone, Debug)]
struct Entry {
    value: String,
    origin: Origin,
}

/// Raw settings before validation, keyed by flag name.
#[derive(Clone, Debug, Default)]
pub struct Settings {
    entries: BTreeMap<String, Entry>,
}

impl Settings {
    /// Reads a config file.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new(format_args!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let mut out = Settings::default();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let here = || format!("{}:{line}", path.display());
            let (key, value) = trimmed
                .split_once('=')
                .ok_or_else(|| ConfigError::new(format_args!("{}: expected key=value", here())))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(ConfigError::new(format_args!("{}: unknown key `{key}`", here())));
            }
            if out.entries.contains_key(key) {
                return Err(ConfigError::new(format_args!("{}: duplicate key `{key}`", here())));
            }
            let origin = Origin::File {
                path: path.to_path_buf(),
                line,
            };
            out.entries.insert(
                key.into(),
                Entry {
                    value: value.trim().into(),
                    origin,
                },
            );
        }
        Ok(out)
    }

    /// Sets `key` from a flag, replacing any file value.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        debug_assert!(KEYS.contains(&key), "{key}");
        self.entries.insert(
            key.into(),
            Entry {
                value: value.to_string(),
                origin: Origin::Flag,
            },
        );
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some(e) => e.value.parse().map(Some).map_err(|err| {
                ConfigError::new(format_args!("{}: bad value `{}` for `{key}`: {err}", e.origin, e.value))
            }),
        }
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        let Some(e) = self.entries.get(key) else {
            return Ok(None);
        };
        e.value
            .split(',')
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse().map_err(|err| {
                    ConfigError::new(format_args!("{}: bad entry `{s}` in `{key}`: {err}", e.origin))
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    /// Path value, taken relative to the config file's directory when it
    /// came from a file.
    fn path(&self, key: &str) -> Option<PathBuf> {
        let e = self.entries.get(key)?;
        let p = PathBuf::from(&e.value);
        match &e.origin {
            Origin::File { path, .. } if p.is_relative() => {
                Some(path.parent().map_or(p.clone(), |dir| dir.join(&p)))
            }
            _ => Some(p),
        }
    }
}

/// Where the machine came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProgramSource {
    Fixture(&'static str),
    File(PathBuf),
}

impl fmt::Display for ProgramSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProgramSource::Fixture(name) => f.write_str(name),
            ProgramSource::File(p) => write!(f, "{}", p.display()),
        }
    }
}

/// A validated run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub program: ProgramSource,
    pub spec: MachineSpec,
    pub input: String,
    pub dims: Dims,
    pub hash: HashAlgorithm,
    pub n: Option<u32>,
    pub epsilon: f64,
    pub delta: f64,
    /// The surplus `b`; chosen from the admissible interval when absent.
    pub surplus: Option<i64>,
    pub a: StrategyKind,
    pub b: StrategyKind,
    pub strategies: Vec<StrategyKind>,
    pub seed: u64,
    pub trials: u32,
    pub out: Option<PathBuf>,
    /// `log2 T` values for `bench`.
    pub t_grid: Vec<u32>,
    /// `log2 S` values for `bench`.
    pub s_grid: Vec<u32>,
    pub keys: u32,
}

impl RunConfig {
    pub fn from_settings(s: &Settings) -> Result<Self, ConfigError> {
        let (program, spec, fixture) = load_program(s)?;
        let input = match s.get("input") {
            Some(v) => v.to_string(),
            None => fixture.map(|f| f.input().to_string()).unwrap_or_default(),
        };
        let (t0, s0, l0) = fixture.map_or(DEFAULT_DIMS, |f| {
            let d = f.dims();
            (d.rows, d.cols, d.lambda)
        });
        let rows = s.parsed("T")?.unwrap_or(t0);
        let cols = s.parsed("S")?.unwrap_or(s0);
        let lambda = s.parsed("lambda")?.unwrap_or(l0);
        let dims = Dims::new(rows, cols, lambda)
            .map_err(|e| ConfigError::new(format_args!("T={rows} S={cols} lambda={lambda}: {e}")))?;
        spec.encode_input(&input)
            .map_err(|e| ConfigError::new(format_args!("input `{input}`: {e}")))?;

        let n: Option<u32> = s.parsed("n")?;
        if let Some(n) = n {
            if n < 16 {
                return Err(ConfigError::new(format_args!("n = {n}: must be at least 16")));
            }
        }
        let epsilon = s.parsed("epsilon")?.unwrap_or(DEFAULT_EPSILON);
        let delta = s.parsed("delta")?.unwrap_or(DEFAULT_DELTA);
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(ConfigError::new(format_args!("epsilon = {epsilon}: must lie in (0, 1)")));
        }
        if !(delta > 0.0 && delta < 0.5) {
            return Err(ConfigError::new(format_args!("delta = {delta}: must lie in (0, 1/2)")));
        }
        let trials = s.parsed("trials")?.unwrap_or(DEFAULT_TRIALS);
        if trials == 0 {
            return Err(ConfigError::new("trials must be at least 1"));
        }
        let keys = s.parsed("keys")?.unwrap_or(2);
        if keys == 0 {
            return Err(ConfigError::new("keys must be at least 1"));
        }
        let t_grid = s.list("t-grid")?.unwrap_or_else(|| vec![6, 8, 10, 12]);
        let s_grid = s.list("s-grid")?.unwrap_or_else(|| vec![7]);
        for &g in t_grid.iter().chain(&s_grid) {
            if !(1..=20).contains(&g) {
                return Err(ConfigError::new(format_args!("grid exponent {g} outside 1..=20")));
            }
        }
        let strategies = s.list("strategies")?.unwrap_or_else(StrategyKind::library);
        if strategies.is_empty() {
            return Err(ConfigError::new("strategies: empty list"));
        }

        Ok(RunConfig {
            program,
            spec,
            input,
            dims,
            hash: s.parsed("hash")?.unwrap_or_default(),
            n,
            epsilon,
            delta,
            surplus: s.parsed("surplus")?,
            a: s.parsed("a")?.unwrap_or(StrategyKind::Tau),
            b: s.parsed("b")?.unwrap_or(StrategyKind::Tau),
            strategies,
            seed: s.parsed("seed")?.unwrap_or(0),
            trials,
            out: s.path("out"),
            t_grid,
            s_grid,
            keys,
        })
    }

    /// Runs the honest machine; failures (no halt within `T`, tape too
    /// short) are configuration errors.
    pub fn mechanism(&self) -> Result<Mechanism, ConfigError> {
        Mechanism::new(&self.spec, &self.input, self.dims, self.hash)
            .map_err(|e| ConfigError::new(format_args!("{} on `{}`: {e}", self.program, self.input)))
    }
}

fn load_program(s: &Settings) -> Result<(ProgramSource, MachineSpec, Option<Fixture>), ConfigError> {
    let name = s.get("program").unwrap_or(DEFAULT_PROGRAM);
    if let Some(f) = fixtures::by_name(name) {
        return Ok((ProgramSource::Fixture(f.name()), f.spec(), Some(f)));
    }
    let path = s.path("program").expect("non-fixture program comes from a setting");
    let text = std::fs::read_to_string(&path)
        .map_err(|e| ConfigError::new(format_args!("cannot read program {}: {e}", path.display())))?;
    let spec = program::parse(&text).map_err(|e| ConfigError::new(format_args!("{}: {e}", path.display())))?;
    Ok((ProgramSource::File(path), spec, None))
}
