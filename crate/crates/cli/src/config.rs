//! Flat `key = value` experiment files.
//!
//! One entry per line, `#` starts a comment, no nesting. Each mode accepts a
//! fixed key set; unknown keys and missing required keys are rejected before
//! any solver runs.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    MlEval,
    Ode,
    Pde,
    Decay,
    Verify,
    Compare,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::MlEval => "ml-eval",
            Mode::Ode => "ode",
            Mode::Pde => "pde",
            Mode::Decay => "decay",
            Mode::Verify => "verify",
            Mode::Compare => "compare",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A recognised key and its default; `None` marks it required.
#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub name: &'static str,
    pub default: Option<&'static str>,
}

const fn req(name: &'static str) -> KeySpec {
    KeySpec { name, default: None }
}

const fn opt(name: &'static str, default: &'static str) -> KeySpec {
    KeySpec { name, default: Some(default) }
}

const ML_KEYS: &[KeySpec] = &[
    req("alpha"),
    opt("gamma", "1"),
    opt("x_min", "0"),
    opt("x_max", "100"),
    opt("points", "201"),
    opt("spacing", "linear"),
    opt("tol", "1e-13"),
];

const MEMORY_KEYS: &[KeySpec] = &[req("alpha"), req("q"), opt("q_amplitude", "0"), opt("q_frequency", "1")];

const ODE_KEYS: &[KeySpec] = &[
    req("lambda"),
    opt("v0", "1"),
    req("horizon"),
    opt("steps_per_unit", "1024"),
    opt("forcing", "0"),
    opt("method", "l1"),
    opt("output_stride", "1"),
];

const SPACE_KEYS: &[KeySpec] = &[
    opt("length", "pi"),
    opt("n_x", "200"),
    opt("a0", "1"),
    opt("a1", "0"),
    opt("nu", "auto"),
    opt("c", "0"),
    opt("u0", "parabola"),
];

const PDE_KEYS: &[KeySpec] = &[
    req("horizon"),
    opt("steps_per_unit", "1024"),
    opt("source", "0"),
    opt("method", "l1"),
    opt("picard_max_iter", "25"),
    opt("picard_tol", "1e-8"),
    opt("output_stride", "1"),
];

const DECAY_KEYS: &[KeySpec] = &[
    opt("t_min", "100"),
    opt("t_max", "10000"),
    opt("points", "30"),
    opt("window_min", "100"),
    opt("window_max", "10000"),
    opt("steps_per_unit", "64"),
];

const COMPARE_KEYS: &[KeySpec] = &[
    req("horizon"),
    opt("steps_per_unit", "1024"),
    opt("t_compare_min", "0.1"),
    opt("output_stride", "32"),
];

const VERIFY_KEYS: &[KeySpec] = &[opt("cases", "20")];

/// Every key accepted by `mode`, in output order.
pub fn keys_for(mode: Mode) -> Vec<KeySpec> {
    let groups: &[&[KeySpec]] = match mode {
        Mode::MlEval => &[ML_KEYS],
        Mode::Ode => &[MEMORY_KEYS, ODE_KEYS],
        Mode::Pde => &[MEMORY_KEYS, SPACE_KEYS, PDE_KEYS],
        Mode::Decay => &[MEMORY_KEYS, SPACE_KEYS, DECAY_KEYS],
        Mode::Compare => &[MEMORY_KEYS, SPACE_KEYS, COMPARE_KEYS],
        Mode::Verify => &[VERIFY_KEYS],
    };
    groups.iter().flat_map(|g| g.iter().copied()).collect()
}

/// Parsed and defaulted experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    mode: Mode,
    seed: u64,
    order: Vec<&'static str>,
    values: BTreeMap<&'static str, String>,
}

fn invalid(reason: impl Into<String>) -> CliError {
    CliError::Config(reason.into())
}

impl ExperimentConfig {
    pub fn from_file(mode: Mode, path: &Path, seed: Option<u64>) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(mode, &text, seed)
    }

    /// Parse `text` for `mode`. A `seed` argument overrides a `seed` entry.
    pub fn parse(mode: Mode, text: &str, seed: Option<u64>) -> Result<Self, CliError> {
        let mut raw: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| invalid(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(invalid(format!("line {}: empty key or value", lineno + 1)));
            }
            if raw.insert(key.to_string(), value.to_string()).is_some() {
                return Err(invalid(format!("line {}: duplicate key '{key}'", lineno + 1)));
            }
        }
        if let Some(m) = raw.remove("mode") {
            if m != mode.name() {
                return Err(invalid(format!("config is for mode '{m}' but '{mode}' was requested")));
            }
        }
        let file_seed = match raw.remove("seed") {
            Some(s) => Some(s.parse::<u64>().map_err(|_| invalid(format!("seed: not an unsigned integer: '{s}'")))?),
            None => None,
        };
        let specs = keys_for(mode);
        if let Some(unknown) = raw.keys().find(|k| !specs.iter().any(|s| s.name == k.as_str())) {
            return Err(invalid(format!("unknown key '{unknown}' for mode {mode}")));
        }
        let mut values = BTreeMap::new();
        for spec in &specs {
            let value = match (raw.remove(spec.name), spec.default) {
                (Some(v), _) => v,
                (None, Some(d)) => d.to_string(),
                (None, None) => return Err(invalid(format!("missing required key '{}' for mode {mode}", spec.name))),
            };
            values.insert(spec.name, value);
        }
        Ok(ExperimentConfig {
            mode,
            seed: seed.or(file_seed).unwrap_or(0),
            order: specs.iter().map(|s| s.name).collect(),
            values,
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `mode=… seed=… key=value …` in key-table order.
    pub fn resolved(&self) -> String {
        let mut out = format!("mode={} seed={}", self.mode, self.seed);
        for key in &self.order {
            out.push_str(&format!(" {key}={}", self.values[key]));
        }
        out
    }

    pub fn text(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("key '{key}' not declared for mode {}", self.mode))
    }

    /// Real value; the literal `pi` is accepted.
    pub fn real(&self, key: &str) -> Result<f64, CliError> {
        parse_real(key, self.text(key))
    }

    pub fn count(&self, key: &str) -> Result<usize, CliError> {
        let v = self.text(key);
        v.parse::<usize>().map_err(|_| invalid(format!("{key}: not a non-negative integer: '{v}'")))
    }

    /// Comma-separated reals.
    pub fn reals(&self, key: &str) -> Result<Vec<f64>, CliError> {
        self.text(key).split(',').map(|s| parse_real(key, s.trim())).collect()
    }

    /// One of `choices`.
    pub fn choice(&self, key: &str, choices: &[&str]) -> Result<&str, CliError> {
        let v = self.text(key);
        if choices.contains(&v) {
            Ok(v)
        } else {
            Err(invalid(format!("{key}: expected one of {}, got '{v}'", choices.join("|"))))
        }
    }
}

fn parse_real(key: &str, v: &str) -> Result<f64, CliError> {
    let x = if v == "pi" {
        std::f64::consts::PI
    } else {
        v.parse::<f64>().map_err(|_| invalid(format!("{key}: not a number: '{v}'")))?
    };
    if x.is_finite() {
        Ok(x)
    } else {
        Err(invalid(format!("{key}: must be finite, got '{v}'")))
    }
}
