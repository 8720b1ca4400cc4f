//! Experiment configuration and its `key = value` file form.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(CliError::Invalid(format!("unknown format '{s}' (csv or json)"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Everything a run depends on. `out` and `threads` do not affect results
/// and are left out of the hash.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentConfig {
    pub command: Option<String>,
    pub spec: Option<String>,
    pub x: Option<u64>,
    pub x_grid: Option<Vec<u64>>,
    pub target: Option<String>,
    pub deltas: Option<String>,
    pub kmax: Option<usize>,
    pub mc_n: Option<usize>,
    pub seed: Option<u64>,
    pub guard: Option<f64>,
    pub u: Option<f64>,
    pub format: Option<Format>,
    pub out: Option<String>,
    pub threads: Option<usize>,
}

const HASHED_KEYS: &[&str] = &[
    "command", "spec", "x", "x_grid", "target", "deltas", "kmax", "mc_n", "seed", "guard", "u", "format",
];

pub fn parse_u64(s: &str) -> Result<u64, CliError> {
    let s = s.trim();
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < 1.8e19 => Ok(v as u64),
        _ => Err(CliError::Invalid(format!("'{s}' is not a nonnegative integer"))),
    }
}

fn parse_f64(s: &str) -> Result<f64, CliError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| CliError::Invalid(format!("'{s}' is not a number")))
}

fn parse_usize(s: &str) -> Result<usize, CliError> {
    Ok(parse_u64(s)? as usize)
}

pub fn parse_x_grid(s: &str) -> Result<Vec<u64>, CliError> {
    s.split(',').map(parse_u64).collect()
}

/// `start:stop:step` (inclusive of `stop` up to rounding) or a comma list.
pub fn parse_deltas(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (parse_f64(start)?, parse_f64(stop)?, parse_f64(step)?);
            if !(step > 0.0) || stop < start {
                return Err(CliError::Invalid(format!("bad delta range '{s}'")));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize;
            Ok((0..=count).map(|i| start + i as f64 * step).collect())
        }
        [list] => list.split(',').map(parse_f64).collect(),
        _ => Err(CliError::Invalid(format!("bad delta grid '{s}'"))),
    }
}

fn join_u64(v: &[u64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let v = value.to_string();
        match key {
            "command" => self.command = Some(v),
            "spec" => self.spec = Some(v),
            "x" => self.x = Some(parse_u64(value)?),
            "x_grid" => self.x_grid = Some(parse_x_grid(value)?),
            "target" => self.target = Some(v),
            "deltas" => {
                parse_deltas(value)?;
                self.deltas = Some(v)
            }
            "kmax" => self.kmax = Some(parse_usize(value)?),
            "mc_n" => self.mc_n = Some(parse_usize(value)?),
            "seed" => self.seed = Some(parse_u64(value)?),
            "guard" => self.guard = Some(parse_f64(value)?),
            "u" => self.u = Some(parse_f64(value)?),
            "format" => self.format = Some(Format::parse(value)?),
            "out" => self.out = Some(v),
            "threads" => self.threads = Some(parse_usize(value)?),
            _ => return Err(CliError::Invalid(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    fn entries(&self) -> BTreeMap<&'static str, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                m.insert(k, v);
            }
        };
        put("command", self.command.clone());
        put("spec", self.spec.clone());
        put("x", self.x.map(|v| v.to_string()));
        put("x_grid", self.x_grid.as_deref().map(join_u64));
        put("target", self.target.clone());
        put("deltas", self.deltas.clone());
        put("kmax", self.kmax.map(|v| v.to_string()));
        put("mc_n", self.mc_n.map(|v| v.to_string()));
        put("seed", self.seed.map(|v| v.to_string()));
        put("guard", self.guard.map(|v| v.to_string()));
        put("u", self.u.map(|v| v.to_string()));
        put("format", self.format.map(|f| f.as_str().to_string()));
        put("out", self.out.clone());
        put("threads", self.threads.map(|v| v.to_string()));
        m
    }

    /// Parses `key = value` lines; blank lines and `#` comments are skipped.
    pub fn from_kv(text: &str) -> Result<Self, CliError> {
        let mut cfg = ExperimentConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Invalid(format!("config line {}: expected key = value", i + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            writeln!(s, "{k} = {v}").unwrap();
        }
        s
    }

    /// Fields set in `other` replace those in `self`.
    pub fn merged(mut self, other: &ExperimentConfig) -> Self {
        for (k, v) in other.entries() {
            self.set(k, &v).expect("entries round-trip");
        }
        self
    }

    /// SHA-256 of the result-relevant entries.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.entries() {
            if HASHED_KEYS.contains(&k) {
                h.update(k.as_bytes());
                h.update(b"=");
                h.update(v.as_bytes());
                h.update(b"\n");
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}
