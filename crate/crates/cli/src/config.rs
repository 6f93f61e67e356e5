//! Flat `key = value` configuration files. Keys are the long flag names;
//! a flag given on the command line always wins over the file.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, CliResult};

const KNOWN_KEYS: &[&str] = &[
    "rho", "mu", "theta", "sigma", "variant", "alpha", "levels", "samples", "seed", "threads", "out", "json",
    "force", "rho-min", "rho-max", "steps", "bounded", "horizon", "k0", "schemes", "attach", "detach", "rate",
    "interval", "payments", "level", "index", "phi", "lambda",
];

#[derive(Debug, Default)]
pub struct Resolver {
    entries: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

impl Resolver {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("config line {}: expected key=value, got {raw:?}", n + 1)))?;
            let key = key.trim().replace('_', "-");
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(CliError::usage(format!("config line {}: duplicate key {key:?}", n + 1)));
            }
        }
        Ok(Resolver {
            entries,
            used: RefCell::new(BTreeSet::new()),
        })
    }

    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            None => Ok(Resolver::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", p.display())))?;
                Self::parse(&text)
            }
        }
    }

    /// Command-line value, else the file's value, else `None`.
    pub fn get<T: FromStr>(&self, cli: Option<T>, key: &str) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.used.borrow_mut().insert(key.to_string());
        if cli.is_some() {
            return Ok(cli);
        }
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| CliError::usage(format!("config key {key}: cannot parse {v:?}: {e}"))),
        }
    }

    pub fn or<T: FromStr>(&self, cli: Option<T>, key: &str, default: T) -> CliResult<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(cli, key)?.unwrap_or(default))
    }

    pub fn flag(&self, cli: bool, key: &str) -> CliResult<bool> {
        Ok(cli || self.get::<bool>(None, key)?.unwrap_or(false))
    }

    /// Rejects keys that no command understands. Keys meant for other
    /// commands are allowed so one file can serve several runs.
    pub fn finish(&self) -> CliResult<()> {
        let used = self.used.borrow();
        let unknown: Vec<&str> = self
            .entries
            .keys()
            .filter(|k| !used.contains(*k) && !KNOWN_KEYS.contains(&k.as_str()))
            .map(String::as_str)
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CliError::usage(format!("unknown config keys: {}", unknown.join(", "))))
        }
    }
}
