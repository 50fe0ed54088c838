//! Flat `key = value` configuration with `#` comments, overridden by command-line flags.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::report::Json;
use crate::RunError;

pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, RunError> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(RunError::config(format!("line {}", n + 1), format!("expected key = value, got `{line}`")));
        };
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(RunError::config(format!("line {}", n + 1), "empty key"));
        }
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(RunError::config(key, "given twice"));
        }
    }
    Ok(map)
}

pub fn load_config(path: &Path) -> Result<BTreeMap<String, String>, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::config("config", format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Resolves each parameter from flag, then file, then default, and records what was used.
#[derive(Debug, Default)]
pub struct Resolver {
    file: BTreeMap<String, String>,
    used: BTreeSet<String>,
    echo: BTreeMap<String, Json>,
}

pub trait Echo {
    fn echo(&self) -> Json;
}

impl Echo for f64 {
    fn echo(&self) -> Json {
        Json::Num(*self)
    }
}

impl Echo for usize {
    fn echo(&self) -> Json {
        Json::from(*self)
    }
}

impl Echo for bool {
    fn echo(&self) -> Json {
        Json::Bool(*self)
    }
}

impl Echo for String {
    fn echo(&self) -> Json {
        Json::from(self.as_str())
    }
}

impl Resolver {
    pub fn new(file: BTreeMap<String, String>) -> Self {
        Resolver {
            file,
            ..Default::default()
        }
    }

    pub fn get<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, RunError>
    where
        T: FromStr + Echo,
        T::Err: Display,
    {
        self.used.insert(key.to_string());
        let v = match (flag, self.file.get(key)) {
            (Some(v), _) => v,
            (None, Some(s)) => s
                .parse::<T>()
                .map_err(|e| RunError::config(key, format!("cannot parse `{s}`: {e}")))?,
            (None, None) => default,
        };
        self.echo.insert(key.to_string(), v.echo());
        Ok(v)
    }

    /// A comma-separated list of numbers.
    pub fn list(&mut self, key: &str, flag: Option<String>, default: &[f64]) -> Result<Vec<f64>, RunError> {
        self.used.insert(key.to_string());
        let text = flag.or_else(|| self.file.get(key).cloned());
        let v = match text {
            Some(s) => s
                .split(',')
                .map(|p| p.trim().parse::<f64>().map_err(|e| RunError::config(key, format!("cannot parse `{p}`: {e}"))))
                .collect::<Result<Vec<f64>, _>>()?,
            None => default.to_vec(),
        };
        if v.is_empty() {
            return Err(RunError::config(key, "empty list"));
        }
        self.echo.insert(key.to_string(), Json::Arr(v.iter().map(|x| Json::Num(*x)).collect()));
        Ok(v)
    }

    /// Rejects file keys no parameter asked for, and hands back the echo of resolved values.
    pub fn finish(&mut self) -> Result<BTreeMap<String, Json>, RunError> {
        if let Some(k) = self.file.keys().find(|k| !self.used.contains(*k)) {
            return Err(RunError::config(k.clone(), "unknown key for this subcommand"));
        }
        Ok(std::mem::take(&mut self.echo))
    }
}

/// A positivity / range precondition, reported against `key`.
pub fn require(key: &str, ok: bool, msg: impl Into<String>) -> Result<(), RunError> {
    if ok {
        Ok(())
    } else {
        Err(RunError::config(key, msg))
    }
}
