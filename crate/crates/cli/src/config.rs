//! Flat key=value configuration with command-line override.
//!
//! A config file holds one `key=value` pair per line (`#` comments allowed);
//! flags win over file values, file values win over built-in defaults. The
//! resolved configuration is echoed into the manifest so runs are
//! reproducible from their output directory alone.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};

#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        let mut values = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                bail!("{}:{}: expected key=value", path.display(), lineno + 1);
            };
            values.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn raw(&self) -> &BTreeMap<String, String> {
        &self.values
    }
}

/// A knob resolver that records every resolved value for the manifest.
pub struct Resolver<'a> {
    file: &'a FileConfig,
    resolved: BTreeMap<String, String>,
}

impl<'a> Resolver<'a> {
    pub fn new(file: &'a FileConfig) -> Self {
        Self { file, resolved: BTreeMap::new() }
    }

    /// Flag value, else file value, else default.
    pub fn knob<T: FromStr + ToString>(
        &mut self,
        flag: Option<T>,
        key: &str,
        default: T,
    ) -> Result<T>
    where
        <T as FromStr>::Err: std::fmt::Display,
    {
        let value = match flag {
            Some(v) => v,
            None => match self.file.values.get(key) {
                Some(s) => s
                    .parse::<T>()
                    .map_err(|e| anyhow::anyhow!("config key {key}={s}: {e}"))?,
                None => default,
            },
        };
        self.resolved.insert(key.to_string(), value.to_string());
        Ok(value)
    }

    /// Required knob: flag or file, no default.
    pub fn required<T: FromStr + ToString>(&mut self, flag: Option<T>, key: &str) -> Result<T>
    where
        <T as FromStr>::Err: std::fmt::Display,
    {
        let value = match flag {
            Some(v) => v,
            None => match self.file.values.get(key) {
                Some(s) => s
                    .parse::<T>()
                    .map_err(|e| anyhow::anyhow!("config key {key}={s}: {e}"))?,
                None => bail!("missing required option: {key}"),
            },
        };
        self.resolved.insert(key.to_string(), value.to_string());
        Ok(value)
    }

    pub fn into_resolved(self) -> BTreeMap<String, String> {
        self.resolved
    }
}

/// Count values accept scientific notation (`1e7`).
pub fn parse_count(s: &str) -> Result<usize, String> {
    if let Ok(n) = s.parse::<usize>() {
        return Ok(n);
    }
    let f = s.parse::<f64>().map_err(|e| format!("{e}"))?;
    if !f.is_finite() || !(0.0..=1e15).contains(&f) {
        return Err(format!("count out of range: {s}"));
    }
    Ok(f.round() as usize)
}

/// Parameter windows are written `lo:hi`.
pub fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or("expected lo:hi")?;
    let lo = lo.trim().parse::<f64>().map_err(|e| format!("{e}"))?;
    let hi = hi.trim().parse::<f64>().map_err(|e| format!("{e}"))?;
    if lo >= hi || lo.is_nan() || hi.is_nan() {
        return Err(format!("window endpoints out of order: {s}"));
    }
    Ok((lo, hi))
}

/// Window argument adapter implementing `FromStr`/`Display` for the
/// resolver.
#[derive(Clone, Copy)]
pub struct WindowArg(pub (f64, f64));

impl FromStr for WindowArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_window(s).map(WindowArg)
    }
}

impl std::fmt::Display for WindowArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.0 .0, self.0 .1)
    }
}
