//! `key=value` experiment configuration with dotted section names.
//!
//! Values are kept as the raw strings the user wrote. Every lookup records
//! the effective value (the user's string or the default), so the resolved
//! map lists exactly the knobs a run depended on and can be written back out
//! as a config file that reproduces the run.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{io_error, CliError, Result};

#[derive(Debug, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
    resolved: RefCell<BTreeMap<String, String>>,
    /// Location keys: consumed but kept out of the echo, since where results
    /// go never changes a number.
    locations: RefCell<BTreeSet<String>>,
}

fn valid_key(key: &str) -> bool {
    !key.is_empty()
        && key.split('.').all(|part| {
            !part.is_empty() && part.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        })
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::config(format!("line {}: expected key=value, got {line:?}", no + 1))
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| CliError::config(format!("line {}: {e}", no + 1)))?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_error(path))?;
        Self::parse(&text)
    }

    /// Sets or overrides `key`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !valid_key(key) {
            return Err(CliError::config(format!("invalid key {key:?}")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Parses a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("expected key=value, got {pair:?}")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        raw.parse()
            .map_err(|e| CliError::config(format!("{key} = {raw:?}: {e}")))
    }

    pub fn get<T: FromStr + fmt::Display>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        match self.values.get(key) {
            Some(raw) => {
                let v = Self::parse_value(key, raw)?;
                self.resolved
                    .borrow_mut()
                    .insert(key.to_string(), raw.clone());
                Ok(v)
            }
            None => {
                self.resolved
                    .borrow_mut()
                    .insert(key.to_string(), default.to_string());
                Ok(default)
            }
        }
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        let raw = self
            .values
            .get(key)
            .ok_or_else(|| CliError::config(format!("missing required key {key}")))?;
        let v = Self::parse_value(key, raw)?;
        self.resolved
            .borrow_mut()
            .insert(key.to_string(), raw.clone());
        Ok(v)
    }

    pub fn optional<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.values.get(key) {
            Some(_) => self.require(key).map(Some),
            None => Ok(None),
        }
    }

    pub fn location(&self, key: &str) -> Option<PathBuf> {
        self.locations.borrow_mut().insert(key.to_string());
        self.values.get(key).map(PathBuf::from)
    }

    pub fn require_location(&self, key: &str) -> Result<PathBuf> {
        self.location(key)
            .ok_or_else(|| CliError::config(format!("missing required key {key}")))
    }

    /// Fails on keys the command never looked at, which are almost always
    /// typos or knobs of a different command.
    pub fn check_all_used(&self) -> Result<()> {
        let resolved = self.resolved.borrow();
        let locations = self.locations.borrow();
        let unused: Vec<&str> = self
            .values
            .keys()
            .filter(|k| !resolved.contains_key(*k) && !locations.contains(*k))
            .map(|k| k.as_str())
            .collect();
        if unused.is_empty() {
            Ok(())
        } else {
            Err(CliError::config(format!(
                "keys not used by this command: {}",
                unused.join(", ")
            )))
        }
    }

    pub fn resolved(&self) -> BTreeMap<String, String> {
        self.resolved.borrow().clone()
    }

    /// The resolved configuration as a config file.
    pub fn resolved_text(&self) -> String {
        self.resolved
            .borrow()
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }
}

/// Comma-separated integers, or powers of two written `2^a..2^b` (inclusive).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SizeList(pub Vec<usize>);

impl FromStr for SizeList {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if let Some((a, b)) = s.split_once("..") {
            let exp = |t: &str| -> std::result::Result<u32, String> {
                t.trim()
                    .strip_prefix("2^")
                    .ok_or_else(|| format!("expected 2^k, got {t:?}"))?
                    .parse()
                    .map_err(|e| format!("{e}"))
            };
            let (lo, hi) = (exp(a)?, exp(b)?);
            if lo > hi || hi > 40 {
                return Err(format!("bad power range {s:?}"));
            }
            return Ok(SizeList((lo..=hi).map(|k| 1usize << k).collect()));
        }
        let v = s
            .split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}")))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(SizeList(v))
    }
}

impl fmt::Display for SizeList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

/// Comma-separated seeds, or a half-open range `a..b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeedList(pub Vec<u64>);

impl FromStr for SeedList {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if let Some((a, b)) = s.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|e| format!("{e}"))?;
            let b: u64 = b.trim().parse().map_err(|e| format!("{e}"))?;
            if a >= b {
                return Err(format!("empty seed range {s:?}"));
            }
            return Ok(SeedList((a..b).collect()));
        }
        let v = s
            .split(',')
            .map(|t| t.trim().parse::<u64>().map_err(|e| format!("{t:?}: {e}")))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(SeedList(v))
    }
}

impl fmt::Display for SeedList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

/// Comma-separated floats.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatList(pub Vec<f64>);

impl FromStr for FloatList {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(FloatList)
    }
}

impl fmt::Display for FloatList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_overrides() {
        let mut c = Config::parse("# sweep\nmanifold.kind = sphere\n\nseeds=0..3\n").unwrap();
        c.set_pair("manifold.kind=cube").unwrap();
        assert_eq!(c.require::<String>("manifold.kind").unwrap(), "cube");
        assert_eq!(c.require::<SeedList>("seeds").unwrap().0, vec![0, 1, 2]);
        assert_eq!(c.get("n_eval", 1000usize).unwrap(), 1000);
        assert_eq!(
            c.resolved_text(),
            "manifold.kind=cube\nn_eval=1000\nseeds=0..3\n"
        );
        c.check_all_used().unwrap();
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(Config::parse("no equals sign").is_err());
        assert!(Config::parse("bad key=1").is_err());
        assert!(Config::parse("a..b=1").is_err());
        let c = Config::parse("n=ten").unwrap();
        assert!(matches!(c.get("n", 5usize), Err(CliError::Config(_))));
    }

    #[test]
    fn unused_keys_are_reported() {
        let c = Config::parse("n=3\nmanifold.arcs=2").unwrap();
        c.get("n", 1usize).unwrap();
        let err = c.check_all_used().unwrap_err().to_string();
        assert!(err.contains("manifold.arcs"));
    }

    #[test]
    fn locations_are_consumed_but_not_echoed() {
        let c = Config::parse("out=/tmp/x\nseed=3").unwrap();
        assert_eq!(c.require_location("out").unwrap(), PathBuf::from("/tmp/x"));
        c.get("seed", 0u64).unwrap();
        c.check_all_used().unwrap();
        assert_eq!(c.resolved_text(), "seed=3\n");
    }

    #[test]
    fn list_syntaxes() {
        assert_eq!("2^5..2^7".parse::<SizeList>().unwrap().0, vec![32, 64, 128]);
        assert_eq!("3, 5,8".parse::<SizeList>().unwrap().0, vec![3, 5, 8]);
        assert!("2^7..2^5".parse::<SizeList>().is_err());
        assert_eq!("4..6".parse::<SeedList>().unwrap().0, vec![4, 5]);
        assert!("6..6".parse::<SeedList>().is_err());
        assert_eq!("0.5,-1".parse::<FloatList>().unwrap().0, vec![0.5, -1.0]);
    }
}
