//! `key = value` configuration with embedded defaults.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Output {
    Text,
    Json,
    Csv,
}

impl std::str::FromStr for Output {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "text" => Output::Text,
            "json" => Output::Json,
            "csv" => Output::Csv,
            other => bail!("unknown output format `{other}` (expected text, json or csv)"),
        })
    }
}

impl fmt::Display for Output {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Output::Text => "text",
            Output::Json => "json",
            Output::Csv => "csv",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub prime_lo: u64,
    pub prime_hi: u64,
    /// `(numerator, denominator)`, strictly between 0 and 1.
    pub holdout_fraction: (u64, u64),
    pub height_bound: u64,
    /// `None` disables the residue cache.
    pub cache_dir: Option<PathBuf>,
    /// `None` means one thread per core.
    pub threads: Option<usize>,
    pub output: Output,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            prime_lo: 5,
            prime_hi: 500,
            holdout_fraction: (1, 3),
            height_bound: 64,
            cache_dir: Some(PathBuf::from(".fmmv-cache")),
            threads: None,
            output: Output::Text,
        }
    }
}

fn parse_fraction(v: &str) -> Result<(u64, u64)> {
    let (n, d) = v.split_once('/').unwrap_or((v, "1"));
    let (n, d): (u64, u64) = (n.trim().parse()?, d.trim().parse()?);
    if n == 0 || n >= d {
        bail!("holdout_fraction must lie strictly between 0 and 1, got {v}");
    }
    Ok((n, d))
}

/// `LO..HI` (inclusive).
pub fn parse_range(v: &str) -> Result<(u64, u64)> {
    let (lo, hi) = v
        .split_once("..")
        .with_context(|| format!("expected a range LO..HI, got `{v}`"))?;
    let lo: u64 = lo
        .trim()
        .parse()
        .with_context(|| format!("bad lower bound in `{v}`"))?;
    let hi: u64 = hi
        .trim()
        .trim_start_matches('=')
        .parse()
        .with_context(|| format!("bad upper bound in `{v}`"))?;
    if lo > hi {
        bail!("empty range `{v}`");
    }
    Ok((lo, hi))
}

impl Config {
    /// Apply one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "prime_lo" => self.prime_lo = value.parse()?,
            "prime_hi" => self.prime_hi = value.parse()?,
            "holdout_fraction" => self.holdout_fraction = parse_fraction(value)?,
            "height_bound" => self.height_bound = value.parse()?,
            "cache_dir" => {
                self.cache_dir = match value {
                    "" | "none" | "off" => None,
                    dir => Some(PathBuf::from(dir)),
                }
            }
            "threads" => {
                self.threads = match value {
                    "auto" => None,
                    n => Some(n.parse().context("threads must be a number or `auto`")?),
                }
            }
            "output" => self.output = value.parse()?,
            other => bail!("unknown configuration key `{other}`"),
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Config::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .with_context(|| format!("{}:{}: expected `key = value`", path.display(), n + 1))?;
            cfg.set(k, v)
                .with_context(|| format!("{}:{}", path.display(), n + 1))?;
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        if self.prime_lo > self.prime_hi {
            bail!(
                "prime_lo {} exceeds prime_hi {}",
                self.prime_lo,
                self.prime_hi
            );
        }
        if self.height_bound == 0 {
            bail!("height_bound must be positive");
        }
        if self.threads == Some(0) {
            bail!("threads must be positive or `auto`");
        }
        Ok(())
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "prime_lo = {}", self.prime_lo)?;
        writeln!(f, "prime_hi = {}", self.prime_hi)?;
        writeln!(
            f,
            "holdout_fraction = {}/{}",
            self.holdout_fraction.0, self.holdout_fraction.1
        )?;
        writeln!(f, "height_bound = {}", self.height_bound)?;
        match &self.cache_dir {
            Some(d) => writeln!(f, "cache_dir = {}", d.display())?,
            None => writeln!(f, "cache_dir = none")?,
        }
        match self.threads {
            Some(n) => writeln!(f, "threads = {n}")?,
            None => writeln!(f, "threads = auto")?,
        }
        writeln!(f, "output = {}", self.output)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printed_config_reads_back() {
        let mut cfg = Config::default();
        cfg.set("threads", "3").unwrap();
        cfg.set("cache_dir", "none").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fmmv.conf");
        std::fs::write(&path, cfg.to_string()).unwrap();
        assert_eq!(Config::load(&path).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_settings() {
        let mut cfg = Config::default();
        assert!(cfg.set("holdout_fraction", "3/2").is_err());
        assert!(cfg.set("holdout_fraction", "0").is_err());
        assert!(cfg.set("colour", "blue").is_err());
        assert!(cfg.set("output", "xml").is_err());
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("5..100").unwrap(), (5, 100));
        assert_eq!(parse_range("5..=100").unwrap(), (5, 100));
        assert!(parse_range("100..5").is_err());
        assert!(parse_range("5-100").is_err());
    }
}
