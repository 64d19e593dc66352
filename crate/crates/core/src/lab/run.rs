//! Flat `key = value` config files, the run manifest and output writers.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::str::FromStr;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Ordered key/value pairs; `#` starts a comment, blank lines are skipped.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunConfig {
    pub entries: BTreeMap<String, String>,
}

impl FromStr for RunConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", no + 1)));
            }
            if entries.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key {k:?}", no + 1)));
            }
        }
        Ok(Self { entries })
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        std::fs::read_to_string(path)?.parse()
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Parsed value, or `default` when the key is absent.
    pub fn get<V: FromStr>(&self, key: &str, default: V) -> Result<V> {
        match self.entries.get(key) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|_| Error::Config(format!("bad value for {key}: {s:?}"))),
        }
    }

    /// Comma-separated list.
    pub fn get_list<V: FromStr>(&self, key: &str) -> Result<Option<Vec<V>>> {
        self.entries
            .get(key)
            .map(|s| {
                s.split(',')
                    .map(|x| x.trim().parse().map_err(|_| Error::Config(format!("bad entry in {key}: {x:?}"))))
                    .collect()
            })
            .transpose()
    }

    /// Canonical text: sorted `key = value` lines.
    pub fn canonical(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// Hex SHA-256 of the canonical text.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct RunManifest {
    #[serde(rename = "git-describe")]
    pub git_describe: String,
    pub seed: u64,
    #[serde(rename = "config-hash")]
    pub config_hash: String,
}

impl RunManifest {
    pub fn new(config: &RunConfig, seed: u64) -> Self {
        Self { git_describe: git_describe(), seed, config_hash: config.hash() }
    }
}

/// `git describe --always --dirty`, or "unknown" outside a work tree.
pub fn git_describe() -> String {
    Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".into())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<S: Serialize, W: Write>(value: &S, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// CSV with a header row; floats in shortest round-trip form.
pub fn write_table<W: Write>(header: &[&str], rows: &[Vec<f64>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        if r.len() != header.len() {
            return Err(Error::InvalidInput(format!("row has {} fields, header {}", r.len(), header.len())));
        }
        w.write_record(r.iter().map(|x| format!("{x:e}")))?;
    }
    w.flush()?;
    Ok(())
}
