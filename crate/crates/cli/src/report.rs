//! Flat `key=value` reports.

use std::fmt::Display;
use std::fs;
use std::path::Path;

use hquery::census::CensusCounts;

use crate::CliError;

/// Ordered `key=value` pairs; rendering is deterministic.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Report {
    entries: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl Display) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn push_flag(&mut self, key: impl Into<String>, value: bool) {
        self.push(key, u8::from(value));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    /// `<prefix>R`, `<prefix>SND`, `<prefix>N`, `<prefix>coN`, `<prefix>BAD`.
    pub fn push_counts(&mut self, prefix: &str, c: &CensusCounts) {
        self.push(format!("{prefix}R"), c.r);
        self.push(format!("{prefix}SND"), c.snd);
        self.push(format!("{prefix}N"), c.nice);
        self.push(format!("{prefix}coN"), c.co_nice);
        self.push(format!("{prefix}BAD"), c.bad);
    }

    pub fn counts(&self, prefix: &str) -> Option<CensusCounts> {
        let n = |key: &str| self.get(&format!("{prefix}{key}"))?.parse().ok();
        Some(CensusCounts {
            r: n("R")?,
            snd: n("SND")?,
            nice: n("N")?,
            co_nice: n("coN")?,
            bad: n("BAD")?,
        })
    }

    pub fn render(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    pub fn parse(text: &str) -> Result<Report, CliError> {
        let mut r = Report::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Parse(format!("report line without '=': {line:?}")))?;
            r.push(k, v);
        }
        Ok(r)
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(CliError::io(dir))?;
        }
        fs::write(path, self.render()).map_err(CliError::io(path))
    }
}
