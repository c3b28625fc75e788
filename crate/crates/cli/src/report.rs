//! Verdicts, `summary.json`, and atomic artifact writes.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use krf_core::ansatz::fmt_f64;
use serde::Serialize;
use serde_json::Value;

use crate::config::ConfigError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    #[serde(serialize_with = "finite_or_null")]
    pub measured: f64,
    #[serde(serialize_with = "finite_or_null")]
    pub expected: f64,
    #[serde(serialize_with = "finite_or_null")]
    pub tolerance: f64,
    /// The property being checked, in words.
    pub reference: String,
}

fn finite_or_null<S: serde::Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

impl Verdict {
    /// `measured ≤ bound`; recorded with expected value 0.
    pub fn at_most(name: &str, measured: f64, bound: f64, reference: &str) -> Self {
        Self::build(name, measured <= bound, measured, 0.0, bound, reference)
    }

    /// `|measured − expected| ≤ tolerance`.
    pub fn within(name: &str, measured: f64, expected: f64, tolerance: f64, reference: &str) -> Self {
        Self::build(name, (measured - expected).abs() <= tolerance, measured, expected, tolerance, reference)
    }

    /// `|measured − expected| ≤ rel·|expected|`.
    pub fn within_rel(name: &str, measured: f64, expected: f64, rel: f64, reference: &str) -> Self {
        Self::within(name, measured, expected, rel * expected.abs(), reference)
    }

    /// `measured ≥ expected − tolerance`.
    pub fn at_least(name: &str, measured: f64, expected: f64, tolerance: f64, reference: &str) -> Self {
        Self::build(name, measured >= expected - tolerance, measured, expected, tolerance, reference)
    }

    /// `measured ≤ expected + tolerance`.
    pub fn below(name: &str, measured: f64, expected: f64, tolerance: f64, reference: &str) -> Self {
        Self::build(name, measured <= expected + tolerance, measured, expected, tolerance, reference)
    }

    /// An exact check; measured is 1 when it holds.
    pub fn holds(name: &str, ok: bool, reference: &str) -> Self {
        Self::build(name, ok, if ok { 1.0 } else { 0.0 }, 1.0, 0.0, reference)
    }

    fn build(name: &str, pass: bool, measured: f64, expected: f64, tolerance: f64, reference: &str) -> Self {
        Verdict {
            name: name.to_string(),
            pass: pass && measured.is_finite(),
            measured,
            expected,
            tolerance,
            reference: reference.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub verdicts: Vec<Verdict>,
    /// Extra tables, keyed by name.
    #[serde(skip_serializing_if = "serde_json::Map::is_empty")]
    pub tables: serde_json::Map<String, Value>,
}

impl Summary {
    pub fn new(scenario: &str) -> Self {
        Summary { scenario: scenario.to_string(), verdicts: Vec::new(), tables: serde_json::Map::new() }
    }

    pub fn push(&mut self, v: Verdict) {
        self.verdicts.push(v);
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summaries serialize");
        s.push('\n');
        s
    }
}

/// Why a run stopped early.
#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    /// The flow or a solver broke down.
    Numerical(String),
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) | RunError::Io(_) => 2,
            RunError::Numerical(_) => 3,
        }
    }

    pub fn context(self, scenario: &str) -> Self {
        match self {
            RunError::Config(e) => RunError::Config(e),
            RunError::Numerical(m) => RunError::Numerical(format!("{scenario}: {m}")),
            RunError::Io(m) => RunError::Io(format!("{scenario}: {m}")),
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Numerical(m) => write!(f, "numerical failure: {m}"),
            RunError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<krf_core::Error> for RunError {
    fn from(e: krf_core::Error) -> Self {
        use krf_core::Error as E;
        match e {
            E::Singularity { .. } | E::StabilityViolation { .. } | E::NoConvergence { .. } | E::NonKaehler { .. } => {
                RunError::Numerical(e.to_string())
            }
            E::Io(m) => RunError::Io(m),
            other => RunError::Config(ConfigError::new("", other.to_string())),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e.to_string())
    }
}

/// Writes files under one directory, each to a temporary name first and then
/// renamed into place. [`Artifacts::discard`] removes everything written.
pub struct Artifacts {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(dir).map_err(|e| RunError::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Artifacts { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), RunError> {
        let target = self.dir.join(name);
        if let Some(parent) = target.parent() {
            fs::create_dir_all(parent)?;
        }
        let file_name = target.file_name().and_then(|s| s.to_str()).unwrap_or("artifact");
        let tmp = target.with_file_name(format!(".{file_name}.partial"));
        let result = (|| {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(bytes)?;
            f.sync_all()?;
            fs::rename(&tmp, &target)
        })();
        if let Err(e) = result {
            let _ = fs::remove_file(&tmp);
            return Err(RunError::Io(format!("{}: {e}", target.display())));
        }
        self.written.push(target);
        Ok(())
    }

    /// Writes a CSV table whose floats use the round-trip format.
    pub fn write_table(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<(), RunError> {
        let mut out = header.join(",");
        out.push('\n');
        for r in rows {
            out.push_str(&r.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        self.write(name, out.as_bytes())
    }

    /// Writes a table through one of the core CSV writers.
    pub fn write_with(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut Vec<u8>) -> krf_core::Result<()>,
    ) -> Result<(), RunError> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, &buf)
    }

    pub fn discard(self) {
        for p in self.written.iter().rev() {
            let _ = fs::remove_file(p);
        }
    }
}
