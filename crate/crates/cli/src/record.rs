//! Run records, sweep tables and atomic file output.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use fracground_core::analysis::SweepEntry;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use serde_json::ser::Formatter;

use crate::config::RunConfig;

/// One executed assertion.
#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub name: &'static str,
    pub pass: bool,
    /// What was asserted, with the measured numbers.
    pub detail: String,
}

impl Verdict {
    pub fn new(name: &'static str, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name,
            pass,
            detail: detail.into(),
        }
    }
}

/// Serializes as `{name: pass}` in execution order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Verdicts(pub Vec<Verdict>);

impl Verdicts {
    pub fn push(&mut self, name: &'static str, pass: bool, detail: impl Into<String>) {
        self.0.push(Verdict::new(name, pass, detail));
    }

    pub fn first_failed(&self) -> Option<&Verdict> {
        self.0.iter().find(|v| !v.pass)
    }

    pub fn details(&self) -> Details<'_> {
        Details(self)
    }
}

impl Serialize for Verdicts {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for v in &self.0 {
            map.serialize_entry(v.name, &v.pass)?;
        }
        map.end()
    }
}

pub struct Details<'a>(&'a Verdicts);

impl Serialize for Details<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0 .0.len()))?;
        for v in &self.0 .0 {
            map.serialize_entry(v.name, &v.detail)?;
        }
        map.end()
    }
}

#[derive(Serialize)]
pub struct RunRecord<'a> {
    pub tool_version: &'static str,
    pub experiment: &'static str,
    pub config_echo: &'a RunConfig,
    pub wall_time_s: f64,
    pub results: serde_json::Value,
    pub verdicts: &'a Verdicts,
    pub verdict_details: Details<'a>,
    pub first_failed: Option<&'static str>,
    pub error: Option<String>,
}

/// Pretty JSON with every float in shortest round-trip scientific notation.
struct Scientific(serde_json::ser::PrettyFormatter<'static>);

impl Formatter for Scientific {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        write!(w, "{value:e}")
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Scientific(serde_json::ser::PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(out)
}

/// Fixed twelve-significant-digit scientific format used in tables.
pub fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.11e}")
    } else {
        "nan".to_string()
    }
}

/// Tab-separated sweep table. Columns, in order: `eps`, `nu`, `max_x`
/// (`max_x`, `max_y` in 2D), `decay_slope`, `crit_norm`, `profile_gap`,
/// `converged`. A missing decay fit is written as `nan`.
pub fn sweep_table(entries: &[SweepEntry], dim: usize) -> String {
    let coords = ["max_x", "max_y"];
    let mut header = vec!["eps", "nu"];
    header.extend(&coords[..dim]);
    header.extend(["decay_slope", "crit_norm", "profile_gap", "converged"]);
    let mut out = header.join("\t");
    out.push('\n');
    for e in entries {
        let mut row = vec![fmt_num(e.eps), fmt_num(e.nu)];
        row.extend(e.maximizer.iter().map(|&m| fmt_num(m)));
        row.push(e.decay_slope.map_or_else(|| "nan".to_string(), fmt_num));
        row.push(fmt_num(e.criticality_norm));
        row.push(fmt_num(e.profile_gap));
        row.push(e.converged.to_string());
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    out
}

/// Writes through a temporary file in the same directory, then renames, so
/// the final path never holds a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// `<dir>/<experiment>-<timestamp>`, with a numeric suffix if a record with
/// that stem already exists.
pub fn output_stem(dir: &Path, experiment: &str) -> PathBuf {
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ");
    let base = format!("{experiment}-{stamp}");
    let taken = |stem: &str| {
        dir.join(format!("{stem}.record.json")).exists() || dir.join(format!("{stem}.sweep.tsv")).exists()
    };
    let mut stem = base.clone();
    let mut k = 1;
    while taken(&stem) {
        stem = format!("{base}-{k}");
        k += 1;
    }
    dir.join(stem)
}

pub fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}
