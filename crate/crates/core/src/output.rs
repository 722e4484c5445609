//! Deterministic file emission: CSV tables, plain-text matrices, JSON, all
//! stamped with the artifact version and the config hash, written atomically.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;
use crate::ARTIFACT_VERSION;

/// Provenance stamp carried by every output file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Stamp {
    pub version: String,
    pub config_hash: String,
}

impl Stamp {
    pub fn new(config_hash: impl Into<String>) -> Self {
        Self {
            version: ARTIFACT_VERSION.to_string(),
            config_hash: config_hash.into(),
        }
    }

    fn comment_line(&self) -> String {
        format!("# {} config_hash={}\n", self.version, self.config_hash)
    }
}

/// Shortest round-trip scientific formatting, stable across runs.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: vec![],
        }
    }

    pub fn push_numbers(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|&v| fmt_f64(v)).collect());
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, stamp: &Stamp) -> String {
        let mut out = stamp.comment_line();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Row-major plain-text matrix with a `rows cols L` header.
pub fn matrix_text(stamp: &Stamp, values: &[Vec<f64>], period: f64) -> String {
    let mut out = stamp.comment_line();
    let cols = values.first().map_or(0, Vec::len);
    let _ = writeln!(out, "{} {} {}", values.len(), cols, fmt_f64(period));
    for row in values {
        let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// JSON document `{ "version", "config_hash", ...payload }`.
pub fn json_document<T: Serialize>(stamp: &Stamp, payload: &T) -> Result<String> {
    #[derive(Serialize)]
    struct Doc<'a, T> {
        version: &'a str,
        config_hash: &'a str,
        #[serde(flatten)]
        payload: &'a T,
    }
    let doc = Doc {
        version: &stamp.version,
        config_hash: &stamp.config_hash,
        payload,
    };
    let mut s = serde_json::to_string_pretty(&doc).map_err(std::io::Error::other)?;
    s.push('\n');
    Ok(s)
}

/// Writes `contents` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, &target)?;
    Ok(target)
}
