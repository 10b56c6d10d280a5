//! Experiment records and the JSON-lines store that doubles as a cache.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Lfun,
    Zeta,
    Gnp,
    Membership,
    Verify,
    DworkCheck,
}

/// What an experiment computes, before it is stamped.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub kind: Kind,
    pub params: Value,
    pub result: Value,
    /// Set when a verification found a disagreement.
    pub mismatch: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub kind: Kind,
    pub key: String,
    pub params: Value,
    pub result: Value,
    pub mismatch: bool,
    pub version: String,
    pub timestamp: String,
}

/// sha256 of the canonical JSON of (kind, params). serde_json maps are
/// sorted, so key order in `params` does not matter.
pub fn cache_key(kind: Kind, params: &Value) -> String {
    let canon = serde_json::to_string(&json!({ "kind": kind, "params": params })).expect("json");
    hex::encode(Sha256::digest(canon.as_bytes()))
}

impl ExperimentRecord {
    pub fn stamp(o: Outcome) -> Self {
        ExperimentRecord {
            kind: o.kind,
            key: cache_key(o.kind, &o.params),
            params: o.params,
            result: o.result,
            mismatch: o.mismatch,
            version: ARTIFACT_VERSION.to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
        }
    }

    /// Everything except the timestamp, for reproducibility checks.
    pub fn payload(&self) -> Value {
        json!({
            "kind": self.kind,
            "key": self.key,
            "params": self.params,
            "result": self.result,
            "mismatch": self.mismatch,
            "version": self.version,
        })
    }
}

/// Append-only JSON-lines file. Records already present are served from
/// memory instead of being recomputed.
pub struct RecordStore {
    path: Option<PathBuf>,
    index: HashMap<String, ExperimentRecord>,
    writer: Option<File>,
}

impl RecordStore {
    /// A store that keeps nothing.
    pub fn ephemeral() -> Self {
        RecordStore { path: None, index: HashMap::new(), writer: None }
    }

    pub fn open(path: &Path) -> Result<Self> {
        let mut index = HashMap::new();
        if path.exists() {
            let f = File::open(path).with_context(|| format!("reading {}", path.display()))?;
            for (n, line) in BufReader::new(f).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: ExperimentRecord =
                    serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), n + 1))?;
                if rec.version == ARTIFACT_VERSION {
                    index.entry(rec.key.clone()).or_insert(rec);
                }
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .with_context(|| format!("opening {}", path.display()))?;
        Ok(RecordStore { path: Some(path.to_path_buf()), index, writer: Some(file) })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn lookup(&self, kind: Kind, params: &Value) -> Option<&ExperimentRecord> {
        self.index.get(&cache_key(kind, params))
    }

    pub fn append(&mut self, rec: &ExperimentRecord) -> Result<()> {
        if let Some(f) = self.writer.as_mut() {
            writeln!(f, "{}", serde_json::to_string(rec)?)?;
            f.flush()?;
        }
        if self.path.is_some() {
            self.index.entry(rec.key.clone()).or_insert_with(|| rec.clone());
        }
        Ok(())
    }

    /// Cached record for the request, or a fresh one computed by `run`.
    /// The boolean reports a cache hit.
    pub fn get_or_run(
        &mut self,
        kind: Kind,
        params: Value,
        use_cache: bool,
        run: impl FnOnce() -> Result<Outcome>,
    ) -> Result<(ExperimentRecord, bool)> {
        if use_cache {
            if let Some(rec) = self.lookup(kind, &params) {
                return Ok((rec.clone(), true));
            }
        }
        let outcome = run()?;
        debug_assert_eq!(outcome.kind, kind);
        debug_assert_eq!(outcome.params, params);
        let rec = ExperimentRecord::stamp(outcome);
        self.append(&rec)?;
        Ok((rec, false))
    }
}
