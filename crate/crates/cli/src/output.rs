//! Output emission: atomic writes, the deterministic CSV/JSON pair, and the
//! non-deterministic wall-clock sidecar.

use serde::Serialize;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Writes via a temp file in the same directory plus rename, so a crashed
/// run never leaves a partial artifact.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp-{}",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out"),
        std::process::id()
    ));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

/// Deterministic envelope around every report: resolved config with
/// provenance, master seed, and library version. Wall-clock data lives in
/// the separate `.meta.json` sidecar so reruns stay byte-identical.
#[derive(Debug, Serialize)]
pub struct Envelope<T: Serialize> {
    pub command: String,
    pub library_version: String,
    pub seed: Option<u64>,
    pub resolved_config: BTreeMap<String, crate::config::ResolvedValue>,
    pub report: T,
}

pub struct OutputSink {
    base: Option<PathBuf>,
    started: Instant,
}

impl OutputSink {
    pub fn new(out: Option<PathBuf>) -> Self {
        Self {
            base: out,
            started: Instant::now(),
        }
    }

    /// Writes `{out}.json` (+ `{out}.csv` when rows are given) and the
    /// `{out}.meta.json` wall-clock sidecar; returns the JSON text for
    /// stdout use.
    pub fn emit<T: Serialize>(
        &self,
        envelope: &Envelope<T>,
        csv: Option<String>,
    ) -> std::io::Result<String> {
        let json = serde_json::to_string_pretty(envelope).expect("reports serialize");
        if let Some(base) = &self.base {
            write_atomic(&base.with_extension("json"), &json)?;
            if let Some(csv) = &csv {
                write_atomic(&base.with_extension("csv"), csv)?;
            }
            let meta = serde_json::json!({
                "command": envelope.command,
                "library_version": envelope.library_version,
                "wall_time_ms": self.started.elapsed().as_millis() as u64,
                "unix_time_ms": std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_millis() as u64)
                    .unwrap_or(0),
                "note": "timing sidecar; excluded from determinism guarantees",
            });
            write_atomic(
                &base.with_extension("meta.json"),
                &serde_json::to_string_pretty(&meta).expect("meta serializes"),
            )?;
        }
        Ok(json)
    }
}

