//! Run manifests: one JSON file per command invocation recording the
//! resolved configuration, the seeds, SHA-256 digests of every input file,
//! timestamps, and per-iteration timing. The digests are what make
//! byte-level reproducibility claims checkable — commands that consume a
//! checkpoint verify the current corpus files against the digests recorded
//! when the checkpoint was written and refuse to run on a mismatch.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::common::sibling_path;
use crate::error::{CliError, CliResult};

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

/// Wall-time summary of one timed loop (a chain, or one benchmark run).
#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct TimingSummary {
    pub label: String,
    pub iterations: usize,
    pub mean_ms: f64,
    pub std_ms: f64,
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct RunManifest {
    pub command: String,
    /// Echo of the fully resolved configuration (defaults filled in).
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub inputs: Vec<InputDigest>,
    pub started_at: String,
    pub finished_at: String,
    pub iteration_timing: Vec<TimingSummary>,
    /// Command-specific result summary (scores, averages, output paths).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub summary: Option<serde_json::Value>,
}

pub fn sha256_hex(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

pub fn digest_inputs(pairs: &[(String, PathBuf)]) -> CliResult<Vec<InputDigest>> {
    pairs
        .iter()
        .map(|(role, path)| {
            Ok(InputDigest {
                role: role.clone(),
                path: path.display().to_string(),
                sha256: sha256_hex(path)?,
            })
        })
        .collect()
}

pub fn write_manifest(path: &Path, manifest: &RunManifest) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(manifest)
        .map_err(|e| CliError::invalid(format!("manifest serialization: {e}")))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> CliResult<RunManifest> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::invalid(format!("{}: not a valid manifest: {e}", path.display())))
}

/// Default manifest location for a checkpoint written by `train`.
pub fn checkpoint_manifest_path(checkpoint: &Path) -> PathBuf {
    sibling_path(checkpoint, ".manifest.json")
}

/// Compares the corpus files passed to this invocation against the digests
/// recorded in the checkpoint's manifest. Every core role (docs, vocab,
/// links, labels) must agree on both presence and content; a mismatch is a
/// hard error so a checkpoint is never silently combined with inputs other
/// than the ones it was trained on. A missing manifest only warns: the
/// checkpoint may come from the library API, which records none.
pub fn validate_checkpoint_inputs(
    checkpoint: &Path,
    now_pairs: &[(String, PathBuf)],
) -> CliResult<()> {
    let manifest_path = checkpoint_manifest_path(checkpoint);
    if !manifest_path.is_file() {
        eprintln!(
            "warning: no manifest at {}; input digests not verified",
            manifest_path.display()
        );
        return Ok(());
    }
    let manifest = read_manifest(&manifest_path)?;
    for role in ["docs", "vocab", "links", "labels"] {
        let recorded = manifest.inputs.iter().find(|input| input.role == role);
        let current = now_pairs.iter().find(|(r, _)| r == role);
        match (recorded, current) {
            (None, None) => {}
            (Some(rec), Some((_, path))) => {
                let now = sha256_hex(path)?;
                if now != rec.sha256 {
                    return Err(CliError::invalid(format!(
                        "{role} file {} does not match the digest recorded in {} \
                         (expected {}, found {now}); refusing to combine the checkpoint \
                         with changed inputs",
                        path.display(),
                        manifest_path.display(),
                        rec.sha256,
                    )));
                }
            }
            (Some(rec), None) => {
                return Err(CliError::invalid(format!(
                    "the checkpoint was trained with a {role} file ({}); pass the same file",
                    rec.path
                )));
            }
            (None, Some((_, path))) => {
                return Err(CliError::invalid(format!(
                    "the checkpoint was trained without a {role} file, but {} was passed",
                    path.display()
                )));
            }
        }
    }
    Ok(())
}

/// Mean and sample standard deviation of wall times in milliseconds.
pub fn timing_summary(label: impl Into<String>, wall_ms: &[f64]) -> TimingSummary {
    let n = wall_ms.len();
    let mean = if n == 0 {
        0.0
    } else {
        wall_ms.iter().sum::<f64>() / n as f64
    };
    let std = if n >= 2 {
        let var = wall_ms.iter().map(|&x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        var.sqrt()
    } else {
        0.0
    };
    TimingSummary {
        label: label.into(),
        iterations: n,
        mean_ms: mean,
        std_ms: std,
    }
}
