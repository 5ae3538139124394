//! Run manifests: what was run, on which inputs, producing which outputs.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// Effective settings and where each came from (flag, env, file, default).
    pub config: Value,
    pub config_sources: BTreeMap<String, String>,
    /// Input path → SHA-256 of its contents.
    pub inputs: BTreeMap<String, String>,
    /// Role (chat, embedding, scorer) → model name.
    pub providers: BTreeMap<String, String>,
    pub prompt_hashes: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<String>,
}

pub fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true)
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::data(path.display(), e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Digest every file below `path` (or the file itself), keyed by path.
pub fn digest_inputs(paths: &[&Path]) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for &p in paths {
        if p.is_dir() {
            let mut entries: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| CliError::data(p.display(), e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|e| e.is_file() && !is_manifest(e))
                .collect();
            entries.sort();
            for e in entries {
                out.insert(e.display().to_string(), sha256_file(&e)?);
            }
        } else {
            out.insert(p.display().to_string(), sha256_file(p)?);
        }
    }
    Ok(out)
}

fn is_manifest(p: &Path) -> bool {
    p.file_name()
        .and_then(|n| n.to_str())
        .is_some_and(|n| n == DIR_MANIFEST || n.ends_with(".manifest.json"))
}

/// Manifest file name inside an output directory.
pub const DIR_MANIFEST: &str = "run-manifest.json";

/// Where the manifest for `output` goes: inside it for directories,
/// `<file>.manifest.json` beside it for files.
pub fn manifest_path(output: &Path, is_dir: bool) -> PathBuf {
    if is_dir {
        output.join(DIR_MANIFEST)
    } else {
        let mut name = output.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        output.with_file_name(name)
    }
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| CliError::data(dir.display(), e))?;
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(format!(".tmp-{}", std::process::id()));
    let tmp = dir.join(tmp_name);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        CliError::data(path.display(), e)
    })
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        write_atomic(path, text.as_bytes())
    }
}
