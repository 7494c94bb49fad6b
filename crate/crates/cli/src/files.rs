//! Input discovery, atomic writes and manifests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use brakesense::format::write_atomic;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::hex;
use crate::error::CliError;

fn walk(dir: &Path, ext: &str, out: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::Data(format!("cannot list {}: {e}", dir.display())))?;
    for entry in entries {
        let path = entry.map_err(|e| CliError::Data(format!("cannot list {}: {e}", dir.display())))?.path();
        if path.is_dir() {
            walk(&path, ext, out)?;
        } else if path.extension().is_some_and(|x| x == ext) {
            out.push(path);
        }
    }
    Ok(())
}

/// Files with extension `ext`, given directly or found under directories,
/// sorted and deduplicated.
pub fn collect(inputs: &[PathBuf], ext: &str) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            walk(p, ext, &mut out)?;
        } else if p.is_file() {
            out.push(p.clone());
        } else {
            return Err(CliError::Data(format!("input {} does not exist", p.display())));
        }
    }
    out.sort();
    out.dedup();
    if out.is_empty() {
        return Err(CliError::Usage(format!("no .{ext} inputs found")));
    }
    Ok(out)
}

/// Files grouped by parent directory, groups in path order.
pub fn group_by_parent(files: Vec<PathBuf>) -> BTreeMap<PathBuf, Vec<PathBuf>> {
    let mut groups: BTreeMap<PathBuf, Vec<PathBuf>> = BTreeMap::new();
    for f in files {
        let parent = f.parent().map(Path::to_path_buf).unwrap_or_default();
        groups.entry(parent).or_default().push(f);
    }
    groups
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))
}

pub fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        create_dir(parent)?;
    }
    write_atomic(path, bytes).map_err(|e| CliError::Data(e.to_string()))
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    path: String,
    bytes: usize,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_hash: &'a str,
    seed: u64,
    files: Vec<ManifestEntry>,
}

/// Writes `bytes` to `root/rel` and describes the file for the manifest.
pub fn write_entry(root: &Path, rel: &str, bytes: &[u8]) -> Result<ManifestEntry, CliError> {
    write(&root.join(rel), bytes)?;
    Ok(ManifestEntry {
        path: rel.to_string(),
        bytes: bytes.len(),
        sha256: hex(&Sha256::digest(bytes)),
    })
}

/// `root/manifest.json` listing `entries` by path.
pub fn write_manifest(
    root: &Path,
    command: &str,
    config_hash: &str,
    seed: u64,
    mut entries: Vec<ManifestEntry>,
) -> Result<(), CliError> {
    entries.sort_by(|a, b| a.path.cmp(&b.path));
    let manifest = Manifest {
        command,
        config_hash,
        seed,
        files: entries,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    write(&root.join("manifest.json"), text.as_bytes())
}
