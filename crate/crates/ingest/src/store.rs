//! Result bundles: a directory of files plus a hash manifest, replaced
//! atomically on every write.

use std::collections::BTreeMap;
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{IngestError, Result};
use crate::format::SCHEMA_VERSION;

pub const BUNDLE_MANIFEST: &str = "bundle.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleManifest {
    pub schema_version: u32,
    /// Sorted by path.
    pub files: Vec<BundleEntry>,
}

impl BundleManifest {
    pub fn get(&self, path: &str) -> Option<&BundleEntry> {
        self.files.iter().find(|f| f.path == path)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

fn check_relative(path: &str) -> Result<()> {
    let p = Path::new(path);
    let ok = !path.is_empty()
        && path != BUNDLE_MANIFEST
        && p.components().all(|c| matches!(c, Component::Normal(_)));
    if ok {
        Ok(())
    } else {
        Err(IngestError::Schema {
            path: p.to_path_buf(),
            message: "bundle paths must be relative, without '..', and not the manifest name".into(),
        })
    }
}

fn sibling(dir: &Path, suffix: &str) -> PathBuf {
    let mut name = dir.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    dir.with_file_name(name)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| IngestError::io(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| IngestError::io(path, e))
}

/// Write `files` (relative path to contents) as a bundle at `out_dir`.
///
/// The bundle is assembled in a sibling `.partial` directory and renamed
/// into place, so readers see either the old bundle or the new one.
pub fn store_results(files: &BTreeMap<String, Vec<u8>>, out_dir: &Path) -> Result<BundleManifest> {
    for p in files.keys() {
        check_relative(p)?;
    }
    let partial = sibling(out_dir, ".partial");
    if partial.exists() {
        std::fs::remove_dir_all(&partial).map_err(|e| IngestError::io(&partial, e))?;
    }
    std::fs::create_dir_all(&partial).map_err(|e| IngestError::io(&partial, e))?;

    let mut entries = Vec::with_capacity(files.len());
    for (rel, bytes) in files {
        write_file(&partial.join(rel), bytes)?;
        entries.push(BundleEntry {
            path: rel.clone(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
    }
    let manifest = BundleManifest {
        schema_version: SCHEMA_VERSION,
        files: entries,
    };
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    json.push('\n');
    write_file(&partial.join(BUNDLE_MANIFEST), json.as_bytes())?;

    let old = sibling(out_dir, ".old");
    if old.exists() {
        std::fs::remove_dir_all(&old).map_err(|e| IngestError::io(&old, e))?;
    }
    if out_dir.exists() {
        std::fs::rename(out_dir, &old).map_err(|e| IngestError::io(out_dir, e))?;
    }
    std::fs::rename(&partial, out_dir).map_err(|e| IngestError::io(out_dir, e))?;
    if old.exists() {
        std::fs::remove_dir_all(&old).map_err(|e| IngestError::io(&old, e))?;
    }
    Ok(manifest)
}

/// Read a bundle manifest and verify every listed file against its hash.
pub fn read_bundle(dir: &Path) -> Result<BundleManifest> {
    let path = dir.join(BUNDLE_MANIFEST);
    let text = crate::format::read_text(&path)?;
    let manifest: BundleManifest = serde_json::from_str(&text).map_err(|e| IngestError::Schema {
        path: path.clone(),
        message: e.to_string(),
    })?;
    if manifest.schema_version != SCHEMA_VERSION {
        return Err(IngestError::Schema {
            path,
            message: format!("unsupported schema_version {}", manifest.schema_version),
        });
    }
    for f in &manifest.files {
        check_relative(&f.path)?;
        let p = dir.join(&f.path);
        let bytes = std::fs::read(&p).map_err(|e| IngestError::io(&p, e))?;
        if sha256_hex(&bytes) != f.sha256 {
            return Err(IngestError::Schema {
                path: p,
                message: "content does not match manifest hash".into(),
            });
        }
    }
    Ok(manifest)
}
