//! Session discovery and loading.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use keyseg_core::session::{parse_annotations, parse_session_with, ColumnMap, SessionLog, StateAnnotation};
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use crate::CliError;

pub const SESSION_SUFFIX: &str = ".session.tsv";
pub const ANNOTATION_SUFFIX: &str = ".hof.tsv";

pub struct Loaded {
    pub path: PathBuf,
    pub digest: String,
    pub session: SessionLog,
}

/// Session files under `paths`, sorted. Directories are searched
/// recursively for `*.session.tsv`; files are taken as given.
pub fn discover(paths: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut found = Vec::new();
    for p in paths {
        if p.is_dir() {
            for entry in WalkDir::new(p).sort_by_file_name() {
                let entry = entry.map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
                let name = entry.file_name().to_string_lossy();
                if entry.file_type().is_file() && name.ends_with(SESSION_SUFFIX) {
                    found.push(entry.into_path());
                }
            }
        } else if p.is_file() {
            found.push(p.clone());
        } else {
            return Err(CliError::Data(format!("{}: no such file or directory", p.display())));
        }
    }
    found.sort();
    found.dedup();
    if found.is_empty() {
        return Err(CliError::Usage("no sessions".into()));
    }
    Ok(found)
}

pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn load_one(path: &Path, map: &ColumnMap) -> Result<Loaded> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let session = parse_session_with(bytes.as_slice(), map).with_context(|| format!("{}", path.display()))?;
    Ok(Loaded { path: path.to_path_buf(), digest: hex::encode(Sha256::digest(&bytes)), session })
}

/// Parses every file in parallel; results keep the order of `paths`.
pub fn load_all(paths: &[PathBuf], map: &ColumnMap) -> Vec<Result<Loaded>> {
    paths.par_iter().map(|p| load_one(p, map)).collect()
}

/// Loads all sessions, failing on the first unreadable one.
pub fn load_corpus(paths: &[PathBuf], map: &ColumnMap) -> Result<Vec<Loaded>, CliError> {
    let files = discover(paths)?;
    let loaded = load_all(&files, map).into_iter().collect::<Result<Vec<_>>>().map_err(|e| CliError::Data(format!("{e:#}")))?;
    let mut seen = BTreeMap::new();
    for l in &loaded {
        if let Some(prev) = seen.insert(l.session.meta.session_id.clone(), &l.path) {
            return Err(CliError::Data(format!(
                "session id `{}` appears in both {} and {}",
                l.session.meta.session_id,
                prev.display(),
                l.path.display()
            )));
        }
    }
    Ok(loaded)
}

/// Annotation files under `dirs`, keyed by session id (`<id>.hof.tsv`).
pub fn annotation_index(dirs: &[PathBuf]) -> BTreeMap<String, PathBuf> {
    let mut out = BTreeMap::new();
    for d in dirs {
        for e in WalkDir::new(d).sort_by_file_name().into_iter().filter_map(|e| e.ok()) {
            let name = e.file_name().to_string_lossy();
            if let Some(id) = name.strip_suffix(ANNOTATION_SUFFIX) {
                if e.file_type().is_file() {
                    out.entry(id.to_string()).or_insert_with(|| e.path().to_path_buf());
                }
            }
        }
    }
    out
}

pub fn load_annotations(path: &Path) -> Result<Vec<StateAnnotation>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    parse_annotations(BufReader::new(f)).with_context(|| format!("{}", path.display()))
}
