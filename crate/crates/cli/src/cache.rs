//! On-disk cache of truncated bases, one JSON file per `(domain, lambda, D)`.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;
use sha2::{Digest, Sha256};
use symdom::kernel::{TruncatedBasis, CACHE_FORMAT, CACHE_VERSION};
use symdom::{DomainSpec, ExecMode};

pub const CACHE_ENV: &str = "SYMDOM_CACHE_DIR";

/// Content hash of the cache key. The weight enters through its bit
/// pattern, so distinct floats never share an entry.
pub fn cache_key(dom: &DomainSpec, lambda: f64, d: usize) -> String {
    let key = json!({
        "format": CACHE_FORMAT,
        "version": CACHE_VERSION,
        "domain": dom,
        "lambda_bits": lambda.to_bits(),
        "D": d,
    });
    hex::encode(Sha256::digest(key.to_string().as_bytes()))
}

/// Flag, then environment, then config file. `None` disables caching.
pub fn resolve_dir(flag: Option<PathBuf>, env: Option<PathBuf>, config: Option<PathBuf>) -> Option<PathBuf> {
    flag.or(env).or(config)
}

#[derive(Clone, Debug, Default)]
pub struct BasisCache {
    dir: Option<PathBuf>,
}

impl BasisCache {
    pub fn new(dir: Option<PathBuf>) -> Self {
        BasisCache { dir }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn path_for(&self, dom: &DomainSpec, lambda: f64, d: usize) -> Option<PathBuf> {
        self.dir.as_ref().map(|dir| dir.join(format!("gram-{}.json", cache_key(dom, lambda, d))))
    }

    /// Loads the basis from the cache, or builds it and stores it. Unreadable
    /// or mismatched entries are rebuilt; write failures only warn.
    pub fn basis(&self, dom: &DomainSpec, lambda: f64, d: usize, mode: ExecMode) -> symdom::Result<TruncatedBasis> {
        let Some(path) = self.path_for(dom, lambda, d) else {
            return TruncatedBasis::new_with(dom, lambda, d, mode);
        };
        if path.exists() {
            match TruncatedBasis::load(&path, dom, lambda, d) {
                Ok(b) => return Ok(b),
                Err(e) => eprintln!("warning: ignoring cache entry {}: {e}", path.display()),
            }
        }
        let basis = TruncatedBasis::new_with(dom, lambda, d, mode)?;
        if let Err(e) = store(&path, &basis) {
            eprintln!("warning: could not write cache entry {}: {e}", path.display());
        }
        Ok(basis)
    }
}

fn store(path: &Path, basis: &TruncatedBasis) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let body = basis.to_cache_json().map_err(std::io::Error::other)?;
    let tmp = path.with_extension(format!("json.{}.tmp", std::process::id()));
    fs::write(&tmp, body)?;
    fs::rename(&tmp, path)
}
