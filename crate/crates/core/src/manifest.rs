//! Run manifests: enough metadata to reproduce a run bit-exactly on the
//! same tool version, plus atomic file-write helpers.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HostFingerprint {
    pub hostname: String,
    pub os: String,
    pub arch: String,
}

impl HostFingerprint {
    pub fn current() -> Self {
        let hostname = std::env::var("HOSTNAME")
            .ok()
            .or_else(|| {
                std::fs::read_to_string("/etc/hostname")
                    .ok()
                    .map(|s| s.trim().to_string())
            })
            .unwrap_or_else(|| "unknown".to_string());
        Self {
            hostname,
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
        }
    }
}

/// Snapshot written next to every command's outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    /// Full resolved config document (TOML text).
    pub config: String,
    pub config_digest: String,
    pub root_seed: u64,
    pub input_files: Vec<PathBuf>,
    pub output_files: Vec<PathBuf>,
    pub wall_time_seconds: f64,
    pub host: HostFingerprint,
}

impl RunManifest {
    pub fn new(command: &str, config: String, root_seed: u64) -> Self {
        let config_digest = digest_hex(config.as_bytes());
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config,
            config_digest,
            root_seed,
            input_files: Vec::new(),
            output_files: Vec::new(),
            wall_time_seconds: 0.0,
            host: HostFingerprint::current(),
        }
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let json = serde_json::to_vec_pretty(self).expect("manifest serializes");
        write_atomic(path.as_ref(), &json)
    }
}

/// SHA-256 hex digest, used to fingerprint configs in manifests and
/// sweep results.
pub fn digest_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    h.update(bytes);
    let out = h.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

/// Write via a temp file in the same directory followed by a rename, so
/// readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp-{}",
            path.file_name().map(|f| f.to_string_lossy()).unwrap_or_default(),
            std::process::id()
        )),
        None => PathBuf::from(format!(".{}.tmp-{}", path.display(), std::process::id())),
    };
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}
