//! CSV formatting, the run manifest, and all-or-nothing publication of an
//! output set.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use quadmech::convergence::ConvergenceReport;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

/// Float cell: 17 significant digits, negative zero printed as zero.
pub fn float(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

/// CSV text with one header row.
#[derive(Clone, Debug)]
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self {
            text,
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.columns, "CSV row width");
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputRecord {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunFlags {
    pub oracle: bool,
    pub nmech_scale: Option<f64>,
    pub workers: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub config: RunConfig,
    pub flags: RunFlags,
    pub outputs: Vec<OutputRecord>,
    pub wall_clock_seconds: f64,
    pub convergence: Option<ConvergenceReport>,
    /// Subcommand-specific diagnostics, keys sorted.
    pub checks: serde_json::Map<String, serde_json::Value>,
    pub notes: Vec<String>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn records(files: &[(String, Vec<u8>)]) -> Vec<OutputRecord> {
    files
        .iter()
        .map(|(name, bytes)| OutputRecord {
            file: name.clone(),
            bytes: bytes.len(),
            sha256: sha256_hex(bytes),
        })
        .collect()
}

fn staging_dir(out: &Path) -> PathBuf {
    let name = out
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let parent = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    parent.join(format!(".{name}.staging-{}", std::process::id()))
}

/// Writes every file into a sibling staging directory and moves them into
/// `out` only once all writes have succeeded. Files already in `out` with
/// other names are left alone.
pub fn publish(out: &Path, files: &[(String, Vec<u8>)], manifest: &RunManifest) -> io::Result<()> {
    let stage = staging_dir(out);
    let result = (|| {
        if stage.exists() {
            fs::remove_dir_all(&stage)?;
        }
        fs::create_dir_all(&stage)?;
        for (name, bytes) in files {
            fs::write(stage.join(name), bytes)?;
        }
        let json = serde_json::to_vec_pretty(manifest).map_err(io::Error::other)?;
        fs::write(stage.join(MANIFEST_NAME), json)?;
        fs::create_dir_all(out)?;
        for (name, _) in files {
            fs::rename(stage.join(name), out.join(name))?;
        }
        fs::rename(stage.join(MANIFEST_NAME), out.join(MANIFEST_NAME))?;
        fs::remove_dir(&stage)
    })();
    if result.is_err() {
        let _ = fs::remove_dir_all(&stage);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_cells_round_trip() {
        for x in [0.19711, -1.0, 1e-300, std::f64::consts::PI, 2.0029911] {
            let s = float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(float(-0.0), float(0.0));
        assert_eq!(float(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn csv_layout() {
        let mut c = Csv::new(&["n", "r"]);
        c.row(&["0".into(), float(0.0)]);
        let text = String::from_utf8(c.into_bytes()).unwrap();
        assert_eq!(text, "n,r\n0,0.0000000000000000e0\n");
    }

    #[test]
    fn digest_is_stable() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
