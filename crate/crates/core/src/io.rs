//! CSV and JSON artefacts with embedded provenance.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::empirics::{EmpiricalDensity, Histogram1D};
use crate::error::{ChiarellaError, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance stamped on every output file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub generator: String,
}

impl Provenance {
    pub fn new(config_bytes: &[u8], seed: u64, generator: &str) -> Self {
        Self {
            tool: "chiarella".into(),
            version: TOOL_VERSION.into(),
            config_hash: config_hash(config_bytes),
            seed,
            generator: generator.into(),
        }
    }

    /// CSV comment line; readers that skip `#` lines ignore it.
    pub fn csv_comment(&self) -> String {
        format!(
            "# tool={} version={} config_sha256={} seed={} generator={}",
            self.tool, self.version, self.config_hash, self.seed, self.generator
        )
    }
}

/// Hex SHA-256 of the canonical config bytes.
pub fn config_hash(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> ChiarellaError + '_ {
    move |e| ChiarellaError::InvalidSpec(format!("cannot write {}: {e}", path.display()))
}

/// `bin_center,count,density` rows, preceded by a provenance comment.
pub fn histogram_csv(h: &Histogram1D, prov: &Provenance) -> String {
    let mut s = String::new();
    s.push_str(&prov.csv_comment());
    s.push('\n');
    s.push_str("bin_center,count,density\n");
    for ((c, n), d) in h.centers().iter().zip(&h.counts).zip(h.density()) {
        s.push_str(&format!("{c},{n},{d}\n"));
    }
    s
}

/// `x,p` rows of a grid density.
pub fn grid_csv(rows: &[(f64, f64)], prov: &Provenance) -> String {
    let mut s = String::new();
    s.push_str(&prov.csv_comment());
    s.push('\n');
    s.push_str("x,p\n");
    for (x, p) in rows {
        s.push_str(&format!("{x},{p}\n"));
    }
    s
}

pub fn empirical_csv(d: &EmpiricalDensity, prov: &Provenance) -> String {
    let rows: Vec<(f64, f64)> = d.grid.iter().copied().zip(d.values.iter().copied()).collect();
    grid_csv(&rows, prov)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(path))?;
    }
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| ChiarellaError::InvalidSpec(format!("serialisation failed: {e}")))?;
    text.push('\n');
    write_text(path, &text)
}
