//! Optional JSON run-config file and the config digest embedded in outputs.
//!
//! The file holds one object per subcommand, with fields named after the
//! long flags; explicit flags override file values, which override
//! defaults.

use std::error::Error;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, Default, Deserialize)]
pub struct FileConfig {
    #[serde(default)]
    pub crawl: CrawlSection,
    #[serde(default)]
    pub analyze: AnalyzeSection,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub gen_synth: GenSynthSection,
}

#[derive(Debug, Default, Deserialize)]
pub struct CrawlSection {
    pub depth: Option<u32>,
    pub cap: Option<usize>,
    pub timeout: Option<f64>,
    pub domain: Option<String>,
    pub politeness: Option<f64>,
    pub min_seed_links: Option<usize>,
    pub max_seed_links: Option<usize>,
    pub jobs: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
pub struct AnalyzeSection {
    pub jobs: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
pub struct FitSection {
    pub sigma_inf: Option<f64>,
    pub threshold: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
pub struct SimulateSection {
    pub steps: Option<u64>,
    pub burn_in: Option<u64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
pub struct GenSynthSection {
    pub seed: Option<u64>,
}

impl FileConfig {
    pub fn load(path: Option<&PathBuf>) -> Result<Self, Box<dyn Error>> {
        match path {
            None => Ok(FileConfig::default()),
            Some(p) => {
                let raw = std::fs::read_to_string(p)
                    .map_err(|e| format!("config {}: {e}", p.display()))?;
                Ok(serde_json::from_str(&raw)
                    .map_err(|e| format!("config {}: {e}", p.display()))?)
            }
        }
    }
}

/// Digest of a resolved configuration, embedded in every analysis output
/// for provenance.
pub fn config_digest<T: Serialize>(resolved: &T) -> String {
    let canonical = serde_json::to_string(resolved).unwrap_or_default();
    format!("{:016x}", fnv1a64(canonical.as_bytes()))
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

pub fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

pub fn write_text(path: Option<&Path>, body: &str) -> Result<(), Box<dyn Error>> {
    match path {
        Some(p) => {
            std::fs::write(p, body)?;
            Ok(())
        }
        None => {
            print!("{body}");
            Ok(())
        }
    }
}
