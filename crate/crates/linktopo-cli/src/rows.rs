//! The analyze CSV contract: one row per (topic, depth) with columns
//! `topic_id,d,n_pages,delta,sigma,R,G,lambda`, preceded by `#` comment
//! lines carrying the tool version, config digest, and noise-level
//! metadata. The depth-0 row reports the definitional values sigma = 1,
//! R = 1, lambda = 1/G.

use std::error::Error;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricRow {
    pub topic_id: String,
    pub d: u32,
    pub n_pages: u64,
    pub delta: f64,
    pub sigma: f64,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "G")]
    pub g: f64,
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct CsvMetadata {
    pub sigma_inf: Option<f64>,
    pub sigma_inf_stderr: Option<f64>,
    pub pairs: Option<usize>,
}

pub fn write_rows(
    path: &Path,
    rows: &[MetricRow],
    header_comments: &[String],
) -> Result<(), Box<dyn Error>> {
    let mut buffer = Vec::new();
    for line in header_comments {
        buffer.extend_from_slice(format!("# {line}\n").as_bytes());
    }
    let mut writer = csv::Writer::from_writer(buffer);
    for row in rows {
        writer.serialize(row)?;
    }
    let buffer = writer.into_inner()?;
    std::fs::write(path, buffer)?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<(Vec<MetricRow>, CsvMetadata), Box<dyn Error>> {
    let raw = std::fs::read_to_string(path)?;
    let mut metadata = CsvMetadata::default();
    for line in raw.lines().take_while(|l| l.starts_with('#')) {
        for token in line.trim_start_matches('#').split_whitespace() {
            if let Some((key, value)) = token.split_once('=') {
                match key {
                    "sigma_inf" => metadata.sigma_inf = value.parse().ok(),
                    "sigma_inf_stderr" => metadata.sigma_inf_stderr = value.parse().ok(),
                    "pairs" => metadata.pairs = value.parse().ok(),
                    _ => {}
                }
            }
        }
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(raw.as_bytes());
    let mut rows = Vec::new();
    for row in reader.deserialize() {
        rows.push(row?);
    }
    Ok((rows, metadata))
}
