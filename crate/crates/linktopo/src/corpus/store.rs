//! Append-only JSON Lines crawl store and the JSON seeds file.
//!
//! One `PageRecord` object per line. Appends go through a single writer so a
//! crash can lose at most the final, partially written line; `load_records`
//! tolerates exactly that case.

use std::fs::{File, OpenOptions};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{CorpusError, PageRecord, TopicSeed};

/// Incremental store writer; lines are flushed per record.
pub struct StoreWriter {
    out: BufWriter<File>,
}

impl StoreWriter {
    pub fn create(path: &Path) -> Result<Self, CorpusError> {
        Ok(StoreWriter {
            out: BufWriter::new(File::create(path)?),
        })
    }

    pub fn append_to(path: &Path) -> Result<Self, CorpusError> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(StoreWriter {
            out: BufWriter::new(file),
        })
    }

    pub fn append(&mut self, record: &PageRecord) -> Result<(), CorpusError> {
        let line = serde_json::to_string(record)
            .map_err(|e| CorpusError::MalformedCrawl(e.to_string()))?;
        self.out.write_all(line.as_bytes())?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        Ok(())
    }
}

/// Appends `records` to the store at `path`, creating it if needed.
pub fn append_records(path: &Path, records: &[PageRecord]) -> Result<(), CorpusError> {
    let mut writer = StoreWriter::append_to(path)?;
    for r in records {
        writer.append(r)?;
    }
    Ok(())
}

/// Records read back from a store, with any recovery warnings.
#[derive(Debug)]
pub struct LoadedStore {
    pub records: Vec<PageRecord>,
    pub warnings: Vec<String>,
}

/// Loads every record from a JSON Lines store, preserving order.
///
/// A malformed line is an error naming its line number, except for a final
/// line with no trailing newline: that is taken as a crash-truncated write,
/// dropped, and reported as a warning.
pub fn load_records(path: &Path) -> Result<LoadedStore, CorpusError> {
    let mut raw = String::new();
    BufReader::new(File::open(path)?).read_to_string(&mut raw)?;

    let mut records = Vec::new();
    let mut warnings = Vec::new();
    let ends_with_newline = raw.ends_with('\n');
    let lines: Vec<&str> = raw.lines().collect();
    for (i, line) in lines.iter().enumerate() {
        if line.is_empty() {
            continue;
        }
        match serde_json::from_str::<PageRecord>(line) {
            Ok(r) => records.push(r),
            Err(e) => {
                let is_final = i + 1 == lines.len();
                if is_final && !ends_with_newline {
                    warnings.push(format!(
                        "dropped truncated final line {} ({} bytes)",
                        i + 1,
                        line.len()
                    ));
                } else {
                    return Err(CorpusError::MalformedLine {
                        line: i + 1,
                        reason: e.to_string(),
                    });
                }
            }
        }
    }
    Ok(LoadedStore { records, warnings })
}

/// Streaming store reader for stores too large to hold in memory.
///
/// Same tolerance as [`load_records`]: a malformed line errors with its
/// line number unless it is a trailing, newline-less fragment, which is
/// dropped with a warning.
pub struct StoreReader {
    reader: BufReader<File>,
    line_no: usize,
    warnings: Vec<String>,
}

impl StoreReader {
    pub fn open(path: &Path) -> Result<Self, CorpusError> {
        Ok(StoreReader {
            reader: BufReader::new(File::open(path)?),
            line_no: 0,
            warnings: Vec::new(),
        })
    }

    /// Next record, or `None` at end of store.
    pub fn next_record(&mut self) -> Result<Option<PageRecord>, CorpusError> {
        use std::io::BufRead;
        loop {
            let mut line = String::new();
            let read = self.reader.read_line(&mut line)?;
            if read == 0 {
                return Ok(None);
            }
            self.line_no += 1;
            let had_newline = line.ends_with('\n');
            let trimmed = line.trim_end_matches(['\n', '\r']);
            if trimmed.is_empty() {
                continue;
            }
            match serde_json::from_str::<PageRecord>(trimmed) {
                Ok(record) => return Ok(Some(record)),
                Err(e) if !had_newline => {
                    self.warnings.push(format!(
                        "dropped truncated final line {} ({} bytes)",
                        self.line_no,
                        trimmed.len()
                    ));
                    let _ = e;
                    return Ok(None);
                }
                Err(e) => {
                    return Err(CorpusError::MalformedLine {
                        line: self.line_no,
                        reason: e.to_string(),
                    })
                }
            }
        }
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }
}

/// Loads a seeds file: a JSON array of `TopicSeed` objects.
pub fn load_seeds(path: &Path) -> Result<Vec<TopicSeed>, CorpusError> {
    let mut raw = String::new();
    BufReader::new(File::open(path)?).read_to_string(&mut raw)?;
    serde_json::from_str(&raw).map_err(|e| CorpusError::MalformedSeeds(e.to_string()))
}

pub fn write_seeds(path: &Path, seeds: &[TopicSeed]) -> Result<(), CorpusError> {
    let json =
        serde_json::to_string_pretty(seeds).map_err(|e| CorpusError::MalformedSeeds(e.to_string()))?;
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(json.as_bytes())?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{format_utc, FetchStatus};
    use std::collections::BTreeMap;

    fn sample(url: &str) -> PageRecord {
        let mut terms = BTreeMap::new();
        terms.insert("web".to_string(), 2);
        terms.insert("graph".to_string(), 1);
        PageRecord {
            url: url.into(),
            topic_id: "t0".into(),
            depth: 1,
            outlinks: vec!["http://x.edu/a".into()],
            term_counts: terms,
            fetch_status: FetchStatus::HttpError(404),
            fetched_at: format_utc(0),
        }
    }

    #[test]
    fn round_trip_preserves_records_and_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.jsonl");
        let records = vec![sample("http://a/"), sample("http://b/"), sample("http://c/")];
        append_records(&path, &records).unwrap();
        let loaded = load_records(&path).unwrap();
        assert_eq!(loaded.records, records);
        assert!(loaded.warnings.is_empty());
    }

    #[test]
    fn empty_file_loads_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.jsonl");
        std::fs::write(&path, "").unwrap();
        let loaded = load_records(&path).unwrap();
        assert!(loaded.records.is_empty());
    }

    #[test]
    fn streaming_reader_matches_bulk_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.jsonl");
        let records = vec![sample("http://a/"), sample("http://b/")];
        append_records(&path, &records).unwrap();
        let mut raw = std::fs::read_to_string(&path).unwrap();
        raw.push_str("{\"url\": \"truncated");
        std::fs::write(&path, raw).unwrap();

        let mut reader = StoreReader::open(&path).unwrap();
        let mut streamed = Vec::new();
        while let Some(record) = reader.next_record().unwrap() {
            streamed.push(record);
        }
        assert_eq!(streamed, records);
        assert_eq!(reader.warnings().len(), 1);
    }

    #[test]
    fn truncated_final_line_is_dropped_with_warning() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.jsonl");
        append_records(&path, &[sample("http://a/"), sample("http://b/")]).unwrap();
        // Simulate a crash mid-append: a partial record with no newline.
        let mut raw = std::fs::read_to_string(&path).unwrap();
        raw.push_str("{\"url\": \"http://c/\", \"top");
        std::fs::write(&path, raw).unwrap();

        let loaded = load_records(&path).unwrap();
        assert_eq!(loaded.records.len(), 2);
        assert_eq!(loaded.warnings.len(), 1);
        assert!(loaded.warnings[0].contains("line 3"));
    }

    #[test]
    fn malformed_interior_line_is_an_error_with_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.jsonl");
        let good = serde_json::to_string(&sample("http://a/")).unwrap();
        std::fs::write(&path, format!("{good}\nnot json\n{good}\n")).unwrap();
        match load_records(&path) {
            Err(CorpusError::MalformedLine { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected MalformedLine, got {other:?}"),
        }
    }

    #[test]
    fn fetch_status_wire_format() {
        let mut r = sample("http://a/");
        assert_eq!(
            serde_json::to_value(&r.fetch_status).unwrap(),
            serde_json::json!({ "http-error": 404 })
        );
        r.fetch_status = FetchStatus::Ok;
        assert_eq!(serde_json::to_value(&r.fetch_status).unwrap(), serde_json::json!("ok"));
        r.fetch_status = FetchStatus::ParseError;
        assert_eq!(
            serde_json::to_value(&r.fetch_status).unwrap(),
            serde_json::json!("parse-error")
        );
    }

    #[test]
    fn record_lines_use_exact_field_names_in_order() {
        let line = serde_json::to_string(&sample("http://a/")).unwrap();
        let fields = [
            "\"url\":",
            "\"topic_id\":",
            "\"depth\":",
            "\"outlinks\":",
            "\"term_counts\":",
            "\"fetch_status\":",
            "\"fetched_at\":",
        ];
        let positions: Vec<usize> = fields
            .iter()
            .map(|f| line.find(f).unwrap_or_else(|| panic!("missing field {f}")))
            .collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]), "field order: {line}");
    }

    #[test]
    fn seeds_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("seeds.json");
        let seeds = vec![TopicSeed {
            topic_id: "t0".into(),
            label: "society culture bibliography".into(),
            source_url: "http://dir.example/t0".into(),
            crawl_relevant_set: vec!["http://w0.example/".into()],
            full_relevant_set: vec!["http://w0.example/".into(), "http://w1.example/".into()],
        }];
        write_seeds(&path, &seeds).unwrap();
        assert_eq!(load_seeds(&path).unwrap(), seeds);
    }
}
