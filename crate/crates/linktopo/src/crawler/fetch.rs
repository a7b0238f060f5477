//! Fetcher abstraction: live HTTP and offline directory-corpus fetchers.

use std::collections::HashMap;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::corpus::{format_utc, utc_now, CorpusError, FetchStatus};

/// Cap on fetched body size; pages beyond this are truncated.
const MAX_BODY_BYTES: u64 = 2 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FetchFailure {
    Timeout,
    Http(u16),
    /// DNS, connect, or read failures that produced no HTTP status.
    Transport(String),
    /// Body could not be decoded as text.
    Undecodable(String),
}

impl FetchFailure {
    pub fn status(&self) -> FetchStatus {
        match self {
            FetchFailure::Timeout => FetchStatus::Timeout,
            FetchFailure::Http(code) => FetchStatus::HttpError(*code),
            FetchFailure::Transport(_) => FetchStatus::HttpError(0),
            FetchFailure::Undecodable(_) => FetchStatus::ParseError,
        }
    }
}

/// A page source. Implementations must never block past the given timeout.
pub trait Fetcher: Send + Sync {
    fn fetch(&self, url: &str, timeout: Duration) -> Result<String, FetchFailure>;

    /// Timestamp recorded on fetched pages. The offline fetcher pins a fixed
    /// instant so replayed crawls are byte-identical.
    fn fetched_at(&self) -> String {
        utc_now()
    }

    /// Whether the crawl should consult robots.txt before fetching.
    fn honors_robots(&self) -> bool {
        false
    }
}

/// Deterministic fetcher over a directory corpus described by a manifest
/// mapping URL to relative file path.
pub struct OfflineFetcher {
    root: PathBuf,
    manifest: HashMap<String, String>,
}

impl OfflineFetcher {
    /// Opens `root`, reading `manifest.json` inside it.
    pub fn open(root: &Path) -> Result<Self, CorpusError> {
        let raw = std::fs::read_to_string(root.join("manifest.json"))?;
        let manifest: HashMap<String, String> = serde_json::from_str(&raw)
            .map_err(|e| CorpusError::MalformedSeeds(format!("manifest.json: {e}")))?;
        Ok(OfflineFetcher {
            root: root.to_path_buf(),
            manifest,
        })
    }

    pub fn from_manifest(root: PathBuf, manifest: HashMap<String, String>) -> Self {
        OfflineFetcher { root, manifest }
    }

    pub fn contains(&self, url: &str) -> bool {
        self.manifest.contains_key(url)
    }
}

impl Fetcher for OfflineFetcher {
    fn fetch(&self, url: &str, _timeout: Duration) -> Result<String, FetchFailure> {
        let Some(rel) = self.manifest.get(url) else {
            return Err(FetchFailure::Http(404));
        };
        std::fs::read_to_string(self.root.join(rel))
            .map_err(|e| FetchFailure::Transport(e.to_string()))
    }

    fn fetched_at(&self) -> String {
        format_utc(0)
    }
}

/// Live HTTP fetcher backed by a blocking agent, with an optional on-disk
/// body cache (pointed at by the `LINKTOPO_CACHE` environment variable in
/// the CLI).
pub struct LiveFetcher {
    agent: ureq::Agent,
    cache_dir: Option<PathBuf>,
}

impl LiveFetcher {
    pub fn new(cache_dir: Option<PathBuf>) -> Self {
        LiveFetcher {
            agent: ureq::AgentBuilder::new()
                .user_agent(concat!("linktopo/", env!("CARGO_PKG_VERSION")))
                .build(),
            cache_dir,
        }
    }

    fn cache_path(&self, url: &str) -> Option<PathBuf> {
        self.cache_dir
            .as_ref()
            .map(|dir| dir.join(format!("{:016x}.body", fnv1a64(url.as_bytes()))))
    }
}

impl Fetcher for LiveFetcher {
    fn fetch(&self, url: &str, timeout: Duration) -> Result<String, FetchFailure> {
        if let Some(path) = self.cache_path(url) {
            if let Ok(body) = std::fs::read_to_string(&path) {
                return Ok(body);
            }
        }
        let response = self
            .agent
            .get(url)
            .timeout(timeout)
            .call()
            .map_err(|e| match e {
                ureq::Error::Status(code, _) => FetchFailure::Http(code),
                ureq::Error::Transport(t) => {
                    let text = t.to_string();
                    if text.contains("timed out") || text.contains("timeout") {
                        FetchFailure::Timeout
                    } else {
                        FetchFailure::Transport(text)
                    }
                }
            })?;
        let mut raw = Vec::new();
        response
            .into_reader()
            .take(MAX_BODY_BYTES)
            .read_to_end(&mut raw)
            .map_err(|e| FetchFailure::Undecodable(e.to_string()))?;
        let body = String::from_utf8_lossy(&raw).into_owned();
        if let Some(path) = self.cache_path(url) {
            if let Some(parent) = path.parent() {
                let _ = std::fs::create_dir_all(parent);
            }
            let _ = std::fs::write(&path, &body);
        }
        Ok(body)
    }

    fn honors_robots(&self) -> bool {
        true
    }
}

pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Parsed robots.txt rules for the wildcard user agent.
#[derive(Debug, Clone, Default)]
pub struct RobotsPolicy {
    disallow: Vec<String>,
}

impl RobotsPolicy {
    /// Keeps only `Disallow` prefixes under `User-agent: *` groups.
    pub fn parse(body: &str) -> Self {
        let mut disallow = Vec::new();
        let mut applies = false;
        for line in body.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            let Some((field, value)) = line.split_once(':') else {
                continue;
            };
            let value = value.trim();
            match field.trim().to_ascii_lowercase().as_str() {
                "user-agent" => applies = value == "*",
                "disallow" if applies && !value.is_empty() => {
                    disallow.push(value.to_string());
                }
                _ => {}
            }
        }
        RobotsPolicy { disallow }
    }

    pub fn allows(&self, path: &str) -> bool {
        !self.disallow.iter().any(|prefix| path.starts_with(prefix))
    }
}
