//! Domain data model and persistence for crawl results and topic seeds.

mod store;

pub use store::{
    append_records, load_records, load_seeds, write_seeds, LoadedStore, StoreReader, StoreWriter,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("rejected link {raw:?}: {reason}")]
    RejectedLink { raw: String, reason: String },
    #[error("malformed crawl: {0}")]
    MalformedCrawl(String),
    #[error("store line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("seeds file: {0}")]
    MalformedSeeds(String),
}

/// Outcome of fetching one page.
///
/// `HttpError(0)` is used for transport-level failures (DNS, refused
/// connection) that never produced an HTTP status.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FetchStatus {
    Ok,
    Timeout,
    HttpError(u16),
    ParseError,
}

impl FetchStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, FetchStatus::Ok)
    }
}

/// One fetched page: its place in the crawl and its extracted content.
///
/// `depth` is the link distance from the topic source page (0 for the source
/// itself). `term_counts` maps stemmed terms to their occurrence counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageRecord {
    pub url: String,
    pub topic_id: String,
    pub depth: u32,
    pub outlinks: Vec<String>,
    pub term_counts: BTreeMap<String, u64>,
    pub fetch_status: FetchStatus,
    pub fetched_at: String,
}

impl PageRecord {
    /// Builds a record, dropping outlink duplicates and self-links.
    pub fn new(
        url: String,
        topic_id: String,
        depth: u32,
        outlinks: Vec<String>,
        term_counts: BTreeMap<String, u64>,
        fetch_status: FetchStatus,
        fetched_at: String,
    ) -> Self {
        let mut seen = std::collections::HashSet::new();
        let outlinks = outlinks
            .into_iter()
            .filter(|l| *l != url && seen.insert(l.clone()))
            .collect();
        PageRecord {
            url,
            topic_id,
            depth,
            outlinks,
            term_counts,
            fetch_status,
            fetched_at,
        }
    }
}

/// A topic source page together with its editor-compiled relevant URLs.
///
/// `crawl_relevant_set` holds the external links actually used as the
/// depth-1 frontier (at most the first ten, in document order);
/// `full_relevant_set` holds every editor-listed relevant URL and is a
/// superset of the crawl set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSeed {
    pub topic_id: String,
    pub label: String,
    pub source_url: String,
    pub crawl_relevant_set: Vec<String>,
    pub full_relevant_set: Vec<String>,
}

/// Cumulative page sets of one topic crawl.
///
/// `cumulative_counts[i]` is the number of successfully fetched pages within
/// distance `i` of the source; `doc_freq[i]` maps each term to the number of
/// those pages containing it. Failed fetches stay in `pages` for audit but
/// are excluded from every count.
#[derive(Debug, Clone)]
pub struct CrawlSet {
    topic_id: String,
    max_depth: u32,
    pages: BTreeMap<String, PageRecord>,
    cumulative_counts: Vec<u64>,
    doc_freq: Vec<BTreeMap<String, u64>>,
}

impl CrawlSet {
    pub fn topic_id(&self) -> &str {
        &self.topic_id
    }

    pub fn max_depth(&self) -> u32 {
        self.max_depth
    }

    /// N_d: size of the cumulative ok-page set at depth `d`.
    pub fn n_pages(&self, d: u32) -> u64 {
        self.cumulative_counts[d as usize]
    }

    /// N_d(k): number of ok pages within depth `d` containing `term`.
    pub fn doc_freq(&self, term: &str, d: u32) -> Option<u64> {
        self.doc_freq[d as usize].get(term).copied()
    }

    pub fn terms_at(&self, d: u32) -> &BTreeMap<String, u64> {
        &self.doc_freq[d as usize]
    }

    /// The depth-0 record.
    pub fn source(&self) -> &PageRecord {
        self.pages
            .values()
            .find(|p| p.depth == 0)
            .expect("crawl set always holds one depth-0 record")
    }

    pub fn page(&self, url: &str) -> Option<&PageRecord> {
        self.pages.get(url)
    }

    /// All records, failed fetches included, keyed by URL.
    pub fn pages(&self) -> impl Iterator<Item = &PageRecord> {
        self.pages.values()
    }

    /// Successfully fetched pages within distance `d`, in URL order.
    pub fn ok_pages_upto(&self, d: u32) -> impl Iterator<Item = &PageRecord> {
        self.pages
            .values()
            .filter(move |p| p.fetch_status.is_ok() && p.depth <= d)
    }

    pub fn contains_ok(&self, url: &str, d: u32) -> bool {
        self.pages
            .get(url)
            .map(|p| p.fetch_status.is_ok() && p.depth <= d)
            .unwrap_or(false)
    }
}

/// Builds the cumulative page sets and per-depth document frequencies for one
/// topic's records.
///
/// Records must share a topic id and contain exactly one depth-0 page, which
/// must have been fetched successfully; depths must not exceed `max_depth`.
pub fn build_crawl_set(records: Vec<PageRecord>, max_depth: u32) -> Result<CrawlSet, CorpusError> {
    let sources: Vec<&PageRecord> = records.iter().filter(|r| r.depth == 0).collect();
    match sources.len() {
        0 => return Err(CorpusError::MalformedCrawl("no depth-0 record".into())),
        1 => {}
        n => {
            return Err(CorpusError::MalformedCrawl(format!(
                "{n} depth-0 records, expected exactly 1"
            )))
        }
    }
    if !sources[0].fetch_status.is_ok() {
        return Err(CorpusError::MalformedCrawl(
            "depth-0 record has a failed fetch status".into(),
        ));
    }
    let topic_id = sources[0].topic_id.clone();
    if let Some(r) = records.iter().find(|r| r.topic_id != topic_id) {
        return Err(CorpusError::MalformedCrawl(format!(
            "mixed topic ids: {} and {}",
            topic_id, r.topic_id
        )));
    }
    if let Some(r) = records.iter().find(|r| r.depth > max_depth) {
        return Err(CorpusError::MalformedCrawl(format!(
            "record {} at depth {} exceeds max depth {}",
            r.url, r.depth, max_depth
        )));
    }

    let mut pages = BTreeMap::new();
    for r in records {
        if pages.insert(r.url.clone(), r).is_some() {
            let url = pages.keys().last().cloned().unwrap_or_default();
            return Err(CorpusError::MalformedCrawl(format!(
                "duplicate record for url {url}"
            )));
        }
    }

    let depths = max_depth as usize + 1;
    let mut per_depth_counts = vec![0u64; depths];
    let mut doc_freq: Vec<BTreeMap<String, u64>> = vec![BTreeMap::new(); depths];
    for page in pages.values().filter(|p| p.fetch_status.is_ok()) {
        per_depth_counts[page.depth as usize] += 1;
        let df = &mut doc_freq[page.depth as usize];
        for term in page.term_counts.keys() {
            *df.entry(term.clone()).or_insert(0) += 1;
        }
    }
    // Fold per-depth tallies into cumulative ones.
    let mut cumulative_counts = vec![0u64; depths];
    let mut running = 0;
    for d in 0..depths {
        running += per_depth_counts[d];
        cumulative_counts[d] = running;
        if d > 0 {
            let (lower, upper) = doc_freq.split_at_mut(d);
            let prev = &lower[d - 1];
            let cur = &mut upper[0];
            for (term, n) in prev {
                *cur.entry(term.clone()).or_insert(0) += n;
            }
        }
    }

    Ok(CrawlSet {
        topic_id,
        max_depth,
        pages,
        cumulative_counts,
        doc_freq,
    })
}

/// Resolves `raw` against `base` (when given) and canonicalizes the result:
/// scheme and host lowercased, fragment removed, default port removed, and
/// `.`/`..` path segments resolved. The trailing slash is preserved as given.
///
/// A raw string whose first path segment contains `:` without a valid scheme
/// prefix is rejected rather than silently treated as a relative path.
pub fn normalize_url(raw: &str, base: Option<&Url>) -> Result<String, CorpusError> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Err(CorpusError::RejectedLink {
            raw: raw.into(),
            reason: "empty".into(),
        });
    }
    let reject = |reason: String| CorpusError::RejectedLink {
        raw: raw.into(),
        reason,
    };

    let mut parsed = if has_scheme(raw) {
        Url::parse(raw).map_err(|e| reject(e.to_string()))?
    } else {
        // A ':' before any '/', '?' or '#' would be mistaken for a scheme
        // delimiter; such references are not valid relative URLs.
        let head = raw.split(['/', '?', '#']).next().unwrap_or("");
        if head.contains(':') {
            return Err(reject("colon in first path segment without a scheme".into()));
        }
        match base {
            Some(b) => b.join(raw).map_err(|e| reject(e.to_string()))?,
            None => return Err(reject("relative URL without a base".into())),
        }
    };
    parsed.set_fragment(None);
    Ok(parsed.to_string())
}

fn has_scheme(raw: &str) -> bool {
    match raw.split_once(':') {
        Some((scheme, _)) => {
            let mut chars = scheme.chars();
            matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
                && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
        }
        None => false,
    }
}

/// Host portion of a normalized URL string, if any.
pub fn host_of(url: &str) -> Option<String> {
    Url::parse(url).ok()?.host_str().map(str::to_owned)
}

/// Last dot-separated label of the host, e.g. `edu` for `www.x.edu`.
pub fn tld_of(url: &str) -> Option<String> {
    let host = host_of(url)?;
    Some(host.rsplit('.').next().unwrap_or(&host).to_owned())
}

/// Seconds-resolution ISO-8601 UTC timestamp for the current time.
pub fn utc_now() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format_utc(secs)
}

/// Formats seconds since the Unix epoch as `YYYY-MM-DDTHH:MM:SSZ`.
pub fn format_utc(secs: u64) -> String {
    let days = secs / 86_400;
    let rem = secs % 86_400;
    let (h, m, s) = (rem / 3600, (rem % 3600) / 60, rem % 60);
    // Civil-from-days conversion on a calendar shifted to start 0000-03-01,
    // which puts the leap day last.
    let z = days as i64 + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z.rem_euclid(146_097);
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let year = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let day = doy - (153 * mp + 2) / 5 + 1;
    let month = if mp < 10 { mp + 3 } else { mp - 9 };
    let year = if month <= 2 { year + 1 } else { year };
    format!("{year:04}-{month:02}-{day:02}T{h:02}:{m:02}:{s:02}Z")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(url: &str, depth: u32, terms: &[(&str, u64)], ok: bool) -> PageRecord {
        PageRecord {
            url: url.into(),
            topic_id: "t0".into(),
            depth,
            outlinks: vec![],
            term_counts: terms.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            fetch_status: if ok { FetchStatus::Ok } else { FetchStatus::Timeout },
            fetched_at: format_utc(0),
        }
    }

    #[test]
    fn normalize_resolves_relative_paths() {
        let base = Url::parse("http://X.edu/b/c.html").unwrap();
        assert_eq!(
            normalize_url("../a.html", Some(&base)).unwrap(),
            "http://x.edu/a.html"
        );
    }

    #[test]
    fn normalize_canonicalizes_absolute_urls() {
        assert_eq!(
            normalize_url("HTTP://X.edu:80/p#frag", None).unwrap(),
            "http://x.edu/p"
        );
    }

    #[test]
    fn normalize_rejects_garbage_scheme_with_any_base() {
        let base = Url::parse("http://x.edu/").unwrap();
        assert!(matches!(
            normalize_url("ht!tp:::bad", Some(&base)),
            Err(CorpusError::RejectedLink { .. })
        ));
        assert!(normalize_url("ht!tp:::bad", None).is_err());
    }

    #[test]
    fn normalize_preserves_trailing_slash() {
        let base = Url::parse("http://x.edu/a/b.html").unwrap();
        assert_eq!(
            normalize_url("sub/", Some(&base)).unwrap(),
            "http://x.edu/a/sub/"
        );
    }

    #[test]
    fn normalize_is_idempotent_on_examples() {
        for raw in [
            "HTTP://X.edu:80/p#frag",
            "https://a.ORG/x/../y/?q=1",
            "http://h.com/a/./b/",
        ] {
            let once = normalize_url(raw, None).unwrap();
            let twice = normalize_url(&once, None).unwrap();
            assert_eq!(once, twice);
        }
    }

    #[test]
    fn crawl_set_counts_match_fig1_example() {
        let mut records = vec![rec("http://s/", 0, &[("web", 1)], true)];
        for i in 0..5 {
            records.push(rec(&format!("http://a{i}/"), 1, &[("web", 1)], true));
        }
        for i in 0..10 {
            records.push(rec(&format!("http://b{i}/"), 2, &[("web", 2)], true));
        }
        let set = build_crawl_set(records, 2).unwrap();
        assert_eq!(
            (0..=2).map(|d| set.n_pages(d)).collect::<Vec<_>>(),
            vec![1, 6, 16]
        );
        // "web" occurs in every page of the cumulative set.
        assert_eq!(set.doc_freq("web", 2), Some(16));
        assert_eq!(set.doc_freq("web", 1), Some(6));
    }

    #[test]
    fn crawl_set_source_only() {
        let set = build_crawl_set(vec![rec("http://s/", 0, &[("web", 1)], true)], 0).unwrap();
        assert_eq!(set.n_pages(0), 1);
        assert_eq!(set.doc_freq("web", 0), Some(1));
    }

    #[test]
    fn crawl_set_rejects_zero_or_multiple_sources() {
        assert!(build_crawl_set(vec![rec("http://a/", 1, &[], true)], 1).is_err());
        let two = vec![
            rec("http://s/", 0, &[], true),
            rec("http://t/", 0, &[], true),
        ];
        assert!(build_crawl_set(two, 1).is_err());
    }

    #[test]
    fn failed_fetches_are_kept_but_not_counted() {
        let records = vec![
            rec("http://s/", 0, &[("web", 1)], true),
            rec("http://dead/", 1, &[("web", 9)], false),
            rec("http://live/", 1, &[("web", 1)], true),
        ];
        let set = build_crawl_set(records, 1).unwrap();
        assert_eq!(set.n_pages(1), 2);
        assert_eq!(set.doc_freq("web", 1), Some(2));
        assert!(set.page("http://dead/").is_some());
        assert!(!set.contains_ok("http://dead/", 1));
    }

    #[test]
    fn page_record_new_drops_duplicate_and_self_links() {
        let r = PageRecord::new(
            "http://s/".into(),
            "t0".into(),
            0,
            vec!["http://a/".into(), "http://s/".into(), "http://a/".into()],
            BTreeMap::new(),
            FetchStatus::Ok,
            format_utc(0),
        );
        assert_eq!(r.outlinks, vec!["http://a/".to_string()]);
    }

    #[test]
    fn utc_formatting_known_values() {
        assert_eq!(format_utc(0), "1970-01-01T00:00:00Z");
        assert_eq!(format_utc(951_782_400), "2000-02-29T00:00:00Z");
        assert_eq!(format_utc(1_000_000_000), "2001-09-09T01:46:40Z");
    }
}
