//! Layer-synchronous breadth-first neighborhood crawler.
//!
//! Depth i+1 fetching begins only after depth i completes, which makes the
//! depth-cap halt condition and the per-depth document-frequency sets
//! well-defined and reproducible. Records are assembled in discovery order
//! regardless of fetch completion order, so a crawl's output is independent
//! of the number of concurrent fetches.

mod fetch;

pub use fetch::{FetchFailure, Fetcher, LiveFetcher, OfflineFetcher, RobotsPolicy};

#[cfg(test)]
pub(crate) use fetch::fnv1a64;

use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use thiserror::Error;
use url::Url;

use crate::corpus::{host_of, normalize_url, tld_of, CorpusError, PageRecord, TopicSeed};
use crate::lexparse::{extract_links, page_terms, StopList};

#[derive(Debug, Error)]
pub enum CrawlError {
    #[error("invalid crawl config: {0}")]
    InvalidConfig(String),
    #[error("seed {topic_id} rejected: too few external links ({found} < {required})")]
    SeedRejected {
        topic_id: String,
        found: usize,
        required: usize,
    },
    #[error("source page for {topic_id} unreachable ({url}): {reason}")]
    SourceUnreachable {
        topic_id: String,
        url: String,
        reason: String,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Crawl protocol parameters. Defaults follow the measurement protocol:
/// breadth-first to depth 3, halting once 10,000 pages have been downloaded
/// at the maximum depth, a 60-second per-page timeout, and seeds kept only
/// when they carry at least 5 external links (of which the first 10 are
/// used).
#[derive(Debug, Clone)]
pub struct CrawlConfig {
    pub max_depth: u32,
    pub max_pages_at_max_depth: usize,
    pub per_page_timeout: Duration,
    pub min_seed_links: usize,
    pub max_seed_links: usize,
    /// Restrict the crawl to hosts whose top-level domain matches.
    pub domain_filter: Option<String>,
    /// Minimum spacing between fetches against one host.
    pub politeness_delay: Duration,
    pub max_concurrent_fetches: usize,
}

impl Default for CrawlConfig {
    fn default() -> Self {
        CrawlConfig {
            max_depth: 3,
            max_pages_at_max_depth: 10_000,
            per_page_timeout: Duration::from_secs(60),
            min_seed_links: 5,
            max_seed_links: 10,
            domain_filter: None,
            politeness_delay: Duration::ZERO,
            max_concurrent_fetches: 8,
        }
    }
}

impl CrawlConfig {
    pub fn validate(&self) -> Result<(), CrawlError> {
        let mut problems = Vec::new();
        if self.max_depth < 1 {
            problems.push("max_depth must be at least 1".to_string());
        }
        if self.max_pages_at_max_depth < 1 {
            problems.push("max_pages_at_max_depth must be at least 1".to_string());
        }
        if self.min_seed_links < 1 || self.min_seed_links > self.max_seed_links {
            problems.push("seed link bounds must satisfy 1 <= min <= max".to_string());
        }
        if self.per_page_timeout.is_zero() {
            problems.push("per_page_timeout must be positive".to_string());
        }
        if self.max_concurrent_fetches < 1 {
            problems.push("max_concurrent_fetches must be at least 1".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CrawlError::InvalidConfig(problems.join("; ")))
        }
    }
}

/// A finished crawl: the validated seed, every record in discovery order,
/// and URLs skipped because of robots.txt rules.
#[derive(Debug)]
pub struct CrawlOutcome {
    pub seed: TopicSeed,
    pub records: Vec<PageRecord>,
    pub robots_skipped: Vec<String>,
}

/// Applies the seed acceptance protocol to a source page's links, already in
/// document order: links whose host differs from the source host (and, under
/// a domain filter, whose top-level domain matches) are external; a seed
/// needs at least `min_seed_links` of them, and the first `max_seed_links`
/// become the crawl relevant set. The full relevant set keeps any
/// pre-existing editor entries and is always a superset of the crawl set.
pub fn validate_seed(
    seed: &TopicSeed,
    source_links: &[String],
    config: &CrawlConfig,
) -> Result<TopicSeed, CrawlError> {
    let source_host = host_of(&seed.source_url);
    let external: Vec<&String> = source_links
        .iter()
        .filter(|link| {
            let host = host_of(link);
            host.is_some() && host != source_host && in_domain(link, config.domain_filter.as_deref())
        })
        .collect();
    if external.len() < config.min_seed_links {
        return Err(CrawlError::SeedRejected {
            topic_id: seed.topic_id.clone(),
            found: external.len(),
            required: config.min_seed_links,
        });
    }
    let crawl_relevant_set: Vec<String> = external
        .iter()
        .take(config.max_seed_links)
        .map(|s| s.to_string())
        .collect();
    let mut full_relevant_set = if seed.full_relevant_set.is_empty() {
        external.iter().map(|s| s.to_string()).collect()
    } else {
        seed.full_relevant_set.clone()
    };
    for url in &crawl_relevant_set {
        if !full_relevant_set.contains(url) {
            full_relevant_set.push(url.clone());
        }
    }
    Ok(TopicSeed {
        topic_id: seed.topic_id.clone(),
        label: seed.label.clone(),
        source_url: seed.source_url.clone(),
        crawl_relevant_set,
        full_relevant_set,
    })
}

fn in_domain(url: &str, domain: Option<&str>) -> bool {
    match domain {
        None => true,
        Some(d) => tld_of(url).as_deref() == Some(d),
    }
}

/// Breadth-first crawl from a topic seed.
///
/// The depth-1 frontier is exactly the validated crawl relevant set; every
/// URL is fetched at most once and recorded at its shortest link distance
/// from the source. Fetch failures are recorded per page and never abort
/// the crawl; only an unreachable source page does. At the maximum depth the
/// crawl halts once `max_pages_at_max_depth` pages have been downloaded:
/// the stored set is the shortest discovery-order prefix of the final layer
/// containing exactly that many successful fetches.
pub fn bfs_crawl(
    seed: &TopicSeed,
    config: &CrawlConfig,
    fetcher: &dyn Fetcher,
) -> Result<CrawlOutcome, CrawlError> {
    config.validate()?;
    let stop = StopList::default();
    bfs_crawl_with(seed, config, fetcher, &stop)
}

/// As [`bfs_crawl`], with a caller-supplied stop list.
pub fn bfs_crawl_with(
    seed: &TopicSeed,
    config: &CrawlConfig,
    fetcher: &dyn Fetcher,
    stop: &StopList,
) -> Result<CrawlOutcome, CrawlError> {
    config.validate()?;
    let source_url = normalize_url(&seed.source_url, None)?;
    let source_base = Url::parse(&source_url)
        .map_err(|e| CorpusError::RejectedLink { raw: source_url.clone(), reason: e.to_string() })?;
    let source_host = host_of(&source_url);

    let source_body = fetcher
        .fetch(&source_url, config.per_page_timeout)
        .map_err(|failure| CrawlError::SourceUnreachable {
            topic_id: seed.topic_id.clone(),
            url: source_url.clone(),
            reason: format!("{failure:?}"),
        })?;
    let source_links = extract_links(&source_body, &source_base);
    let validated = validate_seed(seed, &source_links, config)?;

    let mut records = Vec::new();
    let mut robots_skipped = Vec::new();
    let mut visited: HashSet<String> = HashSet::new();
    visited.insert(source_url.clone());
    records.push(PageRecord::new(
        source_url.clone(),
        seed.topic_id.clone(),
        0,
        source_links.clone(),
        page_terms(&source_body, stop),
        crate::corpus::FetchStatus::Ok,
        fetcher.fetched_at(),
    ));

    let gate = PolitenessGate::new(config.politeness_delay);
    let robots = fetcher.honors_robots().then(RobotsCache::default);

    let mut frontier: Vec<String> = validated.crawl_relevant_set.clone();
    visited.extend(frontier.iter().cloned());

    for depth in 1..=config.max_depth {
        if frontier.is_empty() {
            break;
        }
        let at_max_depth = depth == config.max_depth;
        let mut next_frontier: Vec<String> = Vec::new();
        let mut downloads_at_depth = 0usize;
        // Chunked layer fetch: at the maximum depth, stop issuing chunks once
        // the cap is met. Chunk boundaries never change the stored set.
        let chunk_size = if at_max_depth {
            (config.max_concurrent_fetches * 8).max(64)
        } else {
            frontier.len()
        };
        'layer: for chunk in frontier.chunks(chunk_size.max(1)) {
            let outcomes = fetch_layer(chunk, fetcher, config, &gate, robots.as_ref());
            for (url, outcome) in chunk.iter().zip(outcomes) {
                match outcome {
                    LayerOutcome::RobotsSkipped => {
                        robots_skipped.push(url.clone());
                    }
                    LayerOutcome::Fetched(Err(failure)) => {
                        records.push(PageRecord::new(
                            url.clone(),
                            seed.topic_id.clone(),
                            depth,
                            Vec::new(),
                            Default::default(),
                            failure.status(),
                            fetcher.fetched_at(),
                        ));
                    }
                    LayerOutcome::Fetched(Ok(body)) => {
                        let base = match Url::parse(url) {
                            Ok(b) => b,
                            Err(_) => continue,
                        };
                        let links = extract_links(&body, &base);
                        if !at_max_depth {
                            for link in &links {
                                let host = host_of(link);
                                // The source (directory) host never re-enters
                                // a frontier.
                                if host.is_none() || host == source_host {
                                    continue;
                                }
                                if !in_domain(link, config.domain_filter.as_deref()) {
                                    continue;
                                }
                                if visited.insert(link.clone()) {
                                    next_frontier.push(link.clone());
                                }
                            }
                        }
                        records.push(PageRecord::new(
                            url.clone(),
                            seed.topic_id.clone(),
                            depth,
                            links,
                            page_terms(&body, stop),
                            crate::corpus::FetchStatus::Ok,
                            fetcher.fetched_at(),
                        ));
                        downloads_at_depth += 1;
                        if at_max_depth && downloads_at_depth >= config.max_pages_at_max_depth {
                            break 'layer;
                        }
                    }
                }
            }
        }
        frontier = next_frontier;
    }

    Ok(CrawlOutcome {
        seed: validated,
        records,
        robots_skipped,
    })
}

/// [`bfs_crawl`] restricted to one top-level domain: out-of-domain links are
/// never enqueued and seed validation counts only in-domain external links.
pub fn domain_crawl(
    seed: &TopicSeed,
    domain: &str,
    config: &CrawlConfig,
    fetcher: &dyn Fetcher,
) -> Result<CrawlOutcome, CrawlError> {
    let mut config = config.clone();
    config.domain_filter = Some(domain.to_ascii_lowercase());
    bfs_crawl(seed, &config, fetcher)
}

enum LayerOutcome {
    Fetched(Result<String, FetchFailure>),
    RobotsSkipped,
}

/// Fetches one layer chunk with up to `max_concurrent_fetches` workers,
/// returning outcomes in input order.
fn fetch_layer(
    urls: &[String],
    fetcher: &dyn Fetcher,
    config: &CrawlConfig,
    gate: &PolitenessGate,
    robots: Option<&RobotsCache>,
) -> Vec<LayerOutcome> {
    let fetch_one = |url: &String| -> LayerOutcome {
        if let Some(cache) = robots {
            if !cache.allows(url, fetcher, config.per_page_timeout) {
                return LayerOutcome::RobotsSkipped;
            }
        }
        if let Some(host) = host_of(url) {
            gate.wait_for_slot(&host);
        }
        LayerOutcome::Fetched(fetcher.fetch(url, config.per_page_timeout))
    };

    let workers = config.max_concurrent_fetches.min(urls.len().max(1));
    if workers <= 1 {
        return urls.iter().map(fetch_one).collect();
    }

    let slots: Mutex<Vec<Option<LayerOutcome>>> =
        Mutex::new((0..urls.len()).map(|_| None).collect());
    let cursor = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = cursor.fetch_add(1, Ordering::SeqCst);
                if i >= urls.len() {
                    break;
                }
                let outcome = fetch_one(&urls[i]);
                slots.lock().unwrap()[i] = Some(outcome);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|slot| slot.expect("every slot filled by a worker"))
        .collect()
}

/// Serializes per-host request spacing: each acquisition reserves the next
/// free slot for that host and sleeps until it arrives.
struct PolitenessGate {
    delay: Duration,
    next_slot: Mutex<HashMap<String, Instant>>,
}

impl PolitenessGate {
    fn new(delay: Duration) -> Self {
        PolitenessGate {
            delay,
            next_slot: Mutex::new(HashMap::new()),
        }
    }

    fn wait_for_slot(&self, host: &str) {
        if self.delay.is_zero() {
            return;
        }
        let slot = {
            let mut slots = self.next_slot.lock().unwrap();
            let now = Instant::now();
            let at = slots.get(host).copied().map_or(now, |t| t.max(now));
            slots.insert(host.to_string(), at + self.delay);
            at
        };
        let now = Instant::now();
        if slot > now {
            std::thread::sleep(slot - now);
        }
    }
}

/// Per-host robots.txt cache; fetch failures default to allowing the URL.
#[derive(Default)]
struct RobotsCache {
    policies: Mutex<HashMap<String, RobotsPolicy>>,
}

impl RobotsCache {
    fn allows(&self, url: &str, fetcher: &dyn Fetcher, timeout: Duration) -> bool {
        let Ok(parsed) = Url::parse(url) else { return true };
        let Some(host) = parsed.host_str() else { return true };
        let key = host.to_string();
        let mut policies = self.policies.lock().unwrap();
        let policy = policies.entry(key).or_insert_with(|| {
            let robots_url = format!("{}://{}/robots.txt", parsed.scheme(), host);
            match fetcher.fetch(&robots_url, timeout) {
                Ok(body) => RobotsPolicy::parse(&body),
                Err(_) => RobotsPolicy::default(),
            }
        });
        policy.allows(parsed.path())
    }
}

#[cfg(test)]
mod tests;
