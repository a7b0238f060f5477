use super::*;
use crate::corpus::FetchStatus;
use std::collections::HashMap;
use std::sync::Mutex;
use std::time::{Duration, Instant};

/// In-memory fetcher over a url -> html map, with injectable failures, an
/// optional robots.txt body per host, and a fetch log for politeness checks.
#[derive(Default)]
struct MapFetcher {
    pages: HashMap<String, String>,
    failures: HashMap<String, FetchFailure>,
    robots: HashMap<String, String>,
    live_like: bool,
    log: Mutex<Vec<(String, Instant)>>,
}

impl MapFetcher {
    fn insert_page(&mut self, url: &str, links: &[&str]) {
        let body = links
            .iter()
            .map(|l| format!("<a href=\"{l}\"></a>"))
            .collect::<Vec<_>>()
            .join("\n");
        self.pages
            .insert(url.to_string(), format!("<html><body>topic words {body}</body></html>"));
    }

    fn log_hosts(&self) -> Vec<(String, Instant)> {
        self.log.lock().unwrap().clone()
    }
}

impl Fetcher for MapFetcher {
    fn fetch(&self, url: &str, _timeout: Duration) -> Result<String, FetchFailure> {
        self.log
            .lock()
            .unwrap()
            .push((host_of(url).unwrap_or_default(), Instant::now()));
        if let Some(host) = host_of(url) {
            if url.ends_with("/robots.txt") {
                return match self.robots.get(&host) {
                    Some(body) => Ok(body.clone()),
                    None => Err(FetchFailure::Http(404)),
                };
            }
        }
        if let Some(failure) = self.failures.get(url) {
            return Err(failure.clone());
        }
        self.pages
            .get(url)
            .cloned()
            .ok_or(FetchFailure::Http(404))
    }

    fn fetched_at(&self) -> String {
        crate::corpus::format_utc(0)
    }

    fn honors_robots(&self) -> bool {
        self.live_like
    }
}

fn seed(source: &str) -> TopicSeed {
    TopicSeed {
        topic_id: "t0".into(),
        label: "fixture topic".into(),
        source_url: source.into(),
        crawl_relevant_set: vec![],
        full_relevant_set: vec![],
    }
}

fn small_config() -> CrawlConfig {
    CrawlConfig {
        min_seed_links: 1,
        ..CrawlConfig::default()
    }
}

fn depth_of(records: &[PageRecord], url: &str) -> Option<u32> {
    records.iter().find(|r| r.url == url).map(|r| r.depth)
}

#[test]
fn four_page_fixture_gets_bfs_depths() {
    let mut fetcher = MapFetcher::default();
    fetcher.insert_page("http://dir.test/topic", &["http://a.test/", "http://b.test/"]);
    fetcher.insert_page("http://a.test/", &["http://c.test/"]);
    fetcher.insert_page("http://b.test/", &[]);
    fetcher.insert_page("http://c.test/", &[]);
    let out = bfs_crawl(&seed("http://dir.test/topic"), &small_config(), &fetcher).unwrap();
    assert_eq!(out.records.len(), 4);
    assert_eq!(depth_of(&out.records, "http://dir.test/topic"), Some(0));
    assert_eq!(depth_of(&out.records, "http://a.test/"), Some(1));
    assert_eq!(depth_of(&out.records, "http://b.test/"), Some(1));
    assert_eq!(depth_of(&out.records, "http://c.test/"), Some(2));
    assert_eq!(out.seed.crawl_relevant_set, vec!["http://a.test/", "http://b.test/"]);
}

#[test]
fn page_reachable_by_two_paths_is_recorded_once_at_shortest_depth() {
    let mut fetcher = MapFetcher::default();
    fetcher.insert_page("http://dir.test/topic", &["http://a.test/", "http://b.test/"]);
    fetcher.insert_page("http://a.test/", &["http://c.test/"]);
    fetcher.insert_page("http://b.test/", &["http://d.test/"]);
    fetcher.insert_page("http://d.test/", &["http://c.test/"]);
    fetcher.insert_page("http://c.test/", &[]);
    let out = bfs_crawl(&seed("http://dir.test/topic"), &small_config(), &fetcher).unwrap();
    let c_records: Vec<&PageRecord> = out.records.iter().filter(|r| r.url == "http://c.test/").collect();
    assert_eq!(c_records.len(), 1);
    assert_eq!(c_records[0].depth, 2);
}

#[test]
fn seed_with_too_few_external_links_is_rejected() {
    let mut fetcher = MapFetcher::default();
    // Four external links plus one internal, below the default minimum of 5.
    fetcher.insert_page(
        "http://dir.test/topic",
        &[
            "http://w1.test/",
            "http://w2.test/",
            "http://w3.test/",
            "http://w4.test/",
            "http://dir.test/other",
        ],
    );
    let err = bfs_crawl(&seed("http://dir.test/topic"), &CrawlConfig::default(), &fetcher)
        .unwrap_err();
    match err {
        CrawlError::SeedRejected { found, required, .. } => {
            assert_eq!(found, 4);
            assert_eq!(required, 5);
        }
        other => panic!("expected seed rejection, got {other:?}"),
    }
}

#[test]
fn seed_with_many_links_keeps_first_ten_in_order() {
    let links: Vec<String> = (0..12).map(|i| format!("http://w{i}.test/")).collect();
    let link_refs: Vec<&str> = links.iter().map(String::as_str).collect();
    let mut fetcher = MapFetcher::default();
    fetcher.insert_page("http://dir.test/topic", &link_refs);
    for l in &links {
        fetcher.insert_page(l, &[]);
    }
    let out = bfs_crawl(&seed("http://dir.test/topic"), &CrawlConfig::default(), &fetcher).unwrap();
    assert_eq!(out.seed.crawl_relevant_set, links[..10].to_vec());
    // Full set keeps all 12 external links.
    assert_eq!(out.seed.full_relevant_set.len(), 12);
    // Depth-1 frontier is exactly the crawl relevant set.
    let depth1: Vec<&str> = out
        .records
        .iter()
        .filter(|r| r.depth == 1)
        .map(|r| r.url.as_str())
        .collect();
    assert_eq!(depth1, links[..10].iter().map(String::as_str).collect::<Vec<_>>());
}

#[test]
fn seed_with_exactly_minimum_links_is_kept() {
    let links: Vec<String> = (0..5).map(|i| format!("http://w{i}.test/")).collect();
    let link_refs: Vec<&str> = links.iter().map(String::as_str).collect();
    let mut fetcher = MapFetcher::default();
    fetcher.insert_page("http://dir.test/topic", &link_refs);
    for l in &links {
        fetcher.insert_page(l, &[]);
    }
    let out = bfs_crawl(&seed("http://dir.test/topic"), &CrawlConfig::default(), &fetcher).unwrap();
    assert_eq!(out.seed.crawl_relevant_set, links);
}

#[test]
fn source_host_links_never_enter_a_frontier() {
    let mut fetcher = MapFetcher::default();
    fetcher.insert_page(
        "http://dir.test/topic",
        &["http://w1.test/", "http://dir.test/sibling"],
    );
    // w1 links back into the directory host.
    fetcher.insert_page("http://w1.test/", &["http://dir.test/sibling", "http://w2.test/"]);
    fetcher.insert_page("http://w2.test/", &[]);
    fetcher.insert_page("http://dir.test/sibling", &[]);
    let out = bfs_crawl(&seed("http://dir.test/topic"), &small_config(), &fetcher).unwrap();
    assert!(depth_of(&out.records, "http://dir.test/sibling").is_none());
    assert_eq!(depth_of(&out.records, "http://w2.test/"), Some(2));
}

#[test]
fn fetch_failures_are_recorded_and_do_not_abort() {
    let mut fetcher = MapFetcher::default();
    fetcher.insert_page(
        "http://dir.test/topic",
        &["http://ok.test/", "http://slow.test/", "http://gone.test/"],
    );
    fetcher.insert_page("http://ok.test/", &[]);
    fetcher
        .failures
        .insert("http://slow.test/".into(), FetchFailure::Timeout);
    let out = bfs_crawl(&seed("http://dir.test/topic"), &small_config(), &fetcher).unwrap();
    let status = |url: &str| {
        out.records
            .iter()
            .find(|r| r.url == url)
            .map(|r| r.fetch_status.clone())
    };
    assert_eq!(status("http://ok.test/"), Some(FetchStatus::Ok));
    assert_eq!(status("http://slow.test/"), Some(FetchStatus::Timeout));
    assert_eq!(status("http://gone.test/"), Some(FetchStatus::HttpError(404)));
}

#[test]
fn unreachable_source_aborts() {
    let fetcher = MapFetcher::default();
    let err = bfs_crawl(&seed("http://dir.test/topic"), &small_config(), &fetcher).unwrap_err();
    assert!(matches!(err, CrawlError::SourceUnreachable { .. }));
}

fn capped_fixture() -> MapFetcher {
    let mut fetcher = MapFetcher::default();
    let d1: Vec<String> = (0..5).map(|i| format!("http://w{i}.test/")).collect();
    fetcher.insert_page(
        "http://dir.test/topic",
        &d1.iter().map(String::as_str).collect::<Vec<_>>(),
    );
    let mut d3_total = 0;
    for (i, url) in d1.iter().enumerate() {
        let children: Vec<String> = (0..2).map(|j| format!("http://w{i}.test/c{j}")).collect();
        fetcher.insert_page(url, &children.iter().map(String::as_str).collect::<Vec<_>>());
        for (j, child) in children.iter().enumerate() {
            let grandchildren: Vec<String> = (0..4)
                .map(|k| format!("http://deep{i}x{j}x{k}.test/"))
                .collect();
            fetcher.insert_page(
                child,
                &grandchildren.iter().map(String::as_str).collect::<Vec<_>>(),
            );
            for g in &grandchildren {
                fetcher.insert_page(g, &[]);
                d3_total += 1;
            }
        }
    }
    assert_eq!(d3_total, 40);
    fetcher
}

#[test]
fn max_depth_layer_halts_exactly_at_cap() {
    let fetcher = capped_fixture();
    let config = CrawlConfig {
        max_pages_at_max_depth: 10,
        ..small_config()
    };
    let out = bfs_crawl(&seed("http://dir.test/topic"), &config, &fetcher).unwrap();
    let at_max: Vec<&PageRecord> = out
        .records
        .iter()
        .filter(|r| r.depth == 3 && r.fetch_status.is_ok())
        .collect();
    assert_eq!(at_max.len(), 10);
    assert!(out.records.iter().all(|r| r.depth <= 3));
}

#[test]
fn crawl_output_is_identical_across_worker_counts() {
    let fetcher = capped_fixture();
    let mut runs = Vec::new();
    for workers in [1, 4, 16] {
        let config = CrawlConfig {
            max_pages_at_max_depth: 10,
            max_concurrent_fetches: workers,
            ..small_config()
        };
        let out = bfs_crawl(&seed("http://dir.test/topic"), &config, &fetcher).unwrap();
        runs.push(out.records);
    }
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[1], runs[2]);
}

#[test]
fn no_url_is_recorded_twice() {
    let fetcher = capped_fixture();
    let out = bfs_crawl(&seed("http://dir.test/topic"), &small_config(), &fetcher).unwrap();
    let mut seen = std::collections::HashSet::new();
    for r in &out.records {
        assert!(seen.insert(r.url.clone()), "duplicate record for {}", r.url);
    }
}

#[test]
fn recorded_depths_match_an_independent_bfs_oracle() {
    let fetcher = capped_fixture();
    let out = bfs_crawl(&seed("http://dir.test/topic"), &small_config(), &fetcher).unwrap();

    // Textbook BFS over the same link map, honoring the frontier rules: the
    // depth-1 layer is the crawl relevant set, and the directory host is
    // excluded afterwards.
    let mut oracle: HashMap<String, u32> = HashMap::new();
    oracle.insert("http://dir.test/topic".into(), 0);
    let mut queue: std::collections::VecDeque<(String, u32)> = out
        .seed
        .crawl_relevant_set
        .iter()
        .map(|u| (u.clone(), 1))
        .collect();
    for (u, _) in &queue {
        oracle.insert(u.clone(), 1);
    }
    while let Some((url, d)) = queue.pop_front() {
        if d >= 3 {
            continue;
        }
        let Some(body) = fetcher.pages.get(&url) else { continue };
        let base = url::Url::parse(&url).unwrap();
        for link in crate::lexparse::extract_links(body, &base) {
            if host_of(&link).as_deref() == Some("dir.test") {
                continue;
            }
            if !oracle.contains_key(&link) {
                oracle.insert(link.clone(), d + 1);
                queue.push_back((link, d + 1));
            }
        }
    }
    for r in &out.records {
        assert_eq!(
            oracle.get(&r.url).copied(),
            Some(r.depth),
            "depth mismatch for {}",
            r.url
        );
    }
}

#[test]
fn domain_crawl_restricts_frontier_and_seed_validation() {
    let mut fetcher = MapFetcher::default();
    fetcher.insert_page(
        "http://dir.test/topic",
        &[
            "http://a.x.edu/",
            "http://b.x.com/",
            "http://c.y.edu/",
            "http://d.y.com/",
            "http://e.z.edu/",
        ],
    );
    fetcher.insert_page("http://a.x.edu/", &["http://deep.edu/", "http://deep.com/"]);
    fetcher.insert_page("http://c.y.edu/", &[]);
    fetcher.insert_page("http://e.z.edu/", &[]);
    fetcher.insert_page("http://deep.edu/", &[]);
    fetcher.insert_page("http://deep.com/", &[]);
    fetcher.insert_page("http://b.x.com/", &[]);
    fetcher.insert_page("http://d.y.com/", &[]);

    let config = CrawlConfig {
        min_seed_links: 3,
        ..small_config()
    };
    let out = domain_crawl(&seed("http://dir.test/topic"), "edu", &config, &fetcher).unwrap();
    assert!(out
        .records
        .iter()
        .skip(1)
        .all(|r| crate::corpus::tld_of(&r.url).as_deref() == Some("edu")));
    assert_eq!(depth_of(&out.records, "http://deep.edu/"), Some(2));
    assert!(depth_of(&out.records, "http://deep.com/").is_none());
    assert_eq!(
        out.seed.crawl_relevant_set,
        vec!["http://a.x.edu/", "http://c.y.edu/", "http://e.z.edu/"]
    );

    // No gov links at all: rejection with too-few-links.
    let err = domain_crawl(&seed("http://dir.test/topic"), "gov", &config, &fetcher).unwrap_err();
    assert!(matches!(err, CrawlError::SeedRejected { found: 0, .. }));
}

#[test]
fn all_in_domain_crawl_equals_unrestricted_crawl() {
    let mut fetcher = MapFetcher::default();
    fetcher.insert_page("http://dir.edu/topic", &["http://a.edu/", "http://b.edu/"]);
    fetcher.insert_page("http://a.edu/", &["http://c.edu/"]);
    fetcher.insert_page("http://b.edu/", &[]);
    fetcher.insert_page("http://c.edu/", &[]);
    let unrestricted = bfs_crawl(&seed("http://dir.edu/topic"), &small_config(), &fetcher).unwrap();
    let restricted = domain_crawl(&seed("http://dir.edu/topic"), "edu", &small_config(), &fetcher).unwrap();
    assert_eq!(unrestricted.records, restricted.records);
}

#[test]
fn politeness_delay_spaces_same_host_fetches() {
    let mut fetcher = MapFetcher::default();
    let links: Vec<String> = (0..4)
        .map(|i| format!("http://crowded.test/p{i}"))
        .chain(std::iter::once("http://lone.test/".to_string()))
        .collect();
    fetcher.insert_page(
        "http://dir.test/topic",
        &links.iter().map(String::as_str).collect::<Vec<_>>(),
    );
    for l in &links {
        fetcher.insert_page(l, &[]);
    }
    let delay = Duration::from_millis(40);
    let config = CrawlConfig {
        politeness_delay: delay,
        max_concurrent_fetches: 8,
        ..small_config()
    };
    bfs_crawl(&seed("http://dir.test/topic"), &config, &fetcher).unwrap();
    let mut per_host: HashMap<String, Vec<Instant>> = HashMap::new();
    for (host, at) in fetcher.log_hosts() {
        per_host.entry(host).or_default().push(at);
    }
    let times = &per_host["crowded.test"];
    assert_eq!(times.len(), 4);
    let mut sorted = times.clone();
    sorted.sort();
    // Slot reservation guarantees the k-th same-host fetch starts at least
    // k * delay after the first; scheduler wake jitter can only stretch it.
    let span = *sorted.last().unwrap() - sorted[0];
    assert!(
        span >= 3 * delay - Duration::from_millis(5),
        "4 same-host fetches spanned only {span:?}"
    );
}

#[test]
fn robots_disallowed_urls_are_skipped_and_reported() {
    let mut fetcher = MapFetcher::default();
    fetcher.live_like = true;
    fetcher.insert_page(
        "http://dir.test/topic",
        &["http://w.test/open", "http://w.test/private/page"],
    );
    fetcher.insert_page("http://w.test/open", &[]);
    fetcher.insert_page("http://w.test/private/page", &[]);
    fetcher
        .robots
        .insert("w.test".into(), "User-agent: *\nDisallow: /private/\n".into());
    let out = bfs_crawl(&seed("http://dir.test/topic"), &small_config(), &fetcher).unwrap();
    assert_eq!(out.robots_skipped, vec!["http://w.test/private/page"]);
    assert!(depth_of(&out.records, "http://w.test/private/page").is_none());
    assert_eq!(depth_of(&out.records, "http://w.test/open"), Some(1));
}

#[test]
fn config_validation_rejects_bad_bounds() {
    let bad = CrawlConfig {
        max_depth: 0,
        ..CrawlConfig::default()
    };
    assert!(matches!(bad.validate(), Err(CrawlError::InvalidConfig(_))));
    let bad = CrawlConfig {
        min_seed_links: 11,
        ..CrawlConfig::default()
    };
    assert!(bad.validate().is_err());
}
