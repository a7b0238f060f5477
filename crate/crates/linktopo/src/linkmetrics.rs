//! Per-topic link statistics: mean link distance, mean similarity, relevance
//! posterior, generality, likelihood factor, and the random-crawler
//! stationary hit rate.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CrawlSet, TopicSeed};
use crate::vectorspace::{cosine_similarity, tfidf_vector};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),
    #[error("invalid probability: {0}")]
    InvalidProbability(String),
}

/// One (topic, depth) observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricPoint {
    pub topic_id: String,
    pub d: u32,
    /// Mean link distance over the cumulative page set.
    pub delta: f64,
    /// Mean cosine similarity to the source over the cumulative page set.
    pub sigma: f64,
    /// Likelihood factor R/G; absent when no generality estimate exists.
    pub lambda: Option<f64>,
    pub n_pages: u64,
}

/// Relevance posterior and generality for one (topic, depth).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceEstimate {
    pub topic_id: String,
    pub d: u32,
    pub r: f64,
    pub g: f64,
}

/// Mean link distance over the cumulative set at depth `d`:
/// `(1/N_d) * sum_i i * (N_i - N_{i-1})`. The source page contributes 0.
pub fn mean_link_distance(crawl: &CrawlSet, d: u32) -> f64 {
    let n_d = crawl.n_pages(d);
    if n_d == 0 {
        return 0.0;
    }
    let mut weighted: u64 = 0;
    for i in 1..=d {
        weighted += i as u64 * (crawl.n_pages(i) - crawl.n_pages(i - 1));
    }
    weighted as f64 / n_d as f64
}

/// Mean cosine similarity of the source against every page of the cumulative
/// set at depth `d`, all weighted with the depth-`d` TFIDF scheme. The
/// source's own similarity of 1 is part of the mean; at `d = 0` the result
/// is 1 up to floating-point rounding.
pub fn mean_similarity(crawl: &CrawlSet, d: u32) -> f64 {
    let source_vec = tfidf_vector(crawl, crawl.source(), d)
        .expect("source page is in every cumulative set");
    let mut total = 0.0;
    let mut n = 0u64;
    for page in crawl.ok_pages_upto(d) {
        let v = tfidf_vector(crawl, page, d).expect("page drawn from the depth-d set");
        total += cosine_similarity(&source_vec, &v);
        n += 1;
    }
    if n == 0 {
        return 0.0;
    }
    total / n as f64
}

/// Posterior relevance probability at depth `d >= 1`: the fraction of the
/// cumulative page set whose URL is in the topic's crawl relevant set.
/// URL matching is exact string equality on normalized URLs.
pub fn relevance_posterior(crawl: &CrawlSet, seed: &TopicSeed, d: u32) -> f64 {
    debug_assert!(d >= 1, "the posterior estimator is defined for d >= 1");
    let relevant = seed
        .crawl_relevant_set
        .iter()
        .filter(|url| crawl.contains_ok(url, d))
        .count();
    relevant as f64 / crawl.n_pages(d) as f64
}

/// Relevance estimate for one (topic, depth): the posterior paired with the
/// topic's generality.
pub fn relevance_estimate(
    crawl: &CrawlSet,
    seed: &TopicSeed,
    g: f64,
    d: u32,
) -> RelevanceEstimate {
    RelevanceEstimate {
        topic_id: crawl.topic_id().to_string(),
        d,
        r: if d == 0 { 1.0 } else { relevance_posterior(crawl, seed, d) },
        g,
    }
}

/// Generality of a topic: its full relevant set size over the size of the
/// union of every topic's full relevant set.
pub fn generality(seed: &TopicSeed, all_seeds: &[TopicSeed]) -> Result<f64, MetricsError> {
    let mut union = std::collections::HashSet::new();
    for s in all_seeds {
        union.extend(s.full_relevant_set.iter());
    }
    if union.is_empty() {
        return Err(MetricsError::InsufficientData(
            "union of relevant sets is empty".into(),
        ));
    }
    Ok(seed.full_relevant_set.len() as f64 / union.len() as f64)
}

/// Likelihood factor lambda = R / G.
pub fn likelihood_factor(r: f64, g: f64) -> Result<f64, MetricsError> {
    if g <= 0.0 {
        return Err(MetricsError::InsufficientData(
            "generality must be positive".into(),
        ));
    }
    Ok(r / g)
}

/// Metric points for depths 0..=max_depth. At depth 0 the posterior is 1 by
/// definition (the source page itself is relevant), so lambda(q, 0) = 1/G.
pub fn likelihood_series(
    crawl: &CrawlSet,
    seed: &TopicSeed,
    g: f64,
    max_depth: u32,
) -> Result<Vec<MetricPoint>, MetricsError> {
    if g <= 0.0 {
        return Err(MetricsError::InsufficientData(
            "generality must be positive".into(),
        ));
    }
    let mut points = Vec::new();
    for d in 0..=max_depth {
        let r = if d == 0 { 1.0 } else { relevance_posterior(crawl, seed, d) };
        points.push(MetricPoint {
            topic_id: crawl.topic_id().to_string(),
            d,
            delta: mean_link_distance(crawl, d),
            sigma: mean_similarity(crawl, d),
            lambda: Some(likelihood_factor(r, g)?),
            n_pages: crawl.n_pages(d),
        });
    }
    Ok(points)
}

/// Stationary hit rate of a memoryless crawler under the two-state relevance
/// model: eta* = G / (1 + G - R1).
pub fn stationary_hit_rate(g: f64, r1: f64) -> Result<f64, MetricsError> {
    if !(0.0 < g && g <= 1.0) {
        return Err(MetricsError::InvalidProbability(format!("G = {g}")));
    }
    if !(0.0..=1.0).contains(&r1) {
        return Err(MetricsError::InvalidProbability(format!("R1 = {r1}")));
    }
    let denom = 1.0 + g - r1;
    if denom <= 0.0 {
        return Err(MetricsError::DegenerateParameters(format!(
            "1 + G - R1 = {denom} must be positive"
        )));
    }
    Ok(g / denom)
}

/// Result of a Monte Carlo crawl simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub rate: f64,
    /// Standard error of the rate, corrected for the chain's lag-one
    /// autocorrelation (R1 - G for the two-state model).
    pub stderr: f64,
    pub samples: u64,
    pub relevant_hits: u64,
}

/// Simulates the two-state relevance chain: the next page is relevant with
/// probability `r1` when the current page is relevant and `g` otherwise.
/// The first `burn_in` steps are discarded.
pub fn simulate_two_state(
    r1: f64,
    g: f64,
    steps: u64,
    burn_in: u64,
    rng_seed: u64,
) -> Result<SimOutcome, MetricsError> {
    for (name, p) in [("R1", r1), ("G", g)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(MetricsError::InvalidProbability(format!("{name} = {p}")));
        }
    }
    if steps == 0 || burn_in >= steps {
        return Err(MetricsError::InsufficientData(format!(
            "steps = {steps}, burn_in = {burn_in}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut relevant = rng.random::<f64>() < g;
    let mut hits = 0u64;
    let samples = steps - burn_in;
    for t in 0..steps {
        let p = if relevant { r1 } else { g };
        relevant = rng.random::<f64>() < p;
        if t >= burn_in && relevant {
            hits += 1;
        }
    }
    let rate = hits as f64 / samples as f64;
    let rho = (r1 - g).clamp(-0.999_999, 0.999_999);
    let var = rate * (1.0 - rate) / samples as f64 * (1.0 + rho) / (1.0 - rho);
    Ok(SimOutcome {
        rate,
        stderr: var.max(0.0).sqrt(),
        samples,
        relevant_hits: hits,
    })
}

/// Simulates a uniform random walk over an adjacency list, counting how
/// often relevant nodes are visited. Dead ends restart at the walk's start
/// node. The crawlable portion is expected to be strongly connected.
pub fn simulate_graph_walk(
    adjacency: &[Vec<usize>],
    relevant: &[bool],
    start: usize,
    steps: u64,
    burn_in: u64,
    rng_seed: u64,
) -> Result<SimOutcome, MetricsError> {
    if adjacency.len() != relevant.len() || start >= adjacency.len() {
        return Err(MetricsError::InsufficientData(
            "graph, labels and start node must agree".into(),
        ));
    }
    if steps == 0 || burn_in >= steps {
        return Err(MetricsError::InsufficientData(format!(
            "steps = {steps}, burn_in = {burn_in}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut node = start;
    let mut hits = 0u64;
    let samples = steps - burn_in;
    for t in 0..steps {
        let outlinks = &adjacency[node];
        node = if outlinks.is_empty() {
            start
        } else {
            outlinks[rng.random_range(0..outlinks.len())]
        };
        if t >= burn_in && relevant[node] {
            hits += 1;
        }
    }
    let rate = hits as f64 / samples as f64;
    let var = rate * (1.0 - rate) / samples as f64;
    Ok(SimOutcome {
        rate,
        stderr: var.sqrt(),
        samples,
        relevant_hits: hits,
    })
}
