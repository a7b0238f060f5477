//! Depth-scoped TFIDF weighting, cosine similarity, and the cross-topic
//! similarity noise level.
//!
//! Inverse document frequency is computed over the cumulative page set
//! within a given distance of the topic source rather than over a global
//! corpus, which keeps the measures scalable with the maximum crawl depth.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::corpus::{CrawlSet, PageRecord};

#[derive(Debug, Error)]
pub enum VectorError {
    #[error("term {term:?} absent from the depth-{depth} cumulative set")]
    UndefinedTerm { term: String, depth: u32 },
    #[error("page {url} is outside the depth-{depth} cumulative set")]
    OutOfSet { url: String, depth: u32 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

/// Sparse non-negative term weights with a cached Euclidean norm.
///
/// Zero-weight entries are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct TermVector {
    weights: BTreeMap<String, f64>,
    norm: f64,
}

impl TermVector {
    pub fn from_weights(weights: BTreeMap<String, f64>) -> Self {
        let weights: BTreeMap<String, f64> =
            weights.into_iter().filter(|(_, w)| *w != 0.0).collect();
        let norm = weights.values().map(|w| w * w).sum::<f64>().sqrt();
        TermVector { weights, norm }
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, term: &str) -> Option<f64> {
        self.weights.get(term).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.weights.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// idf(k, d, q) = 1 + ln(N_d / N_d(k)).
///
/// Always at least 1, and exactly 1 when the term occurs in every page of
/// the set.
pub fn idf(crawl: &CrawlSet, term: &str, d: u32) -> Result<f64, VectorError> {
    let n_k = crawl
        .doc_freq(term, d)
        .ok_or_else(|| VectorError::UndefinedTerm {
            term: term.to_string(),
            depth: d,
        })?;
    Ok(1.0 + (crawl.n_pages(d) as f64 / n_k as f64).ln())
}

/// TFIDF vector of a page belonging to the depth-`d` cumulative set.
pub fn tfidf_vector(crawl: &CrawlSet, page: &PageRecord, d: u32) -> Result<TermVector, VectorError> {
    if !crawl.contains_ok(&page.url, d) {
        return Err(VectorError::OutOfSet {
            url: page.url.clone(),
            depth: d,
        });
    }
    let mut weights = BTreeMap::new();
    for (term, tf) in &page.term_counts {
        weights.insert(term.clone(), *tf as f64 * idf(crawl, term, d)?);
    }
    Ok(TermVector::from_weights(weights))
}

/// TFIDF vector of an arbitrary page projected into a foreign crawl set's
/// depth-`d` weighting. Terms unknown to that set carry no weight and are
/// dropped from the vector (and its norm).
pub fn projected_vector(crawl: &CrawlSet, term_counts: &BTreeMap<String, u64>, d: u32) -> TermVector {
    let mut weights = BTreeMap::new();
    for (term, tf) in term_counts {
        if let Ok(w) = idf(crawl, term, d) {
            weights.insert(term.clone(), *tf as f64 * w);
        }
    }
    TermVector::from_weights(weights)
}

/// Cosine similarity between two non-negative sparse vectors, in [0, 1].
///
/// Defined as 0 when either vector has zero norm: an empty page carries no
/// lexical evidence.
pub fn cosine_similarity(v1: &TermVector, v2: &TermVector) -> f64 {
    if v1.norm == 0.0 || v2.norm == 0.0 {
        return 0.0;
    }
    // Iterate the smaller map, probe the larger.
    let (small, large) = if v1.len() <= v2.len() { (v1, v2) } else { (v2, v1) };
    let mut dot = 0.0;
    for (term, w) in &small.weights {
        if let Some(w2) = large.weights.get(term) {
            dot += w * w2;
        }
    }
    (dot / (v1.norm * v2.norm)).clamp(0.0, 1.0)
}

/// Similarity noise estimate across topics.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NoiseEstimate {
    pub mean: f64,
    pub stderr: f64,
    /// Number of ordered topic pairs averaged over.
    pub pairs: usize,
}

/// The similarity noise level: for every ordered pair of distinct topics
/// (q, q'), the mean cosine similarity of q's source page against all
/// depth-1 pages of q', with every vector weighted inside q''s depth-1 set.
/// Returns the mean and standard error over ordered pairs.
pub fn noise_level(crawls: &[CrawlSet]) -> Result<NoiseEstimate, VectorError> {
    if crawls.len() < 2 {
        return Err(VectorError::InsufficientData(format!(
            "noise level needs at least 2 topics, got {}",
            crawls.len()
        )));
    }
    let mut pair_means = Vec::new();
    for q in crawls {
        let source_counts = &q.source().term_counts;
        for q_other in crawls {
            if q_other.topic_id() == q.topic_id() {
                continue;
            }
            let source_vec = projected_vector(q_other, source_counts, 1);
            let mut total = 0.0;
            let mut n = 0u64;
            for page in q_other.ok_pages_upto(1) {
                let page_vec = tfidf_vector(q_other, page, 1)
                    .expect("page taken from the depth-1 set is in the depth-1 set");
                total += cosine_similarity(&source_vec, &page_vec);
                n += 1;
            }
            pair_means.push(total / n as f64);
        }
    }
    let pairs = pair_means.len();
    let mean = pair_means.iter().sum::<f64>() / pairs as f64;
    let var = pair_means.iter().map(|s| (s - mean).powi(2)).sum::<f64>()
        / (pairs.saturating_sub(1)) as f64;
    let stderr = if pairs > 1 { (var / pairs as f64).sqrt() } else { 0.0 };
    Ok(NoiseEstimate { mean, stderr, pairs })
}
