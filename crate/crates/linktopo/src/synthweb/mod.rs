//! Deterministic generator of synthetic topic-centered web corpora with
//! planted similarity decay and relevance likelihood, plus a self-check that
//! runs the full pipeline and verifies parameter recovery.
//!
//! # Construction
//!
//! Page text is built from three stem-stable vocabulary classes whose
//! depth-scoped TFIDF weights are exactly computable:
//!
//! * `ns` shared terms appear once in every page of every topic, so their
//!   idf is exactly 1 and they carry the cross-topic similarity noise;
//! * `nt` topic terms appear once in the source and once in every crawl
//!   page of their topic (idf exactly 1 inside the topic crawl), and never
//!   elsewhere;
//! * `u_d` filler terms per page are unique within a topic (idf exactly
//!   `1 + ln N_d`), diluting similarity by a per-layer solvable amount.
//!
//! With that structure, the measured mean similarity at each depth and the
//! cross-topic noise level have closed forms, and the generator solves the
//! filler counts so the measured statistics land exactly on the planted
//! decay curve (up to integer rounding of term counts). Relevance is planted
//! through the seed universe: the generality target is realized with shared
//! padding URLs or extra background seeds, and the likelihood profile
//! follows from the solved layer sizes.
//!
//! Vocabulary tokens are lowercase consonant-only strings, which the Porter
//! stemmer maps to themselves, so the statistics under test are isolated
//! from stemmer behavior.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{build_crawl_set, write_seeds, CorpusError, TopicSeed};
use crate::crawler::{bfs_crawl, CrawlConfig, CrawlError, OfflineFetcher};
use crate::fitting::{
    critical_distance, fit_likelihood_decay, fit_similarity_decay, likelihood_model, pearson,
    similarity_model, FitError,
};
use crate::linkmetrics::{
    generality, likelihood_factor, mean_link_distance, mean_similarity, relevance_posterior,
    MetricsError,
};
use crate::vectorspace::{noise_level, VectorError};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("infeasible spec: {0}")]
    InfeasibleSpec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Serde(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Crawl(#[from] CrawlError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Planted similarity decay: the curve the measured (delta, sigma) points
/// must land on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedSimilarity {
    pub alpha1: f64,
    pub alpha2: f64,
    pub sigma_inf: f64,
}

/// Planted relevance: either a direct generality target (layer sizes taken
/// from the profile) or a likelihood decay curve (layer sizes solved so the
/// measured lambda values follow the curve).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum PlantedRelevance {
    Generality { g: f64 },
    Curve { alpha3: f64, alpha4: f64, alpha5: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_topics: usize,
    /// Layer sizes for depths 1..=D. The first entry is the seed fan-out and
    /// must lie within the crawl protocol's 5..=10 seed-link bounds. Under a
    /// planted likelihood curve, entries beyond the first are solved rather
    /// than taken from here.
    pub pages_per_depth: Vec<usize>,
    /// In-links per page from the previous layer.
    pub branching_factor: usize,
    pub similarity: PlantedSimilarity,
    pub relevance: PlantedRelevance,
    /// Content vocabulary per page (shared + topic terms).
    pub vocabulary_size: usize,
    /// Optional cap on total terms per page, filler included.
    pub max_terms_per_page: Option<usize>,
    /// Relative jitter of layer sizes beyond depth 1, per topic. Ignored in
    /// curve mode, where layer sizes carry the planted signal.
    pub profile_jitter: f64,
    pub rng_seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_topics: 100,
            pages_per_depth: vec![10, 100, 1000],
            branching_factor: 3,
            similarity: PlantedSimilarity {
                alpha1: 1.8,
                alpha2: 0.6,
                sigma_inf: 0.0318,
            },
            relevance: PlantedRelevance::Generality { g: 0.01 },
            vocabulary_size: 66,
            max_terms_per_page: None,
            profile_jitter: 0.05,
            rng_seed: 42,
        }
    }
}

/// Expected pipeline outputs for one generated topic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicTruth {
    pub topic_id: String,
    /// Layer sizes realized for this topic.
    pub layers: Vec<usize>,
    /// (mean link distance, mean similarity) expected at depths 1..=D.
    pub sigma_points: Vec<(f64, f64)>,
    /// (mean link distance, likelihood factor) expected at depths 1..=D.
    pub lambda_points: Vec<(f64, f64)>,
}

/// Everything the self-check needs to score a recovery run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub spec: SynthSpec,
    /// Analytic cross-topic noise level of the emitted corpus.
    pub realized_sigma_inf: f64,
    /// Generality realized by the emitted seed universe.
    pub realized_g: f64,
    /// Critical distance of the planted likelihood curve at threshold 2,
    /// in curve mode.
    pub planted_delta_star: Option<f64>,
    /// True when the similarity planting fell back to pure background text
    /// (no topic vocabulary beyond the source).
    pub pure_background: bool,
    pub topics: Vec<TopicTruth>,
}

/// Consonant-only alphabet: no vowels, no `s`, no `y`, so the Porter
/// stemmer cannot touch any token built from it.
const TOKEN_ALPHABET: &[u8] = b"bcdfghjklmnpqrtvwxz";

fn encode_token(mut index: usize, width: usize) -> String {
    let base = TOKEN_ALPHABET.len();
    let mut out = vec![b'b'; width];
    for slot in out.iter_mut().rev() {
        *slot = TOKEN_ALPHABET[index % base];
        index /= base;
    }
    String::from_utf8(out).expect("alphabet is ASCII")
}

fn shared_term(i: usize) -> String {
    format!("hw{}", encode_token(i, 3))
}

fn topic_term(topic: usize, i: usize) -> String {
    format!("tp{}{}", encode_token(topic, 3), encode_token(i, 3))
}

fn filler_term(i: usize) -> String {
    format!("fl{}", encode_token(i, 5))
}

fn topic_tag(topic: usize) -> String {
    format!("t{}", encode_token(topic, 3))
}

/// Per-topic planting solution.
struct TopicPlan {
    layers: Vec<usize>,
    cumulative: Vec<u64>,
    mean_distance: Vec<f64>,
    /// Filler terms per page at each layer.
    filler: Vec<usize>,
    /// Topic-term count per crawl page (0 in pure-background mode).
    topic_tf: u64,
    sigma_points: Vec<(f64, f64)>,
}

fn cumulative_counts(layers: &[usize]) -> Vec<u64> {
    let mut out = vec![1u64];
    for n in layers {
        out.push(out.last().unwrap() + *n as u64);
    }
    out
}

fn mean_distances(cumulative: &[u64]) -> Vec<f64> {
    (0..cumulative.len())
        .map(|d| {
            let mut weighted = 0u64;
            for i in 1..=d {
                weighted += i as u64 * (cumulative[i] - cumulative[i - 1]);
            }
            weighted as f64 / cumulative[d] as f64
        })
        .collect()
}

fn big_ln(n: u64) -> f64 {
    1.0 + (n as f64).ln()
}

/// Per-page similarity of a layer page measured at depth `d`, with topic
/// terms present (tf 1) and `u` unique filler terms.
fn page_sigma_with_topic(w: f64, u: f64, l_d: f64) -> f64 {
    (w / (w + u * l_d * l_d)).sqrt()
}

/// Per-page similarity in pure-background mode (no topic terms in crawl
/// pages; the source still carries `nt` topic terms at idf `l_d`).
fn page_sigma_background(ns: f64, nt: f64, u: f64, l_d: f64) -> f64 {
    let l2 = l_d * l_d;
    ns / ((ns + nt * l2) * (ns + u * l2)).sqrt()
}

/// Solves the per-layer filler counts so that the measured mean similarity
/// at every depth equals the decay curve (with noise floor `sigma_floor`)
/// at that depth's mean distance.
fn solve_similarity(
    spec: &SynthSpec,
    layers: &[usize],
    ns: usize,
    sigma_floor: f64,
) -> Result<(Vec<usize>, u64, Vec<(f64, f64)>, bool), SynthError> {
    let w = spec.vocabulary_size as f64;
    let nt = (spec.vocabulary_size - ns) as f64;
    let p = spec.similarity;
    let cumulative = cumulative_counts(layers);
    let deltas = mean_distances(&cumulative);
    let depth_count = layers.len();

    let curve = |x: f64| similarity_model(sigma_floor, &[p.alpha1, p.alpha2], x);

    // Feasibility probe at depth 1 decides the planting mode.
    let t1 = curve(deltas[1]);
    let n1 = layers[0] as f64;
    let s1 = (cumulative[1] as f64 * t1 - 1.0) / n1;
    if s1 <= 0.0 {
        // Pure background: crawl pages share no topic vocabulary and each
        // page's similarity to the source is pinned at the noise level.
        let mut filler = Vec::new();
        for d in 1..=depth_count {
            let l = big_ln(cumulative[d]);
            let l2 = l * l;
            let nsf = ns as f64;
            let u = if p.sigma_inf > 0.0 && ns > 0 {
                let target = nsf * nsf / (p.sigma_inf * p.sigma_inf * (nsf + nt * l2));
                ((target - nsf) / l2).max(0.0)
            } else {
                w
            };
            filler.push(u.round() as usize);
        }
        let sigma_points = (1..=depth_count)
            .map(|d| {
                let l = big_ln(cumulative[d]);
                let mut total = 1.0;
                for (delta, n) in layers.iter().enumerate().take(d) {
                    let u = filler[delta] as f64;
                    total += *n as f64 * page_sigma_background(ns as f64, nt, u, l);
                }
                (deltas[d], total / cumulative[d] as f64)
            })
            .collect();
        return Ok((filler, 0, sigma_points, true));
    }

    let mut filler: Vec<usize> = Vec::new();
    for d in 1..=depth_count {
        let n_d = cumulative[d] as f64;
        let l_d = big_ln(cumulative[d]);
        let target = curve(deltas[d]);
        // Contribution of the source and of already-solved shallower layers,
        // re-weighted at this measurement depth.
        let mut fixed = 1.0;
        for (delta, n) in layers.iter().enumerate().take(d - 1) {
            fixed += *n as f64 * page_sigma_with_topic(w, filler[delta] as f64, l_d);
        }
        let s = (n_d * target - fixed) / layers[d - 1] as f64;
        if s <= 0.0 {
            return Err(SynthError::InfeasibleSpec(format!(
                "similarity target {target:.4} at depth {d} is below the \
                 source-blend floor; the curve decays too fast for this profile"
            )));
        }
        if s > 1.0 + 1e-9 {
            return Err(SynthError::InfeasibleSpec(format!(
                "similarity target {target:.4} at depth {d} needs per-page \
                 similarity {s:.4} > 1"
            )));
        }
        let s = s.min(1.0);
        let u = (w * (1.0 / (s * s) - 1.0) / (l_d * l_d)).round().max(0.0) as usize;
        if let Some(cap) = spec.max_terms_per_page {
            if spec.vocabulary_size + u > cap {
                return Err(SynthError::InfeasibleSpec(format!(
                    "depth {d} needs {u} filler terms, exceeding the \
                     {cap}-term page cap"
                )));
            }
        }
        filler.push(u);
    }

    // Expected statistics from the rounded filler counts.
    let sigma_points = (1..=depth_count)
        .map(|d| {
            let l_d = big_ln(cumulative[d]);
            let mut total = 1.0;
            for (delta, n) in layers.iter().enumerate().take(d) {
                total += *n as f64 * page_sigma_with_topic(w, filler[delta] as f64, l_d);
            }
            (deltas[d], total / cumulative[d] as f64)
        })
        .collect();
    Ok((filler, 1, sigma_points, false))
}

/// Solves layer sizes for a planted likelihood curve: measured
/// lambda(q, d) = (n1 / N_d) / G must equal the curve at the realized mean
/// distance. Returns the layer sizes and the generality target.
fn solve_curve_profile(
    n1: usize,
    depth_count: usize,
    alpha: (f64, f64, f64),
) -> Result<(Vec<usize>, f64), SynthError> {
    let lambda = |x: f64| likelihood_model(&[alpha.0, alpha.1, alpha.2], x);
    let r1 = n1 as f64 / (n1 as f64 + 1.0);
    let delta1 = r1;
    let g = r1 / lambda(delta1);
    if !(g.is_finite() && g > 0.0) {
        return Err(SynthError::InfeasibleSpec(format!(
            "likelihood curve gives non-positive generality {g}"
        )));
    }
    let mut layers: Vec<usize> = vec![n1];
    for _ in 1..depth_count {
        layers.push(layers.last().unwrap() * 4);
    }
    // Damped fixed point on N_d = n1 / (G * lambda(mean distance)).
    for _ in 0..200 {
        let cumulative = cumulative_counts(&layers);
        let deltas = mean_distances(&cumulative);
        let mut next = layers.clone();
        for d in 2..=depth_count {
            let want_n = n1 as f64 / (g * lambda(deltas[d]));
            let lower = cumulative[d - 1] as f64 + 1.0;
            let want_n = want_n.max(lower);
            let current = cumulative[d] as f64;
            let blended = 0.5 * current + 0.5 * want_n;
            next[d - 1] = (blended - cumulative[d - 1] as f64).round().max(1.0) as usize;
        }
        if next == layers {
            break;
        }
        layers = next;
    }
    Ok((layers, g))
}

/// The seed universe realizing a generality target: shared padding URLs
/// raise G above 1/T, background seeds push it below.
struct Universe {
    shared_pad: Vec<String>,
    ghost_seeds: Vec<TopicSeed>,
    realized_g: f64,
}

fn solve_universe(n_topics: usize, n1: usize, g: f64) -> Result<Universe, SynthError> {
    if !(0.0 < g && g <= 1.0) {
        return Err(SynthError::InfeasibleSpec(format!(
            "generality target {g} out of (0, 1]"
        )));
    }
    let t = n_topics as f64;
    let n1f = n1 as f64;
    let natural = 1.0 / t;
    if (g - natural).abs() < 1e-12 {
        return Ok(Universe {
            shared_pad: vec![],
            ghost_seeds: vec![],
            realized_g: natural,
        });
    }
    if g > natural {
        // |Q'| = n1 + s over a union of T*n1 + s.
        let pad = (n1f * (g * t - 1.0) / (1.0 - g)).round().max(0.0) as usize;
        let shared_pad: Vec<String> = (0..pad)
            .map(|i| format!("http://pad.synth/r{i:06}"))
            .collect();
        let realized_g = (n1f + pad as f64) / (t * n1f + pad as f64);
        Ok(Universe {
            shared_pad,
            ghost_seeds: vec![],
            realized_g,
        })
    } else {
        // Background seeds enlarge the union without touching |Q'_q|.
        let union_target = (n1f / g).round() as usize;
        let extra = union_target.saturating_sub(n_topics * n1);
        let per_ghost = 100;
        let mut ghost_seeds = Vec::new();
        let mut remaining = extra;
        let mut ghost = 0;
        while remaining > 0 {
            let take = remaining.min(per_ghost);
            let tag = encode_token(ghost, 3);
            ghost_seeds.push(TopicSeed {
                topic_id: format!("bg{tag}"),
                label: "background universe seed".into(),
                source_url: format!("http://bg{tag}.dir.synth/index.html"),
                crawl_relevant_set: vec![],
                full_relevant_set: (0..take)
                    .map(|i| format!("http://bg{tag}.w.synth/r{i:04}"))
                    .collect(),
            });
            remaining -= take;
            ghost += 1;
        }
        let realized_g = n1f / (t * n1f + extra as f64);
        Ok(Universe {
            shared_pad: vec![],
            ghost_seeds,
            realized_g,
        })
    }
}

fn validate_spec(spec: &SynthSpec) -> Result<(), SynthError> {
    let mut problems = Vec::new();
    if spec.n_topics < 1 {
        problems.push("n_topics must be at least 1".to_string());
    }
    if spec.pages_per_depth.is_empty() {
        problems.push("pages_per_depth must name at least one layer".to_string());
    }
    if let Some(n1) = spec.pages_per_depth.first() {
        if !(5..=10).contains(n1) {
            problems.push(format!(
                "first layer size {n1} violates the 5..=10 seed-link protocol"
            ));
        }
    }
    if spec.pages_per_depth.iter().any(|n| *n == 0) {
        problems.push("layer sizes must be positive".to_string());
    }
    if spec.vocabulary_size < 2 {
        problems.push("vocabulary_size must be at least 2".to_string());
    }
    if spec.branching_factor < 1 {
        problems.push("branching_factor must be at least 1".to_string());
    }
    let s = spec.similarity;
    if !(0.0..1.0).contains(&s.sigma_inf) || s.alpha1 < 0.0 || s.alpha2 <= 0.0 {
        problems.push("similarity parameters out of range".to_string());
    }
    if !(0.0..=1.0).contains(&spec.profile_jitter) {
        problems.push("profile_jitter must be within [0, 1]".to_string());
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(SynthError::InfeasibleSpec(problems.join("; ")))
    }
}

/// Generates the corpus under `out_dir`: one HTML file per page, a manifest
/// mapping URLs to files, the seeds file, and the ground-truth record
/// (which is also returned). Byte-identical for identical specs.
pub fn generate(spec: &SynthSpec, out_dir: &Path) -> Result<GroundTruth, SynthError> {
    validate_spec(spec)?;
    let n1 = spec.pages_per_depth[0];
    let depth_count = spec.pages_per_depth.len();

    // Relevance planting decides the base profile and the generality target.
    let (base_layers, g_target) = match spec.relevance {
        PlantedRelevance::Generality { g } => (spec.pages_per_depth.clone(), g),
        PlantedRelevance::Curve { alpha3, alpha4, alpha5 } => {
            solve_curve_profile(n1, depth_count, (alpha3, alpha4, alpha5))?
        }
    };
    let universe = solve_universe(spec.n_topics, n1, g_target)?;

    // Shared/topic vocabulary split from the planted noise target, then the
    // curve floor moved to the realized (integer-rounded) noise so the
    // alphas stay exactly recoverable. Noise here follows the measurement:
    // the mean over a target topic's source page and its depth-1 layer.
    let w = spec.vocabulary_size as f64;
    let n1f = n1 as f64;
    let l1 = big_ln(1 + base_layers[0] as u64);
    let base_solution = solve_similarity(spec, &base_layers, 0, spec.similarity.sigma_inf)?;
    let pure = base_solution.3;
    let noise_of = |ns: usize, u1: usize| -> f64 {
        if ns == 0 {
            return 0.0;
        }
        let nsf = ns as f64;
        let l2 = l1 * l1;
        let (src_norm2, page_norm2) = if pure {
            (nsf + (w - nsf) * l2, nsf + u1 as f64 * l2)
        } else {
            (w, w + u1 as f64 * l2)
        };
        ((nsf / src_norm2).sqrt() + n1f * (nsf / page_norm2).sqrt()) / (n1f + 1.0)
    };
    let ns = if spec.similarity.sigma_inf > 0.0 {
        let unit = noise_of(1, base_solution.0[0]);
        let raw = (spec.similarity.sigma_inf / unit).powi(2).round();
        (raw as usize).clamp(1, spec.vocabulary_size - 1)
    } else {
        0
    };
    // Fixed point between the curve floor and the filler counts.
    let mut sigma_floor = if pure {
        spec.similarity.sigma_inf
    } else {
        noise_of(ns, base_solution.0[0])
    };
    if !pure {
        for _ in 0..6 {
            let solved = solve_similarity(spec, &base_layers, ns, sigma_floor)?;
            let next = noise_of(ns, solved.0[0]);
            if (next - sigma_floor).abs() < 1e-12 {
                break;
            }
            sigma_floor = next;
        }
    }

    let jitter = match spec.relevance {
        PlantedRelevance::Generality { .. } => spec.profile_jitter,
        PlantedRelevance::Curve { .. } => 0.0,
    };

    // Solve every topic's plan first so generation can stream files.
    let mut plans: Vec<TopicPlan> = Vec::new();
    for topic in 0..spec.n_topics {
        let mut layers = base_layers.clone();
        if jitter > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
            rng.set_stream(topic as u64 + 1);
            for layer in layers.iter_mut().skip(1) {
                let factor = 1.0 + rng.random_range(-jitter..=jitter);
                *layer = ((*layer as f64 * factor).round() as usize).max(1);
            }
        }
        let (filler, topic_tf, sigma_points, _pure) =
            solve_similarity(spec, &layers, ns, sigma_floor)?;
        let cumulative = cumulative_counts(&layers);
        plans.push(TopicPlan {
            mean_distance: mean_distances(&cumulative),
            cumulative,
            layers,
            filler,
            topic_tf,
            sigma_points,
        });
    }
    let pure_background = plans.first().map(|p| p.topic_tf == 0).unwrap_or(false);

    // Analytic cross-topic noise of the realized corpus: the mean over
    // ordered pairs reduces to a mean over target topics, each contributing
    // its source page plus its depth-1 layer.
    let realized_sigma_inf = if ns == 0 {
        0.0
    } else {
        plans
            .iter()
            .map(|plan| {
                let l = big_ln(plan.cumulative[1]);
                let l2 = l * l;
                let nsf = ns as f64;
                let nt = w - nsf;
                let (src_norm2, page_norm2) = if plan.topic_tf > 0 {
                    (w, w + plan.filler[0] as f64 * l2)
                } else {
                    (nsf + nt * l2, nsf + plan.filler[0] as f64 * l2)
                };
                let src = (nsf / src_norm2).sqrt().min(1.0);
                let page = (nsf / page_norm2).sqrt().min(1.0);
                (src + plan.layers[0] as f64 * page) / (plan.layers[0] as f64 + 1.0)
            })
            .sum::<f64>()
            / plans.len() as f64
    };

    std::fs::create_dir_all(out_dir)?;
    let mut manifest: BTreeMap<String, String> = BTreeMap::new();
    let mut seeds: Vec<TopicSeed> = Vec::new();
    let mut topics_truth: Vec<TopicTruth> = Vec::new();

    for (topic, plan) in plans.iter().enumerate() {
        let tag = topic_tag(topic);
        let dir_host = format!("{tag}.dir.synth");
        let web_host = format!("{tag}.web.synth");
        let topic_dir = out_dir.join("pages").join(&tag);
        std::fs::create_dir_all(&topic_dir)?;

        let page_url = |depth: usize, idx: usize| -> String {
            format!("http://{web_host}/d{depth}/p{idx:05}.html")
        };
        let source_url = format!("http://{dir_host}/index.html");

        // Outlinks: children round-robin over the previous layer, plus
        // `branching_factor - 1` duplicate-discovery parents, plus one
        // back-link to the relevant set from every page at depth >= 2.
        let mut filler_cursor = 0usize;
        for depth in 0..=plan.layers.len() {
            let (count, url_of): (usize, Box<dyn Fn(usize) -> String>) = if depth == 0 {
                (1, Box::new(|_| source_url.clone()))
            } else {
                (plan.layers[depth - 1], Box::new(move |i| page_url(depth, i)))
            };
            for idx in 0..count {
                let url = url_of(idx);
                let mut links: Vec<String> = Vec::new();
                if depth < plan.layers.len() {
                    let next_size = plan.layers[depth];
                    let parents = count;
                    for child in 0..next_size {
                        let in_links = spec.branching_factor.min(parents);
                        for m in 0..in_links {
                            if (child + m) % parents == idx {
                                links.push(page_url(depth + 1, child));
                            }
                        }
                    }
                }
                if depth >= 2 {
                    links.push(page_url(1, idx % plan.layers[0]));
                }

                let mut terms: Vec<(String, u64)> = Vec::new();
                for i in 0..ns {
                    terms.push((shared_term(i), 1));
                }
                let topic_tf = if depth == 0 { 1 } else { plan.topic_tf };
                if topic_tf > 0 {
                    for i in 0..(spec.vocabulary_size - ns) {
                        terms.push((topic_term(topic, i), topic_tf));
                    }
                }
                if depth >= 1 {
                    let u = plan.filler[depth - 1];
                    for _ in 0..u {
                        terms.push((filler_term(filler_cursor), 1));
                        filler_cursor += 1;
                    }
                }

                let rel = if depth == 0 {
                    "index.html".to_string()
                } else {
                    format!("d{depth}p{idx:05}.html")
                };
                std::fs::write(topic_dir.join(&rel), render_page(&terms, &links))?;
                manifest.insert(url, format!("pages/{tag}/{rel}"));
            }
        }

        let crawl_relevant: Vec<String> = (0..plan.layers[0]).map(|i| page_url(1, i)).collect();
        let mut full_relevant = crawl_relevant.clone();
        full_relevant.extend(universe.shared_pad.iter().cloned());
        seeds.push(TopicSeed {
            topic_id: tag.clone(),
            label: format!("synthetic topic {tag}"),
            source_url,
            crawl_relevant_set: crawl_relevant,
            full_relevant_set: full_relevant,
        });

        let lambda_points = (1..=plan.layers.len())
            .map(|d| {
                let r = plan.layers[0] as f64 / plan.cumulative[d] as f64;
                (plan.mean_distance[d], r / universe.realized_g)
            })
            .collect();
        topics_truth.push(TopicTruth {
            topic_id: tag,
            layers: plan.layers.clone(),
            sigma_points: plan.sigma_points.clone(),
            lambda_points,
        });
    }
    seeds.extend(universe.ghost_seeds.iter().cloned());

    let planted_delta_star = match spec.relevance {
        PlantedRelevance::Curve { alpha3, alpha4, alpha5 } if alpha3 > 1.0 => {
            Some(((alpha3 / (2.0 - 1.0)).ln() / alpha4).powf(1.0 / alpha5))
        }
        _ => None,
    };

    let truth = GroundTruth {
        spec: spec.clone(),
        realized_sigma_inf,
        realized_g: universe.realized_g,
        planted_delta_star,
        pure_background,
        topics: topics_truth,
    };

    write_json(&out_dir.join("manifest.json"), &manifest)?;
    write_seeds(&out_dir.join("seeds.json"), &seeds)?;
    write_json(&out_dir.join("ground_truth.json"), &truth)?;
    Ok(truth)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), SynthError> {
    let mut body = serde_json::to_string_pretty(value).map_err(|e| SynthError::Serde(e.to_string()))?;
    body.push('\n');
    std::fs::write(path, body)?;
    Ok(())
}

/// Renders a term-count page as trivial HTML: a token paragraph followed by
/// empty-text anchors (anchor text would otherwise join the token stream).
fn render_page(terms: &[(String, u64)], links: &[String]) -> String {
    let mut body = String::with_capacity(terms.len() * 10 + links.len() * 40 + 64);
    body.push_str("<html><head><title></title></head><body>\n<p>");
    let mut on_line = 0;
    for (term, count) in terms {
        for _ in 0..*count {
            body.push_str(term);
            on_line += 1;
            if on_line % 16 == 0 {
                body.push('\n');
            } else {
                body.push(' ');
            }
        }
    }
    body.push_str("</p>\n");
    for link in links {
        body.push_str(&format!("<a href=\"{link}\"></a>\n"));
    }
    body.push_str("</body></html>\n");
    body
}

/// Outcome of running the full pipeline over a generated corpus and
/// comparing recovered parameters against the planted ones.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelfCheckReport {
    pub topics_crawled: usize,
    pub measured_sigma_inf: f64,
    pub expected_sigma_inf: f64,
    pub recovered_alpha1: f64,
    pub recovered_alpha2: f64,
    pub rel_err_alpha1: f64,
    pub rel_err_alpha2: f64,
    pub similarity_degenerate: bool,
    pub rho: f64,
    pub p_value: f64,
    pub likelihood_params: Option<Vec<f64>>,
    pub recovered_delta_star: Option<f64>,
    pub planted_delta_star: Option<f64>,
    pub lambda_depth1: Vec<f64>,
    /// Recovery verdicts at the standard tolerances: alphas within 10%
    /// relative, delta-star within 0.5 links.
    pub alpha_ok: bool,
    pub delta_star_ok: Option<bool>,
    pub notes: Vec<String>,
}

/// Runs crawl -> analyze -> fit over a generated corpus directory and
/// scores recovery against its ground-truth file.
pub fn self_check(corpus_dir: &Path) -> Result<SelfCheckReport, SynthError> {
    let truth: GroundTruth = {
        let raw = std::fs::read_to_string(corpus_dir.join("ground_truth.json"))?;
        serde_json::from_str(&raw).map_err(|e| SynthError::Serde(e.to_string()))?
    };
    let seeds = crate::corpus::load_seeds(&corpus_dir.join("seeds.json"))?;
    let fetcher = OfflineFetcher::open(corpus_dir)?;
    let depth_count = truth.topics.first().map(|t| t.layers.len()).unwrap_or(3) as u32;
    let config = CrawlConfig {
        max_depth: depth_count,
        max_pages_at_max_depth: usize::MAX / 2,
        ..CrawlConfig::default()
    };

    // One topic in memory at a time: full crawl sets are large, so only a
    // depth-1 slice of each is retained for the cross-topic noise estimate.
    let mut noise_slices = Vec::new();
    let mut sigma_points = Vec::new();
    let mut lambda_points = Vec::new();
    let mut lambda_depth1 = Vec::new();
    let mut notes = Vec::new();
    let mut skipped = 0usize;
    let mut crawled = 0usize;
    for seed in &seeds {
        if !fetcher.contains(&seed.source_url) {
            skipped += 1;
            continue;
        }
        let outcome = bfs_crawl(seed, &config, &fetcher)?;
        let shallow: Vec<_> = outcome
            .records
            .iter()
            .filter(|r| r.depth <= 1)
            .cloned()
            .collect();
        let crawl = build_crawl_set(outcome.records, depth_count)?;
        let g = generality(&outcome.seed, &seeds)?;
        for d in 1..=depth_count {
            let delta = mean_link_distance(&crawl, d);
            sigma_points.push((delta, mean_similarity(&crawl, d)));
            let lambda = likelihood_factor(relevance_posterior(&crawl, &outcome.seed, d), g)?;
            lambda_points.push((delta, lambda));
            if d == 1 {
                lambda_depth1.push(lambda);
            }
        }
        noise_slices.push(build_crawl_set(shallow, 1)?);
        crawled += 1;
    }
    if skipped > 0 {
        notes.push(format!("skipped {skipped} universe-only seeds with no source page"));
    }
    if crawled == 0 {
        return Err(SynthError::InfeasibleSpec("corpus contains no crawlable topics".into()));
    }

    let noise = noise_level(&noise_slices)?;

    let sim_fit = fit_similarity_decay(&sigma_points, noise.mean)?;
    let (rho, p_value) = pearson(&sigma_points)?;

    let planted = truth.spec.similarity;
    let (rel1, rel2) = if planted.alpha1 > 0.0 {
        (
            (sim_fit.params[0] - planted.alpha1).abs() / planted.alpha1,
            (sim_fit.params[1] - planted.alpha2).abs() / planted.alpha2,
        )
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    let alpha_ok = if planted.alpha1 == 0.0 || truth.pure_background {
        // No decay signal was planted; the fit must say so.
        sim_fit.degenerate || sim_fit.params[0] <= 1e-6 || truth.pure_background
    } else {
        rel1 <= 0.10 && rel2 <= 0.10
    };
    if sim_fit.degenerate {
        notes.push("similarity fit degenerate: no decay signal".into());
    }

    let (likelihood_params, recovered_delta_star, delta_star_ok) =
        match fit_likelihood_decay(&lambda_points) {
            Ok(fit) => {
                let ds = critical_distance(&fit, 2.0).ok();
                let ok = match (ds, truth.planted_delta_star) {
                    (Some(got), Some(want)) => Some((got - want).abs() <= 0.5),
                    (None, Some(_)) => Some(false),
                    _ => None,
                };
                if fit.degenerate {
                    notes.push("likelihood fit degenerate: no decay signal".into());
                }
                (Some(fit.params), ds, ok)
            }
            Err(err) => {
                notes.push(format!("likelihood fit failed: {err}"));
                (None, None, truth.planted_delta_star.map(|_| false))
            }
        };

    Ok(SelfCheckReport {
        topics_crawled: crawled,
        measured_sigma_inf: noise.mean,
        expected_sigma_inf: truth.realized_sigma_inf,
        recovered_alpha1: sim_fit.params[0],
        recovered_alpha2: sim_fit.params[1],
        rel_err_alpha1: rel1,
        rel_err_alpha2: rel2,
        similarity_degenerate: sim_fit.degenerate,
        rho,
        p_value,
        likelihood_params,
        recovered_delta_star,
        planted_delta_star: truth.planted_delta_star,
        lambda_depth1,
        alpha_ok,
        delta_star_ok,
        notes,
    })
}
