//! Toolkit for measuring how lexical content and topical relevance decay
//! with link distance in web-like hypertext graphs.
//!
//! The pipeline: crawl a breadth-first neighborhood around topic seeds
//! ([`crawler`]), extract links and stemmed terms ([`lexparse`]), weight
//! pages with depth-scoped TFIDF and compare them by cosine similarity
//! ([`vectorspace`]), aggregate per-topic link-distance / similarity /
//! relevance-likelihood statistics ([`linkmetrics`]), and fit stretched
//! exponential decay models to the result ([`fitting`]).
//!
//! [`synthweb`] generates synthetic corpora with planted decay parameters so
//! that the whole pipeline can be validated by parameter recovery, with no
//! live network access.

pub mod corpus;
pub mod crawler;
pub mod fitting;
pub mod lexparse;
pub mod linkmetrics;
pub mod synthweb;
pub mod vectorspace;
