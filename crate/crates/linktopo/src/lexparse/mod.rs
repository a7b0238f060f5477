//! HTML link extraction, tokenization, and Porter stemming.

mod porter;
mod scan;

pub use porter::porter_stem;

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use url::Url;

use crate::corpus::normalize_url;
use scan::{scan, Event};

/// Ordered lowercase alphabetic tokens, stop words removed, not yet stemmed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenStream(Vec<String>);

impl TokenStream {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl From<Vec<String>> for TokenStream {
    fn from(tokens: Vec<String>) -> Self {
        TokenStream(tokens)
    }
}

/// The stop-word list. The default list of 570 common English words ships
/// with the crate so runs are reproducible; it can be overridden from a file
/// with one word per line.
#[derive(Debug, Clone)]
pub struct StopList {
    words: HashSet<String>,
}

impl Default for StopList {
    fn default() -> Self {
        Self::from_lines(include_str!("stopwords.txt"))
    }
}

impl StopList {
    pub fn from_lines(lines: &str) -> Self {
        StopList {
            words: lines
                .lines()
                .map(|l| l.trim().to_ascii_lowercase())
                .filter(|l| !l.is_empty())
                .collect(),
        }
    }

    pub fn from_file(path: &Path) -> std::io::Result<Self> {
        Ok(Self::from_lines(&std::fs::read_to_string(path)?))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Extracts anchor targets in document order, resolved against `base` and
/// normalized. Duplicates keep their first occurrence; fragment-only links
/// and non-http(s) schemes are dropped. Never fails on malformed HTML.
pub fn extract_links(html: &str, base: &Url) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut links = Vec::new();
    for event in scan(html) {
        let Event::Open(tag) = event else { continue };
        if tag.name != "a" {
            continue;
        }
        let Some(href) = tag.attr("href") else { continue };
        // A fragment-only reference points inside the current page.
        if href.trim().starts_with('#') {
            continue;
        }
        let Ok(normalized) = normalize_url(href, Some(base)) else {
            continue;
        };
        if !normalized.starts_with("http://") && !normalized.starts_with("https://") {
            continue;
        }
        if seen.insert(normalized.clone()) {
            links.push(normalized);
        }
    }
    links
}

/// Tokenizes the visible text of a page: markup, script, and style content
/// removed, split on non-alphabetic characters, lowercased, with tokens
/// shorter than three characters and stop words dropped. Title and meta
/// description text are included; attribute text such as `alt` is not.
pub fn tokenize(html: &str, stop: &StopList) -> TokenStream {
    let mut tokens = Vec::new();
    for event in scan(html) {
        match event {
            Event::Text(text) => split_tokens(&text, stop, &mut tokens),
            Event::Open(tag) if tag.name == "meta" => {
                let is_description = tag
                    .attr("name")
                    .map(|n| n.eq_ignore_ascii_case("description"))
                    .unwrap_or(false);
                if is_description {
                    if let Some(content) = tag.attr("content") {
                        split_tokens(content, stop, &mut tokens);
                    }
                }
            }
            _ => {}
        }
    }
    TokenStream(tokens)
}

fn split_tokens(text: &str, stop: &StopList, out: &mut Vec<String>) {
    for raw in text.split(|c: char| !c.is_ascii_alphabetic()) {
        if raw.len() < 3 {
            continue;
        }
        let token = raw.to_ascii_lowercase();
        if !stop.contains(&token) {
            out.push(token);
        }
    }
}

/// Stems every token and counts occurrences per stem.
pub fn term_counts(stream: &TokenStream) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for token in stream.iter() {
        *counts.entry(porter_stem(token)).or_insert(0) += 1;
    }
    counts
}

/// Tokenize-and-stem convenience for one page.
pub fn page_terms(html: &str, stop: &StopList) -> BTreeMap<String, u64> {
    term_counts(&tokenize(html, stop))
}
