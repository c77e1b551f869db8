//! Tokenization shared by the corpus, the knowledge base and the annotator.
//!
//! Text is lowercased and split on every non-alphanumeric character.
//! Stopwords are removed after splitting; stemming is off unless enabled.

use std::collections::HashSet;
use std::io::BufRead;
use std::path::Path;

use rust_stemmers::{Algorithm, Stemmer};

use crate::error::{Error, Result};

/// Small English stopword list used when no list is configured.
pub const DEFAULT_STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are",
    "as", "at", "be", "because", "been", "before", "being", "below", "between", "both", "but",
    "by", "can", "could", "did", "do", "does", "doing", "down", "during", "each", "few", "for",
    "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers", "herself",
    "him", "himself", "his", "how", "i", "if", "in", "into", "is", "it", "its", "itself", "just",
    "me", "more", "most", "my", "myself", "no", "nor", "not", "now", "of", "off", "on", "once",
    "only", "or", "other", "our", "ours", "ourselves", "out", "over", "own", "same", "she",
    "should", "so", "some", "such", "than", "that", "the", "their", "theirs", "them",
    "themselves", "then", "there", "these", "they", "this", "those", "through", "to", "too",
    "under", "until", "up", "very", "was", "we", "were", "what", "when", "where", "which",
    "while", "who", "whom", "why", "will", "with", "would", "you", "your", "yours", "yourself",
    "yourselves",
];

#[derive(Clone)]
pub struct Tokenizer {
    stopwords: HashSet<String>,
    stem: bool,
}

impl std::fmt::Debug for Tokenizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tokenizer")
            .field("stopwords", &self.stopwords.len())
            .field("stem", &self.stem)
            .finish()
    }
}

impl Default for Tokenizer {
    fn default() -> Self {
        Self::new(DEFAULT_STOPWORDS.iter().map(|s| s.to_string()))
    }
}

impl Tokenizer {
    pub fn new(stopwords: impl IntoIterator<Item = String>) -> Self {
        Self {
            stopwords: stopwords.into_iter().map(|s| s.to_lowercase()).collect(),
            stem: false,
        }
    }

    /// A tokenizer that keeps every term.
    pub fn without_stopwords() -> Self {
        Self::new(std::iter::empty())
    }

    /// Reads a stopword list: one term per line, blank lines and `#` comments skipped.
    pub fn from_stopword_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut words = Vec::new();
        for line in std::io::BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let word = line.trim();
            if !word.is_empty() && !word.starts_with('#') {
                words.push(word.to_string());
            }
        }
        Ok(Self::new(words))
    }

    pub fn with_stemming(mut self, stem: bool) -> Self {
        self.stem = stem;
        self
    }

    pub fn stems(&self) -> bool {
        self.stem
    }

    pub fn is_stopword(&self, term: &str) -> bool {
        self.stopwords.contains(term)
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let stemmer = self.stem.then(|| Stemmer::create(Algorithm::English));
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|raw| !raw.is_empty())
            .map(str::to_lowercase)
            .filter(|term| !self.stopwords.contains(term))
            .map(|term| match &stemmer {
                Some(s) => s.stem(&term).into_owned(),
                None => term,
            })
            .collect()
    }
}
