//! The concept knowledge base and its per-concept term weights from the
//! title, the article text and the anchor texts.

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::read_jsonl;
use crate::text::Tokenizer;
use crate::weight;

pub type ConceptNo = u32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Anchor {
    pub text: String,
    pub count: u32,
}

/// One line of a KB file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub concept_id: String,
    pub title: String,
    #[serde(default)]
    pub article_text: String,
    #[serde(default)]
    pub anchors: Vec<Anchor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KbStats {
    pub num_concepts: usize,
    pub avg_title_length: f64,
    pub avg_article_length: f64,
    /// Mean over every distinct anchor string of every concept.
    pub avg_anchor_length: f64,
}

/// A tokenized text unit.
#[derive(Debug, Clone, Default)]
pub(crate) struct Bag {
    pub tokens: Vec<String>,
    pub counts: HashMap<String, u32>,
}

impl Bag {
    fn new(tokens: Vec<String>) -> Self {
        let mut counts = HashMap::new();
        for t in &tokens {
            *counts.entry(t.clone()).or_insert(0) += 1;
        }
        Self { tokens, counts }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn tf(&self, term: &str) -> u32 {
        self.counts.get(term).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Entry {
    pub concept: Concept,
    pub title: Bag,
    pub article: Bag,
    /// Distinct anchor strings with at least one token, parallel to `anchor_counts`.
    pub anchors: Vec<Bag>,
    pub anchor_counts: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    entries: Vec<Entry>,
    lookup: HashMap<String, ConceptNo>,
    title_index: HashMap<String, Vec<ConceptNo>>,
    stats: KbStats,
    tokenizer: Tokenizer,
}

impl KnowledgeBase {
    pub fn build(concepts: Vec<Concept>, tokenizer: Tokenizer) -> Result<Self> {
        let numbered = concepts.into_iter().enumerate().map(|(i, c)| (i + 1, c)).collect();
        Self::build_named(numbered, "<memory>", tokenizer)
    }

    fn build_named(records: Vec<(usize, Concept)>, source_name: &str, tokenizer: Tokenizer) -> Result<Self> {
        let mut seen = HashMap::new();
        for (line, c) in &records {
            if c.title.trim().is_empty() {
                return Err(Error::EmptyTitle {
                    source_name: source_name.into(),
                    line: *line,
                    concept_id: c.concept_id.clone(),
                });
            }
            if let Some(a) = c.anchors.iter().find(|a| a.count == 0) {
                return Err(Error::Malformed {
                    source_name: source_name.into(),
                    line: *line,
                    message: format!("anchor {:?} has occurrence count 0", a.text),
                });
            }
            if seen.insert(c.concept_id.clone(), *line).is_some() {
                return Err(Error::DuplicateConceptId {
                    source_name: source_name.into(),
                    line: *line,
                    concept_id: c.concept_id.clone(),
                });
            }
        }

        let mut concepts: Vec<Concept> = records.into_iter().map(|(_, c)| c).collect();
        concepts.sort_by(|a, b| a.concept_id.cmp(&b.concept_id));

        let mut entries = Vec::with_capacity(concepts.len());
        let mut lookup = HashMap::with_capacity(concepts.len());
        let mut title_index: HashMap<String, Vec<ConceptNo>> = HashMap::new();
        let (mut title_total, mut article_total, mut anchor_total, mut anchor_n) = (0usize, 0usize, 0usize, 0usize);

        for (no, mut concept) in concepts.into_iter().enumerate() {
            let no = no as ConceptNo;
            // the same raw anchor string listed twice is one member of the anchor set
            let mut merged: BTreeMap<String, u32> = BTreeMap::new();
            for a in concept.anchors.drain(..) {
                *merged.entry(a.text).or_insert(0) += a.count;
            }
            concept.anchors = merged.into_iter().map(|(text, count)| Anchor { text, count }).collect();

            let title = Bag::new(tokenizer.tokenize(&concept.title));
            let article = Bag::new(tokenizer.tokenize(&concept.article_text));
            let mut anchors = Vec::new();
            let mut anchor_counts = Vec::new();
            for a in &concept.anchors {
                let bag = Bag::new(tokenizer.tokenize(&a.text));
                if bag.len() > 0 {
                    anchor_total += bag.len();
                    anchor_n += 1;
                    anchors.push(bag);
                    anchor_counts.push(a.count);
                }
            }
            title_total += title.len();
            article_total += article.len();
            for term in title.counts.keys() {
                title_index.entry(term.clone()).or_default().push(no);
            }
            lookup.insert(concept.concept_id.clone(), no);
            entries.push(Entry {
                concept,
                title,
                article,
                anchors,
                anchor_counts,
            });
        }
        for list in title_index.values_mut() {
            list.sort_unstable();
        }

        let mean = |total: usize, n: usize| if n == 0 { 0.0 } else { total as f64 / n as f64 };
        let stats = KbStats {
            num_concepts: entries.len(),
            avg_title_length: mean(title_total, entries.len()),
            avg_article_length: mean(article_total, entries.len()),
            avg_anchor_length: mean(anchor_total, anchor_n),
        };
        Ok(Self {
            entries,
            lookup,
            title_index,
            stats,
            tokenizer,
        })
    }

    pub fn from_reader(reader: impl BufRead, source_name: &str, tokenizer: Tokenizer) -> Result<Self> {
        let records = read_jsonl::<Concept>(reader, source_name)?;
        Self::build_named(records, source_name, tokenizer)
    }

    pub fn from_path(path: impl AsRef<Path>, tokenizer: Tokenizer) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(std::io::BufReader::new(file), &path.display().to_string(), tokenizer)
    }

    pub fn stats(&self) -> KbStats {
        self.stats
    }

    pub fn tokenizer(&self) -> &Tokenizer {
        &self.tokenizer
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn concept_no(&self, concept_id: &str) -> Option<ConceptNo> {
        self.lookup.get(concept_id).copied()
    }

    pub fn resolve(&self, concept_id: &str) -> Result<ConceptNo> {
        self.concept_no(concept_id)
            .ok_or_else(|| Error::UnknownConcept(concept_id.to_string()))
    }

    pub fn concept(&self, no: ConceptNo) -> &Concept {
        &self.entries[no as usize].concept
    }

    pub fn concepts(&self) -> impl Iterator<Item = &Concept> {
        self.entries.iter().map(|e| &e.concept)
    }

    pub(crate) fn entry(&self, no: ConceptNo) -> &Entry {
        &self.entries[no as usize]
    }

    /// Concepts whose tokenized title contains `term`.
    pub fn concepts_with_title_term(&self, term: &str) -> &[ConceptNo] {
        self.title_index.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn title_weight(&self, term: &str, no: ConceptNo) -> f64 {
        let title = &self.entry(no).title;
        weight::saturating(title.tf(term), title.len(), self.stats.avg_title_length)
    }

    pub fn article_weight(&self, term: &str, no: ConceptNo) -> f64 {
        let article = &self.entry(no).article;
        weight::saturating(article.tf(term), article.len(), self.stats.avg_article_length)
    }

    /// Sum of the saturating weight over the concept's distinct anchor strings.
    pub fn anchor_weight(&self, term: &str, no: ConceptNo) -> f64 {
        self.entry(no)
            .anchors
            .iter()
            .map(|a| weight::saturating(a.tf(term), a.len(), self.stats.avg_anchor_length))
            .sum()
    }

    pub fn title_term_weight(&self, term: &str, concept_id: &str) -> Result<f64> {
        Ok(self.title_weight(term, self.resolve(concept_id)?))
    }

    pub fn article_term_weight(&self, term: &str, concept_id: &str) -> Result<f64> {
        Ok(self.article_weight(term, self.resolve(concept_id)?))
    }

    pub fn anchor_term_weight(&self, term: &str, concept_id: &str) -> Result<f64> {
        Ok(self.anchor_weight(term, self.resolve(concept_id)?))
    }

    pub(crate) fn title_terms(&self, no: ConceptNo) -> impl Iterator<Item = &str> {
        self.entry(no).title.counts.keys().map(String::as_str)
    }

    pub(crate) fn article_terms(&self, no: ConceptNo) -> impl Iterator<Item = &str> {
        self.entry(no).article.counts.keys().map(String::as_str)
    }

    /// Distinct terms across all anchors of the concept.
    pub(crate) fn anchor_terms(&self, no: ConceptNo) -> Vec<&str> {
        let mut terms: Vec<&str> = self
            .entry(no)
            .anchors
            .iter()
            .flat_map(|a| a.counts.keys().map(String::as_str))
            .collect();
        terms.sort_unstable();
        terms.dedup();
        terms
    }
}
