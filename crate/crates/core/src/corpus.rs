//! Document ingest, the inverted index, and initial BM25 ranking.

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::read_jsonl;
use crate::par::{self, Parallelism};
use crate::text::Tokenizer;
use crate::weight;

/// Dense document number. Documents are numbered in ascending `doc_id`
/// order, so comparing numbers compares ids.
pub type DocNo = u32;
pub type TermId = u32;

/// One line of a corpus file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocRecord {
    pub doc_id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Document {
    pub doc_id: String,
    pub title: String,
    pub body: String,
    pub token_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorpusStats {
    pub num_docs: usize,
    /// `None` for an empty corpus.
    pub avg_doc_length: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: DocNo,
    pub tf: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub query_id: String,
    pub raw_text: String,
    pub term_counts: BTreeMap<String, u32>,
}

impl Query {
    pub fn new(query_id: impl Into<String>, raw_text: impl Into<String>, tokenizer: &Tokenizer) -> Self {
        let raw_text = raw_text.into();
        let mut term_counts = BTreeMap::new();
        for term in tokenizer.tokenize(&raw_text) {
            *term_counts.entry(term).or_insert(0) += 1;
        }
        Self {
            query_id: query_id.into(),
            raw_text,
            term_counts,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.term_counts.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub doc_id: String,
    pub score: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub entries: Vec<RankedEntry>,
}

impl RankedList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.doc_id.as_str())
    }
}

/// Sorts by descending score, then ascending document number.
pub(crate) fn sort_scored(scored: &mut [(DocNo, f64)]) {
    scored.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
}

#[derive(Debug, Clone)]
pub struct InvertedIndex {
    docs: Vec<Document>,
    doc_lookup: HashMap<String, DocNo>,
    vocab: Vec<String>,
    term_lookup: HashMap<String, TermId>,
    postings: Vec<Vec<Posting>>,
    // per document, (term, tf) sorted by term id
    forward: Vec<Vec<(TermId, u32)>>,
    stats: CorpusStats,
    tokenizer: Tokenizer,
    bm25: Bm25Params,
    parallelism: Parallelism,
}

impl InvertedIndex {
    /// Builds the index. `records` are in input order; duplicate ids are
    /// reported with their 1-based position.
    pub fn build(records: Vec<DocRecord>, tokenizer: Tokenizer) -> Result<Self> {
        Self::build_named(records.into_iter().enumerate().map(|(i, r)| (i + 1, r)).collect(), "<memory>", tokenizer)
    }

    fn build_named(records: Vec<(usize, DocRecord)>, source_name: &str, tokenizer: Tokenizer) -> Result<Self> {
        let mut seen: HashMap<&str, usize> = HashMap::with_capacity(records.len());
        for (line, rec) in &records {
            if seen.insert(rec.doc_id.as_str(), *line).is_some() {
                return Err(Error::DuplicateDocId {
                    source_name: source_name.to_string(),
                    line: *line,
                    doc_id: rec.doc_id.clone(),
                });
            }
        }
        drop(seen);

        let mut records: Vec<DocRecord> = records.into_iter().map(|(_, r)| r).collect();
        records.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));

        let tokenized = par::map(Parallelism::Parallel, &records, |r| {
            tokenizer.tokenize(&format!("{} {}", r.title, r.body))
        });

        let mut vocab = Vec::new();
        let mut term_lookup: HashMap<String, TermId> = HashMap::new();
        let mut postings: Vec<Vec<Posting>> = Vec::new();
        let mut forward = Vec::with_capacity(records.len());
        let mut docs = Vec::with_capacity(records.len());
        let mut doc_lookup = HashMap::with_capacity(records.len());
        let mut total_len = 0usize;

        for (doc_no, (rec, tokens)) in records.into_iter().zip(tokenized).enumerate() {
            let doc_no = doc_no as DocNo;
            let mut counts: HashMap<TermId, u32> = HashMap::new();
            for tok in &tokens {
                let id = match term_lookup.get(tok) {
                    Some(&id) => id,
                    None => {
                        let id = vocab.len() as TermId;
                        vocab.push(tok.clone());
                        term_lookup.insert(tok.clone(), id);
                        postings.push(Vec::new());
                        id
                    }
                };
                *counts.entry(id).or_insert(0) += 1;
            }
            let mut fwd: Vec<(TermId, u32)> = counts.into_iter().collect();
            fwd.sort_unstable();
            for &(term, tf) in &fwd {
                postings[term as usize].push(Posting { doc: doc_no, tf });
            }
            forward.push(fwd);
            total_len += tokens.len();
            doc_lookup.insert(rec.doc_id.clone(), doc_no);
            docs.push(Document {
                doc_id: rec.doc_id,
                title: rec.title,
                body: rec.body,
                token_count: tokens.len(),
            });
        }

        let stats = CorpusStats {
            num_docs: docs.len(),
            avg_doc_length: (!docs.is_empty()).then(|| total_len as f64 / docs.len() as f64),
        };
        Ok(Self {
            docs,
            doc_lookup,
            vocab,
            term_lookup,
            postings,
            forward,
            stats,
            tokenizer,
            bm25: Bm25Params::default(),
            parallelism: Parallelism::default(),
        })
    }

    pub fn from_reader(reader: impl BufRead, source_name: &str, tokenizer: Tokenizer) -> Result<Self> {
        let records = read_jsonl::<DocRecord>(reader, source_name)?;
        Self::build_named(records, source_name, tokenizer)
    }

    pub fn from_path(path: impl AsRef<Path>, tokenizer: Tokenizer) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(std::io::BufReader::new(file), &path.display().to_string(), tokenizer)
    }

    pub fn with_bm25(mut self, params: Bm25Params) -> Self {
        self.bm25 = params;
        self
    }

    pub fn with_parallelism(mut self, mode: Parallelism) -> Self {
        self.parallelism = mode;
        self
    }

    pub fn parallelism(&self) -> Parallelism {
        self.parallelism
    }

    pub fn bm25_params(&self) -> Bm25Params {
        self.bm25
    }

    pub fn stats(&self) -> CorpusStats {
        self.stats
    }

    pub fn tokenizer(&self) -> &Tokenizer {
        &self.tokenizer
    }

    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn documents(&self) -> &[Document] {
        &self.docs
    }

    pub fn document(&self, doc: DocNo) -> &Document {
        &self.docs[doc as usize]
    }

    pub fn doc_no(&self, doc_id: &str) -> Option<DocNo> {
        self.doc_lookup.get(doc_id).copied()
    }

    pub fn doc_id(&self, doc: DocNo) -> &str {
        &self.docs[doc as usize].doc_id
    }

    pub fn doc_length(&self, doc: DocNo) -> usize {
        self.docs[doc as usize].token_count
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.stats.avg_doc_length.unwrap_or(0.0)
    }

    pub fn vocabulary_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn term(&self, id: TermId) -> &str {
        &self.vocab[id as usize]
    }

    pub fn term_id(&self, term: &str) -> Option<TermId> {
        self.term_lookup.get(term).copied()
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.term_id(term).map_or(&[], |id| &self.postings[id as usize])
    }

    pub fn document_frequency(&self, term: &str) -> usize {
        self.postings(term).len()
    }

    /// `(term, tf)` pairs of a document, sorted by term id.
    pub fn doc_terms(&self, doc: DocNo) -> &[(TermId, u32)] {
        &self.forward[doc as usize]
    }

    pub fn tf(&self, term: TermId, doc: DocNo) -> u32 {
        let fwd = &self.forward[doc as usize];
        fwd.binary_search_by_key(&term, |&(t, _)| t).map_or(0, |i| fwd[i].1)
    }

    pub fn term_tf(&self, term: &str, doc: DocNo) -> u32 {
        self.term_id(term).map_or(0, |id| self.tf(id, doc))
    }

    pub fn idf_for_df(&self, df: usize) -> f64 {
        let n = self.stats.num_docs as f64;
        let df = df as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// `ln(1 + (N - df + 0.5) / (df + 0.5))`; unseen terms get the `df = 0` value.
    pub fn idf(&self, term: &str) -> f64 {
        self.idf_for_df(self.document_frequency(term))
    }

    pub fn idf_id(&self, term: TermId) -> f64 {
        self.idf_for_df(self.postings[term as usize].len())
    }

    pub fn term_doc_weight_id(&self, term: TermId, doc: DocNo) -> f64 {
        weight::saturating(self.tf(term, doc), self.doc_length(doc), self.avg_doc_length())
    }

    /// Saturating weight of `term` in `doc`, in `[0, 1)`.
    pub fn term_doc_weight(&self, term: &str, doc: DocNo) -> f64 {
        weight::saturating(self.term_tf(term, doc), self.doc_length(doc), self.avg_doc_length())
    }

    pub(crate) fn bm25_doc(&self, query: &Query, doc: DocNo) -> f64 {
        let Bm25Params { k1, b } = self.bm25;
        let norm = k1 * (1.0 - b + b * weight::length_ratio(self.doc_length(doc), self.avg_doc_length()));
        let mut score = 0.0;
        for (term, &qtf) in &query.term_counts {
            let Some(id) = self.term_id(term) else { continue };
            let tf = self.tf(id, doc);
            if tf == 0 {
                continue;
            }
            let tf = tf as f64;
            score += qtf as f64 * self.idf_id(id) * tf / (tf + norm);
        }
        score
    }

    pub fn bm25_score(&self, query: &Query, doc_id: &str) -> Result<f64> {
        let doc = self.doc_no(doc_id).ok_or_else(|| Error::UnknownDoc(doc_id.to_string()))?;
        Ok(self.bm25_doc(query, doc))
    }

    /// Documents containing at least one query term, scored and sorted.
    pub(crate) fn rank_docs(&self, query: &Query, k: usize) -> Vec<(DocNo, f64)> {
        if k == 0 {
            return Vec::new();
        }
        let mut candidates: Vec<DocNo> = query
            .term_counts
            .keys()
            .flat_map(|t| self.postings(t).iter().map(|p| p.doc))
            .collect();
        candidates.sort_unstable();
        candidates.dedup();
        let scores = par::map(self.parallelism, &candidates, |&d| self.bm25_doc(query, d));
        let mut scored: Vec<(DocNo, f64)> = candidates.into_iter().zip(scores).collect();
        sort_scored(&mut scored);
        scored.truncate(k);
        scored
    }

    /// Top-`k` documents by BM25, ties by ascending `doc_id`. Only documents
    /// sharing a term with the query are retrieved.
    pub fn rank_initial(&self, query: &Query, k: usize) -> RankedList {
        self.to_ranked_list(&self.rank_docs(query, k))
    }

    pub(crate) fn to_ranked_list(&self, scored: &[(DocNo, f64)]) -> RankedList {
        RankedList {
            entries: scored
                .iter()
                .enumerate()
                .map(|(i, &(doc, score))| RankedEntry {
                    doc_id: self.doc_id(doc).to_string(),
                    score,
                    rank: i + 1,
                })
                .collect(),
        }
    }
}
