//! Concept annotation of documents and the concept-in-document weights.
//!
//! The built-in annotator is a dictionary matcher: concept titles and anchor
//! strings are tokenized into surface forms, and each document is scanned
//! left to right taking the longest surface form that starts at the current
//! token. A surface form shared by several concepts resolves to the concept
//! with the highest anchor count for it (titles count once), ties going to
//! the smaller concept id.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{DocNo, Document, InvertedIndex};
use crate::error::{Error, Result};
use crate::io::{read_jsonl, write_jsonl};
use crate::kb::{ConceptNo, KnowledgeBase};
use crate::par::{self, Parallelism};
use crate::weight;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub doc_id: String,
    pub concept_id: String,
    pub freq: u32,
}

#[derive(Debug, Clone)]
pub struct Annotator {
    dictionary: HashMap<Vec<String>, ConceptNo>,
    max_len: usize,
}

impl Annotator {
    pub fn new(kb: &KnowledgeBase) -> Self {
        // (surface form, concept) -> commonness
        let mut commonness: HashMap<(Vec<String>, ConceptNo), u64> = HashMap::new();
        for no in 0..kb.len() as ConceptNo {
            let entry = kb.entry(no);
            for (bag, &count) in entry.anchors.iter().zip(&entry.anchor_counts) {
                *commonness.entry((bag.tokens.clone(), no)).or_insert(0) += count as u64;
            }
            if !entry.title.tokens.is_empty() {
                commonness.entry((entry.title.tokens.clone(), no)).or_insert(1);
            }
        }

        let mut best: HashMap<Vec<String>, (u64, ConceptNo)> = HashMap::new();
        for ((form, no), count) in commonness {
            match best.get_mut(&form) {
                Some(cur) => {
                    if count > cur.0 || (count == cur.0 && no < cur.1) {
                        *cur = (count, no);
                    }
                }
                None => {
                    best.insert(form, (count, no));
                }
            }
        }
        let max_len = best.keys().map(Vec::len).max().unwrap_or(0);
        Self {
            dictionary: best.into_iter().map(|(form, (_, no))| (form, no)).collect(),
            max_len,
        }
    }

    pub fn dictionary_size(&self) -> usize {
        self.dictionary.len()
    }

    /// Greedy longest-match scan; returns `(concept, freq)` sorted by concept.
    pub fn annotate_tokens(&self, tokens: &[String]) -> Vec<(ConceptNo, u32)> {
        let mut freq: HashMap<ConceptNo, u32> = HashMap::new();
        let mut i = 0;
        while i < tokens.len() {
            let longest = self.max_len.min(tokens.len() - i);
            let hit = (1..=longest)
                .rev()
                .find_map(|len| self.dictionary.get(&tokens[i..i + len]).map(|&c| (c, len)));
            match hit {
                Some((concept, len)) => {
                    *freq.entry(concept).or_insert(0) += 1;
                    i += len;
                }
                None => i += 1,
            }
        }
        let mut out: Vec<_> = freq.into_iter().collect();
        out.sort_unstable();
        out
    }

    pub fn annotate_document(&self, kb: &KnowledgeBase, doc: &Document) -> Vec<Annotation> {
        let tokens = kb.tokenizer().tokenize(&format!("{} {}", doc.title, doc.body));
        self.annotate_tokens(&tokens)
            .into_iter()
            .map(|(c, freq)| Annotation {
                doc_id: doc.doc_id.clone(),
                concept_id: kb.concept(c).concept_id.clone(),
                freq,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConceptHit {
    pub concept: ConceptNo,
    pub freq: u32,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DocHit {
    pub doc: DocNo,
    pub freq: u32,
    pub weight: f64,
}

/// Concept annotations indexed both ways, with the concept-in-document
/// weight precomputed from the corpus length statistics.
#[derive(Debug, Clone, Default)]
pub struct AnnotationStore {
    by_doc: Vec<Vec<ConceptHit>>,
    by_concept: Vec<Vec<DocHit>>,
}

impl AnnotationStore {
    /// `triples` must have unique `(doc, concept)` pairs and `freq >= 1`.
    fn from_triples(index: &InvertedIndex, kb: &KnowledgeBase, mut triples: Vec<(DocNo, ConceptNo, u32)>) -> Self {
        triples.sort_unstable();
        let avg = index.avg_doc_length();
        let mut by_doc = vec![Vec::new(); index.num_docs()];
        let mut by_concept = vec![Vec::new(); kb.len()];
        for (doc, concept, freq) in triples {
            let weight = weight::saturating(freq, index.doc_length(doc), avg);
            by_doc[doc as usize].push(ConceptHit { concept, freq, weight });
            by_concept[concept as usize].push(DocHit { doc, freq, weight });
        }
        Self { by_doc, by_concept }
    }

    /// Runs the dictionary annotator over every document.
    pub fn annotate_corpus(index: &InvertedIndex, kb: &KnowledgeBase, mode: Parallelism) -> Self {
        let annotator = Annotator::new(kb);
        let tokenizer = kb.tokenizer();
        let per_doc = par::map(mode, index.documents(), |doc| {
            annotator.annotate_tokens(&tokenizer.tokenize(&format!("{} {}", doc.title, doc.body)))
        });
        let triples = per_doc
            .into_iter()
            .enumerate()
            .flat_map(|(d, hits)| hits.into_iter().map(move |(c, f)| (d as DocNo, c, f)))
            .collect();
        Self::from_triples(index, kb, triples)
    }

    pub fn from_annotations(index: &InvertedIndex, kb: &KnowledgeBase, annotations: &[Annotation]) -> Result<Self> {
        let numbered = annotations.iter().cloned().enumerate().map(|(i, a)| (i + 1, a)).collect();
        Self::resolve(index, kb, numbered, "<memory>")
    }

    fn resolve(
        index: &InvertedIndex,
        kb: &KnowledgeBase,
        records: Vec<(usize, Annotation)>,
        source_name: &str,
    ) -> Result<Self> {
        let unresolved = |line: usize, message: String| Error::UnresolvedAnnotation {
            source_name: source_name.to_string(),
            line,
            message,
        };
        let mut seen = HashMap::with_capacity(records.len());
        let mut triples = Vec::with_capacity(records.len());
        for (line, a) in records {
            let doc = index
                .doc_no(&a.doc_id)
                .ok_or_else(|| unresolved(line, format!("unknown doc_id {:?}", a.doc_id)))?;
            let concept = kb
                .concept_no(&a.concept_id)
                .ok_or_else(|| unresolved(line, format!("unknown concept_id {:?}", a.concept_id)))?;
            if a.freq == 0 {
                return Err(Error::Malformed {
                    source_name: source_name.to_string(),
                    line,
                    message: "freq must be at least 1".into(),
                });
            }
            if seen.insert((doc, concept), line).is_some() {
                return Err(Error::Malformed {
                    source_name: source_name.to_string(),
                    line,
                    message: format!("duplicate annotation ({:?}, {:?})", a.doc_id, a.concept_id),
                });
            }
            triples.push((doc, concept, a.freq));
        }
        Ok(Self::from_triples(index, kb, triples))
    }

    pub fn load(reader: impl BufRead, source_name: &str, index: &InvertedIndex, kb: &KnowledgeBase) -> Result<Self> {
        let records = read_jsonl::<Annotation>(reader, source_name)?;
        Self::resolve(index, kb, records, source_name)
    }

    pub fn load_path(path: impl AsRef<Path>, index: &InvertedIndex, kb: &KnowledgeBase) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::load(std::io::BufReader::new(file), &path.display().to_string(), index, kb)
    }

    /// All annotations ordered by `(doc_id, concept_id)`.
    pub fn annotations(&self, index: &InvertedIndex, kb: &KnowledgeBase) -> Vec<Annotation> {
        self.by_doc
            .iter()
            .enumerate()
            .flat_map(|(d, hits)| {
                hits.iter().map(move |h| Annotation {
                    doc_id: index.doc_id(d as DocNo).to_string(),
                    concept_id: kb.concept(h.concept).concept_id.clone(),
                    freq: h.freq,
                })
            })
            .collect()
    }

    pub fn export(&self, writer: impl Write, index: &InvertedIndex, kb: &KnowledgeBase) -> std::io::Result<()> {
        write_jsonl(writer, &self.annotations(index, kb))
    }

    pub fn len(&self) -> usize {
        self.by_doc.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.by_doc.iter().all(Vec::is_empty)
    }

    pub fn by_doc(&self, doc: DocNo) -> &[ConceptHit] {
        self.by_doc.get(doc as usize).map_or(&[], Vec::as_slice)
    }

    /// The documents annotated with `concept`.
    pub fn by_concept(&self, concept: ConceptNo) -> &[DocHit] {
        self.by_concept.get(concept as usize).map_or(&[], Vec::as_slice)
    }

    /// Saturating weight of the concept's annotation frequency in the
    /// document; 0 when the pair is unannotated.
    pub fn concept_doc_weight(&self, concept: ConceptNo, doc: DocNo) -> f64 {
        let hits = self.by_doc(doc);
        hits.binary_search_by_key(&concept, |h| h.concept)
            .map_or(0.0, |i| hits[i].weight)
    }

    /// Sum over the concept's related documents of
    /// `w(term, d) * w(concept, d)`.
    pub fn related_docs_term_weight(&self, index: &InvertedIndex, term: &str, concept: ConceptNo) -> f64 {
        let Some(term) = index.term_id(term) else { return 0.0 };
        self.by_concept(concept)
            .iter()
            .map(|h| index.term_doc_weight_id(term, h.doc) * h.weight)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DocRecord;
    use crate::kb::{Anchor, Concept};
    use crate::text::Tokenizer;

    fn doc(id: &str, body: &str) -> DocRecord {
        DocRecord {
            doc_id: id.into(),
            title: String::new(),
            body: body.into(),
        }
    }

    fn concept(id: &str, title: &str, anchors: &[(&str, u32)]) -> Concept {
        Concept {
            concept_id: id.into(),
            title: title.into(),
            article_text: String::new(),
            anchors: anchors
                .iter()
                .map(|&(text, count)| Anchor { text: text.into(), count })
                .collect(),
            url: None,
        }
    }

    fn kb(concepts: Vec<Concept>) -> KnowledgeBase {
        KnowledgeBase::build(concepts, Tokenizer::default()).unwrap()
    }

    #[test]
    fn counts_repeated_mentions() {
        let kb = kb(vec![concept("Trade_secret", "Trade Secret", &[])]);
        let d = Document {
            doc_id: "d1".into(),
            title: "Protecting a trade secret".into(),
            body: "A TRADE SECRET is not a patent; trade is fine.".into(),
            token_count: 0,
        };
        let ann = Annotator::new(&kb).annotate_document(&kb, &d);
        assert_eq!(
            ann,
            vec![Annotation { doc_id: "d1".into(), concept_id: "Trade_secret".into(), freq: 2 }]
        );
    }

    #[test]
    fn no_shared_strings() {
        let kb = kb(vec![concept("a", "Trade Secret", &[("secrets", 3)])]);
        let tokens = Tokenizer::default().tokenize("nothing relevant here");
        assert!(Annotator::new(&kb).annotate_tokens(&tokens).is_empty());
    }

    #[test]
    fn longest_match_wins() {
        let kb = kb(vec![
            concept("Tire", "Tire", &[("tire", 50)]),
            concept("Tire_recycling", "Tire recycling", &[]),
        ]);
        let tokens = Tokenizer::default().tokenize("Tire recycling plants");
        let hits = Annotator::new(&kb).annotate_tokens(&tokens);
        assert_eq!(hits, vec![(kb.concept_no("Tire_recycling").unwrap(), 1)]);
    }

    #[test]
    fn commonness_disambiguates() {
        let kb = kb(vec![
            concept("Ford_Motor", "Ford Motor Company", &[("Ford", 40)]),
            concept("Gerald_Ford", "Gerald Ford", &[("Ford", 12)]),
            concept("Ford_River", "Ford", &[]),
        ]);
        let tokens = Tokenizer::default().tokenize("ford");
        assert_eq!(
            Annotator::new(&kb).annotate_tokens(&tokens),
            vec![(kb.concept_no("Ford_Motor").unwrap(), 1)]
        );

        let tie = self::kb(vec![concept("b", "Mercury", &[]), concept("a", "Mercury", &[])]);
        let tokens = Tokenizer::default().tokenize("mercury");
        assert_eq!(Annotator::new(&tie).annotate_tokens(&tokens), vec![(0, 1)]);
    }

    #[test]
    fn stopword_only_entries_are_ignored() {
        let kb = kb(vec![concept("The_The", "The The", &[("the", 100)])]);
        assert_eq!(Annotator::new(&kb).dictionary_size(), 0);
    }

    fn fixture() -> (InvertedIndex, KnowledgeBase) {
        let index = InvertedIndex::build(
            vec![doc("d1", "apple apple pear"), doc("d2", "pear plum"), doc("d3", "kiwi")],
            Tokenizer::default(),
        )
        .unwrap();
        let kb = kb(vec![concept("fruit", "Fruit", &[]), concept("tree", "Tree", &[])]);
        (index, kb)
    }

    #[test]
    fn load_and_export_round_trip() {
        let (index, kb) = fixture();
        let input = "{\"doc_id\":\"d2\",\"concept_id\":\"tree\",\"freq\":1}\n{\"doc_id\":\"d1\",\"concept_id\":\"fruit\",\"freq\":3}\n{\"doc_id\":\"d1\",\"concept_id\":\"tree\",\"freq\":2}\n";
        let store = AnnotationStore::load(input.as_bytes(), "ann", &index, &kb).unwrap();
        let mut first = Vec::new();
        store.export(&mut first, &index, &kb).unwrap();
        let again = AnnotationStore::load(first.as_slice(), "ann", &index, &kb).unwrap();
        let mut second = Vec::new();
        again.export(&mut second, &index, &kb).unwrap();
        assert_eq!(first, second);
        assert_eq!(store.len(), 3);
        assert_eq!(store.by_concept(1).iter().map(|h| h.doc).collect::<Vec<_>>(), [0, 1]);
    }

    #[test]
    fn load_errors() {
        let (index, kb) = fixture();
        let empty = AnnotationStore::load("".as_bytes(), "ann", &index, &kb).unwrap();
        assert!(empty.is_empty());

        let bad = "{\"doc_id\":\"d1\",\"concept_id\":\"fruit\",\"freq\":1}\n{\"doc_id\":\"d1\",\"concept_id\":\"ghost\",\"freq\":1}\n";
        let err = AnnotationStore::load(bad.as_bytes(), "ann", &index, &kb).unwrap_err();
        assert!(matches!(err, Error::UnresolvedAnnotation { line: 2, .. }), "{err}");
        assert!(err.to_string().contains("ghost"));

        let bad_doc = "{\"doc_id\":\"d9\",\"concept_id\":\"fruit\",\"freq\":1}\n";
        assert!(AnnotationStore::load(bad_doc.as_bytes(), "ann", &index, &kb).is_err());
    }

    #[test]
    fn concept_doc_weight_values() {
        // lengths 3, 2, 1 -> avg 2
        let (index, kb) = fixture();
        let anns = vec![
            Annotation { doc_id: "d2".into(), concept_id: "fruit".into(), freq: 2 },
            Annotation { doc_id: "d1".into(), concept_id: "fruit".into(), freq: 2 },
        ];
        let store = AnnotationStore::from_annotations(&index, &kb, &anns).unwrap();
        assert_eq!(store.concept_doc_weight(0, 1), 0.5);
        assert!((store.concept_doc_weight(0, 0) - 2.0 / (2.5 + 1.5 * 1.5)).abs() < 1e-15);
        assert_eq!(store.concept_doc_weight(1, 1), 0.0);
        assert_eq!(store.concept_doc_weight(0, 2), 0.0);
    }

    #[test]
    fn related_docs_weight() {
        let (index, kb) = fixture();
        let anns = vec![Annotation { doc_id: "d2".into(), concept_id: "fruit".into(), freq: 2 }];
        let store = AnnotationStore::from_annotations(&index, &kb, &anns).unwrap();
        // d2 = "pear plum", length 2 = avg: w(pear, d2) = 1/3, w(fruit, d2) = 0.5
        let w = store.related_docs_term_weight(&index, "pear", 0);
        assert!((w - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(store.related_docs_term_weight(&index, "pear", 1), 0.0);
        assert_eq!(store.related_docs_term_weight(&index, "kiwi", 0), 0.0);
    }

    #[test]
    fn annotate_corpus_modes_agree() {
        let (index, kb) = fixture();
        let kb2 = self::kb(vec![concept("fruit", "Pear", &[("apple", 2)]), concept("tree", "Plum", &[])]);
        let seq = AnnotationStore::annotate_corpus(&index, &kb2, Parallelism::Sequential);
        let par = AnnotationStore::annotate_corpus(&index, &kb2, Parallelism::Parallel);
        assert_eq!(seq.annotations(&index, &kb2), par.annotations(&index, &kb2));
        assert_eq!(seq.by_doc(0).iter().map(|h| (h.concept, h.freq)).collect::<Vec<_>>(), [(0, 3)]);
        let _ = kb;
    }
}
