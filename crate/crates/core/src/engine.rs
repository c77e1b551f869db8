//! The loaded corpus, knowledge base and annotations, shared read-only by
//! every query.

use std::path::Path;

use crate::annotate::AnnotationStore;
use crate::corpus::{DocNo, InvertedIndex, Query, RankedList};
use crate::error::{Error, Result};
use crate::kb::KnowledgeBase;
use crate::par::Parallelism;
use crate::rerank::{self, RerankOutcome, RerankParams, UserFeedback};
use crate::select::{self, ConceptSelectionParams, ConceptSlate};
use crate::text::Tokenizer;

#[derive(Debug, Clone)]
pub struct Engine {
    index: InvertedIndex,
    kb: KnowledgeBase,
    annotations: AnnotationStore,
    parallelism: Parallelism,
}

impl Engine {
    pub fn new(index: InvertedIndex, kb: KnowledgeBase, annotations: AnnotationStore) -> Self {
        let parallelism = index.parallelism();
        Self {
            index,
            kb,
            annotations,
            parallelism,
        }
    }

    /// Annotates the corpus with the built-in dictionary annotator.
    pub fn annotated(index: InvertedIndex, kb: KnowledgeBase) -> Self {
        let annotations = AnnotationStore::annotate_corpus(&index, &kb, index.parallelism());
        Self::new(index, kb, annotations)
    }

    /// Loads corpus and KB files; annotations come from `annotations` when
    /// given, otherwise from the built-in annotator.
    pub fn load(corpus: &Path, kb: &Path, annotations: Option<&Path>, tokenizer: Tokenizer) -> Result<Self> {
        let index = InvertedIndex::from_path(corpus, tokenizer.clone())?;
        let kb = KnowledgeBase::from_path(kb, tokenizer)?;
        Ok(match annotations {
            Some(path) => {
                let store = AnnotationStore::load_path(path, &index, &kb)?;
                Self::new(index, kb, store)
            }
            None => Self::annotated(index, kb),
        })
    }

    pub fn with_parallelism(mut self, mode: Parallelism) -> Self {
        self.parallelism = mode;
        self.index = self.index.with_parallelism(mode);
        self
    }

    pub fn parallelism(&self) -> Parallelism {
        self.parallelism
    }

    pub fn index(&self) -> &InvertedIndex {
        &self.index
    }

    pub fn kb(&self) -> &KnowledgeBase {
        &self.kb
    }

    pub fn annotations(&self) -> &AnnotationStore {
        &self.annotations
    }

    pub fn tokenizer(&self) -> &Tokenizer {
        self.index.tokenizer()
    }

    pub fn query(&self, query_id: impl Into<String>, text: impl Into<String>) -> Query {
        Query::new(query_id, text, self.index.tokenizer())
    }

    pub(crate) fn resolve_ranking(&self, ranking: &RankedList) -> Result<Vec<(DocNo, f64)>> {
        ranking
            .entries
            .iter()
            .map(|e| {
                self.index
                    .doc_no(&e.doc_id)
                    .map(|d| (d, e.score))
                    .ok_or_else(|| Error::UnknownDoc(e.doc_id.clone()))
            })
            .collect()
    }

    pub fn search(&self, query: &Query, k: usize) -> RankedList {
        self.index.rank_initial(query, k)
    }

    pub fn suggest(&self, query: &Query, params: &ConceptSelectionParams) -> Result<ConceptSlate> {
        select::select_concepts(self, query, params)
    }

    pub fn rerank(&self, query: &Query, feedback: &UserFeedback, params: &RerankParams) -> Result<RerankOutcome> {
        rerank::rerank(self, query, feedback, params)
    }
}
