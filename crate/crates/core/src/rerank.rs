//! Document re-ranking from user-selected concepts.
//!
//! Six evidence columns are computed for every document in the re-rank pool:
//! the initial BM25 score, concept match against the document annotations,
//! and four relevance-model scores (concept titles, articles, anchor texts,
//! related documents). Each column is standardized over the pool and the
//! columns are fused with weights `(1, betas...)`.

use std::collections::{BTreeSet, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::corpus::{sort_scored, DocNo, Query, RankedEntry, RankedList, TermId};
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::fusion;
use crate::io::write_jsonl;
use crate::kb::ConceptNo;
use crate::par;
use crate::select::Source;
use crate::weight;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserFeedback {
    pub query_id: String,
    pub selected_concepts: BTreeSet<String>,
}

impl UserFeedback {
    pub fn new(query_id: impl Into<String>, selected: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            query_id: query_id.into(),
            selected_concepts: selected.into_iter().map(Into::into).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.selected_concepts.is_empty()
    }
}

/// Weighted expansion terms built from the selected concepts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceModel {
    pub source: Source,
    /// `(term, weight)` sorted by term; every weight is positive.
    pub weights: Vec<(String, f64)>,
    pub cap: Option<usize>,
}

impl RelevanceModel {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, term: &str) -> f64 {
        self.weights
            .binary_search_by(|(t, _)| t.as_str().cmp(term))
            .map_or(0.0, |i| self.weights[i].1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RerankParams {
    /// Fusion weights for CM, CT, WA, AT, RD (the initial query has weight 1).
    pub betas: [f64; 5],
    pub rerank_pool: usize,
    /// Terms kept in the article model, by `w(t, C_u) * idf(t)`.
    pub wa_term_cap: Option<usize>,
    /// Same cap for the related-documents model.
    pub rd_term_cap: Option<usize>,
}

impl Default for RerankParams {
    fn default() -> Self {
        Self {
            betas: [1.0; 5],
            rerank_pool: 1000,
            wa_term_cap: Some(20),
            rd_term_cap: Some(20),
        }
    }
}

impl RerankParams {
    pub fn validate(&self) -> Result<()> {
        if self.rerank_pool == 0 {
            return Err(Error::InvalidParam("rerank_pool must be at least 1".into()));
        }
        if self.betas.iter().any(|b| b.is_nan() || *b < 0.0) {
            return Err(Error::InvalidParam("betas must be non-negative".into()));
        }
        Ok(())
    }

    pub fn cap_for(&self, source: Source) -> Option<usize> {
        match source {
            Source::Wa => self.wa_term_cap,
            Source::Rd => self.rd_term_cap,
            Source::Ct | Source::At => None,
        }
    }
}

pub(crate) fn resolve_feedback(engine: &Engine, feedback: &UserFeedback) -> Result<Vec<ConceptNo>> {
    let mut concepts = feedback
        .selected_concepts
        .iter()
        .map(|id| engine.kb().resolve(id))
        .collect::<Result<Vec<_>>>()?;
    concepts.sort_unstable();
    Ok(concepts)
}

/// Sum over the selected concepts of the concept's weight in the document.
pub fn score_cm(engine: &Engine, doc_id: &str, feedback: &UserFeedback) -> Result<f64> {
    let doc = engine.index().doc_no(doc_id).ok_or_else(|| Error::UnknownDoc(doc_id.into()))?;
    Ok(cm_score(engine, doc, &resolve_feedback(engine, feedback)?))
}

pub(crate) fn cm_score(engine: &Engine, doc: DocNo, concepts: &[ConceptNo]) -> f64 {
    concepts
        .iter()
        .map(|&c| engine.annotations().concept_doc_weight(c, doc))
        .sum()
}

pub(crate) fn model_for(engine: &Engine, concepts: &[ConceptNo], source: Source, cap: Option<usize>) -> RelevanceModel {
    let index = engine.index();
    let kb = engine.kb();
    let mut weights: HashMap<String, f64> = HashMap::new();
    for &c in concepts {
        match source {
            Source::Ct => {
                for t in kb.title_terms(c) {
                    *weights.entry(t.to_string()).or_insert(0.0) += kb.title_weight(t, c);
                }
            }
            Source::Wa => {
                for t in kb.article_terms(c) {
                    *weights.entry(t.to_string()).or_insert(0.0) += kb.article_weight(t, c);
                }
            }
            Source::At => {
                for t in kb.anchor_terms(c) {
                    *weights.entry(t.to_string()).or_insert(0.0) += kb.anchor_weight(t, c);
                }
            }
            Source::Rd => {
                let avg = index.avg_doc_length();
                let mut per_concept: HashMap<TermId, f64> = HashMap::new();
                for hit in engine.annotations().by_concept(c) {
                    let len = index.doc_length(hit.doc);
                    for &(term, tf) in index.doc_terms(hit.doc) {
                        *per_concept.entry(term).or_insert(0.0) += weight::saturating(tf, len, avg) * hit.weight;
                    }
                }
                for (term, w) in per_concept {
                    *weights.entry(index.term(term).to_string()).or_insert(0.0) += w;
                }
            }
        }
    }

    // terms outside the corpus vocabulary cannot score any document
    let mut weights: Vec<(String, f64)> = weights
        .into_iter()
        .filter(|(t, w)| *w > 0.0 && index.document_frequency(t) > 0)
        .collect();
    if let Some(cap) = cap {
        weights.sort_by(|a, b| {
            let (ka, kb) = (a.1 * index.idf(&a.0), b.1 * index.idf(&b.0));
            kb.total_cmp(&ka).then_with(|| a.0.cmp(&b.0))
        });
        weights.truncate(cap);
    }
    weights.sort_by(|a, b| a.0.cmp(&b.0));
    RelevanceModel { source, weights, cap }
}

/// Builds the relevance model of `source` from the selected concepts.
pub fn build_relevance_model(
    engine: &Engine,
    feedback: &UserFeedback,
    source: Source,
    params: &RerankParams,
) -> Result<RelevanceModel> {
    let concepts = resolve_feedback(engine, feedback)?;
    Ok(model_for(engine, &concepts, source, params.cap_for(source)))
}

/// A relevance model resolved against the index: `(term, w(t, C_u), idf)`.
pub(crate) struct ResolvedModel(Vec<(TermId, f64, f64)>);

impl ResolvedModel {
    pub fn new(engine: &Engine, model: &RelevanceModel) -> Self {
        let index = engine.index();
        Self(
            model
                .weights
                .iter()
                .filter_map(|(t, w)| index.term_id(t).map(|id| (id, *w, index.idf_id(id))))
                .collect(),
        )
    }

    pub fn score(&self, engine: &Engine, doc: DocNo) -> f64 {
        let index = engine.index();
        self.0
            .iter()
            .map(|&(term, w, idf)| {
                let wd = index.term_doc_weight_id(term, doc);
                if wd == 0.0 {
                    0.0
                } else {
                    w * wd * idf
                }
            })
            .sum()
    }
}

/// Sum over model terms in the document of `w(t, C_u) * w(t, d) * idf(t)`.
pub fn score_by_model(engine: &Engine, doc_id: &str, model: &RelevanceModel) -> Result<f64> {
    let doc = engine.index().doc_no(doc_id).ok_or_else(|| Error::UnknownDoc(doc_id.into()))?;
    Ok(ResolvedModel::new(engine, model).score(engine, doc))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentScores {
    pub iq: f64,
    pub cm: f64,
    pub ct: f64,
    pub wa: f64,
    pub at: f64,
    pub rd: f64,
}

impl ComponentScores {
    pub fn to_array(self) -> [f64; 6] {
        [self.iq, self.cm, self.ct, self.wa, self.at, self.rd]
    }

    fn from_array([iq, cm, ct, wa, at, rd]: [f64; 6]) -> Self {
        Self { iq, cm, ct, wa, at, rd }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RerankedDoc {
    pub rank: usize,
    pub doc_id: String,
    pub score: f64,
    pub components: ComponentScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RerankOutcome {
    pub query_id: String,
    pub baseline: RankedList,
    pub entries: Vec<RerankedDoc>,
    pub models: Vec<RelevanceModel>,
}

/// Line format of result exports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub query_id: String,
    pub rank: usize,
    pub doc_id: String,
    pub score: f64,
    pub iq: f64,
    pub cm: f64,
    pub ct: f64,
    pub wa: f64,
    pub at: f64,
    pub rd: f64,
}

impl RerankOutcome {
    pub fn ranked_list(&self) -> RankedList {
        RankedList {
            entries: self
                .entries
                .iter()
                .map(|e| RankedEntry {
                    doc_id: e.doc_id.clone(),
                    score: e.score,
                    rank: e.rank,
                })
                .collect(),
        }
    }

    pub fn rows(&self) -> Vec<ResultRow> {
        self.entries
            .iter()
            .map(|e| ResultRow {
                query_id: self.query_id.clone(),
                rank: e.rank,
                doc_id: e.doc_id.clone(),
                score: e.score,
                iq: e.components.iq,
                cm: e.components.cm,
                ct: e.components.ct,
                wa: e.components.wa,
                at: e.components.at,
                rd: e.components.rd,
            })
            .collect()
    }

    pub fn export(&self, writer: impl Write) -> std::io::Result<()> {
        write_jsonl(writer, &self.rows())
    }
}

/// Writes `query_id Q0 doc_id rank score tag` lines.
pub fn write_trec_run(mut writer: impl Write, query_id: &str, ranking: &RankedList, tag: &str) -> std::io::Result<()> {
    for e in &ranking.entries {
        writeln!(writer, "{query_id} Q0 {} {} {} {tag}", e.doc_id, e.rank, e.score)?;
    }
    Ok(())
}

pub fn rerank(engine: &Engine, query: &Query, feedback: &UserFeedback, params: &RerankParams) -> Result<RerankOutcome> {
    params.validate()?;
    let concepts = resolve_feedback(engine, feedback)?;
    let baseline = engine.index().rank_docs(query, params.rerank_pool);

    let models: Vec<RelevanceModel> = Source::ALL
        .iter()
        .map(|&s| model_for(engine, &concepts, s, params.cap_for(s)))
        .collect();
    let resolved: Vec<ResolvedModel> = models.iter().map(|m| ResolvedModel::new(engine, m)).collect();

    let rows: Vec<[f64; 6]> = par::map(engine.parallelism(), &baseline, |&(doc, iq)| {
        [
            iq,
            cm_score(engine, doc, &concepts),
            resolved[0].score(engine, doc),
            resolved[1].score(engine, doc),
            resolved[2].score(engine, doc),
            resolved[3].score(engine, doc),
        ]
    });
    let [b1, b2, b3, b4, b5] = params.betas;
    let fused = fusion::fuse(&rows, &[1.0, b1, b2, b3, b4, b5]);

    let mut order: Vec<(DocNo, f64)> = baseline.iter().map(|&(d, _)| d).zip(fused).collect();
    sort_scored(&mut order);
    let components: HashMap<DocNo, [f64; 6]> = baseline.iter().map(|&(d, _)| d).zip(rows).collect();
    let entries = order
        .iter()
        .enumerate()
        .map(|(i, &(doc, score))| RerankedDoc {
            rank: i + 1,
            doc_id: engine.index().doc_id(doc).to_string(),
            score,
            components: ComponentScores::from_array(components[&doc]),
        })
        .collect();

    Ok(RerankOutcome {
        query_id: query.query_id.clone(),
        baseline: engine.index().to_ranked_list(&baseline),
        entries,
        models,
    })
}
