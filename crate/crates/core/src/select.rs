//! Concept selection: score knowledge-base concepts against a query from
//! five evidence sources and fuse the standardized scores into a slate.
//!
//! - TD: annotation weight in the top-ranked documents, discounted by rank.
//! - CT, WA, AT: query term match against the concept title, article and
//!   anchor texts.
//! - RD: query term match against the concept's related (annotated) documents.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{DocNo, Query, RankedList};
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::fusion;
use crate::kb::ConceptNo;
use crate::par;
use crate::weight;

/// Term-weight source for query matching and relevance models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Source {
    /// Concept title.
    Ct,
    /// Article text.
    Wa,
    /// Anchor texts.
    At,
    /// Related documents.
    Rd,
}

impl Source {
    pub const ALL: [Source; 4] = [Source::Ct, Source::Wa, Source::At, Source::Rd];

    pub fn name(self) -> &'static str {
        match self {
            Source::Ct => "CT",
            Source::Wa => "WA",
            Source::At => "AT",
            Source::Rd => "RD",
        }
    }
}

impl std::str::FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "CT" => Ok(Source::Ct),
            "WA" => Ok(Source::Wa),
            "AT" => Ok(Source::At),
            "RD" => Ok(Source::Rd),
            _ => Err(Error::InvalidParam(format!("unknown source {s:?}"))),
        }
    }
}

/// Which concepts enter the normalization population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolStrategy {
    /// The `candidate_pool_size` concepts with the highest TD score plus
    /// every concept whose title shares a term with the query.
    #[default]
    TdPlusTitleMatch,
    /// Every concept in the knowledge base.
    AllConcepts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptSelectionParams {
    /// Fusion weights for CT, WA, AT, RD (TD has weight 1).
    pub alphas: [f64; 4],
    /// Exponent of the `rank^-decay` discount in TD.
    pub rank_decay: f64,
    pub top_n_docs: usize,
    pub slate_size: usize,
    pub candidate_pool_size: usize,
    #[serde(default)]
    pub pool: PoolStrategy,
}

impl Default for ConceptSelectionParams {
    fn default() -> Self {
        Self {
            alphas: [1.0; 4],
            rank_decay: 0.5,
            top_n_docs: 100,
            slate_size: 20,
            candidate_pool_size: 200,
            pool: PoolStrategy::default(),
        }
    }
}

impl ConceptSelectionParams {
    pub fn validate(&self) -> Result<()> {
        if self.top_n_docs == 0 {
            return Err(Error::InvalidParam("top_n_docs must be at least 1".into()));
        }
        if self.slate_size > self.candidate_pool_size {
            return Err(Error::InvalidParam(format!(
                "slate_size {} exceeds candidate_pool_size {}",
                self.slate_size, self.candidate_pool_size
            )));
        }
        if self.alphas.iter().any(|a| a.is_nan() || *a < 0.0) || self.rank_decay.is_nan() || self.rank_decay < 0.0 {
            return Err(Error::InvalidParam("alphas and rank_decay must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptScore {
    pub concept_id: String,
    pub td: f64,
    pub ct: f64,
    pub wa: f64,
    pub at: f64,
    pub rd: f64,
    pub combined: f64,
}

impl ConceptScore {
    pub fn components(&self) -> [f64; 5] {
        [self.td, self.ct, self.wa, self.at, self.rd]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlateEntry {
    pub rank: usize,
    pub title: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    #[serde(flatten)]
    pub score: ConceptScore,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConceptSlate {
    pub query_id: String,
    pub pool: PoolStrategy,
    pub pool_size: usize,
    pub entries: Vec<SlateEntry>,
}

impl ConceptSlate {
    pub fn concept_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.score.concept_id.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// One export row per entry.
    pub fn rows(&self) -> Vec<SlateRow> {
        self.entries
            .iter()
            .map(|e| SlateRow {
                query_id: self.query_id.clone(),
                rank: e.rank,
                concept_id: e.score.concept_id.clone(),
                combined: e.score.combined,
                td: e.score.td,
                ct: e.score.ct,
                wa: e.score.wa,
                at: e.score.at,
                rd: e.score.rd,
            })
            .collect()
    }
}

/// Line format of slate exports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlateRow {
    pub query_id: String,
    pub rank: usize,
    pub concept_id: String,
    pub combined: f64,
    pub td: f64,
    pub ct: f64,
    pub wa: f64,
    pub at: f64,
    pub rd: f64,
}

pub(crate) fn td_score(engine: &Engine, concept: ConceptNo, ranking: &[(DocNo, f64)], decay: f64, top_n: usize) -> f64 {
    ranking
        .iter()
        .take(top_n)
        .enumerate()
        .map(|(i, &(doc, _))| {
            let w = engine.annotations().concept_doc_weight(concept, doc);
            if w == 0.0 {
                0.0
            } else {
                w * ((i + 1) as f64).powf(-decay)
            }
        })
        .sum()
}

/// Rank-discounted concept weight over the first `top_n` entries of an
/// initial ranking; ranks start at 1.
pub fn score_td(engine: &Engine, concept_id: &str, ranking: &RankedList, decay: f64, top_n: usize) -> Result<f64> {
    let concept = engine.kb().resolve(concept_id)?;
    let scored = engine.resolve_ranking(ranking)?;
    Ok(td_score(engine, concept, &scored, decay, top_n))
}

pub(crate) fn source_weight(engine: &Engine, source: Source, term: &str, concept: ConceptNo) -> f64 {
    match source {
        Source::Ct => engine.kb().title_weight(term, concept),
        Source::Wa => engine.kb().article_weight(term, concept),
        Source::At => engine.kb().anchor_weight(term, concept),
        Source::Rd => engine
            .annotations()
            .related_docs_term_weight(engine.index(), term, concept),
    }
}

pub(crate) fn match_score(engine: &Engine, query: &Query, concept: ConceptNo, source: Source) -> f64 {
    query
        .term_counts
        .iter()
        .map(|(term, &tf)| {
            let w = source_weight(engine, source, term, concept);
            if w == 0.0 {
                0.0
            } else {
                weight::query_term(tf) * w * engine.index().idf(term)
            }
        })
        .sum()
}

/// Sum over distinct query terms of `w(t,q) * w_source(t,c) * idf(t)`.
pub fn query_match_score(engine: &Engine, query: &Query, concept_id: &str, source: Source) -> Result<f64> {
    Ok(match_score(engine, query, engine.kb().resolve(concept_id)?, source))
}

fn candidate_pool(engine: &Engine, query: &Query, td: &HashMap<ConceptNo, f64>, params: &ConceptSelectionParams) -> Vec<ConceptNo> {
    match params.pool {
        PoolStrategy::AllConcepts => (0..engine.kb().len() as ConceptNo).collect(),
        PoolStrategy::TdPlusTitleMatch => {
            let mut by_td: Vec<(ConceptNo, f64)> = td.iter().map(|(&c, &s)| (c, s)).filter(|&(_, s)| s > 0.0).collect();
            by_td.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            let mut pool: BTreeSet<ConceptNo> = by_td
                .into_iter()
                .take(params.candidate_pool_size)
                .map(|(c, _)| c)
                .collect();
            for term in query.term_counts.keys() {
                pool.extend(engine.kb().concepts_with_title_term(term));
            }
            pool.into_iter().collect()
        }
    }
}

/// Scores every concept in the candidate pool, in concept-id order, with the
/// fused score filled in.
pub fn score_candidates(engine: &Engine, query: &Query, params: &ConceptSelectionParams) -> Result<Vec<ConceptScore>> {
    params.validate()?;
    if engine.kb().is_empty() {
        return Ok(Vec::new());
    }
    let ranking = engine.index().rank_docs(query, params.top_n_docs);

    // accumulate TD in rank order so it matches td_score bit for bit
    let mut td: HashMap<ConceptNo, f64> = HashMap::new();
    for (i, &(doc, _)) in ranking.iter().enumerate() {
        let discount = ((i + 1) as f64).powf(-params.rank_decay);
        for hit in engine.annotations().by_doc(doc) {
            *td.entry(hit.concept).or_insert(0.0) += hit.weight * discount;
        }
    }

    let pool = candidate_pool(engine, query, &td, params);
    let rows: Vec<[f64; 5]> = par::map(engine.parallelism(), &pool, |&c| {
        [
            td_score(engine, c, &ranking, params.rank_decay, params.top_n_docs),
            match_score(engine, query, c, Source::Ct),
            match_score(engine, query, c, Source::Wa),
            match_score(engine, query, c, Source::At),
            match_score(engine, query, c, Source::Rd),
        ]
    });
    let [a1, a2, a3, a4] = params.alphas;
    let combined = fusion::fuse(&rows, &[1.0, a1, a2, a3, a4]);
    Ok(pool
        .iter()
        .zip(rows)
        .zip(combined)
        .map(|((&c, [td, ct, wa, at, rd]), combined)| ConceptScore {
            concept_id: engine.kb().concept(c).concept_id.clone(),
            td,
            ct,
            wa,
            at,
            rd,
            combined,
        })
        .collect())
}

/// Orders scores by descending `key`, ties by ascending concept id.
pub fn order_by<F: Fn(&ConceptScore) -> f64>(scores: &mut [ConceptScore], key: F) {
    scores.sort_by(|a, b| key(b).total_cmp(&key(a)).then_with(|| a.concept_id.cmp(&b.concept_id)));
}

pub fn select_concepts(engine: &Engine, query: &Query, params: &ConceptSelectionParams) -> Result<ConceptSlate> {
    let mut scores = score_candidates(engine, query, params)?;
    let pool_size = scores.len();
    order_by(&mut scores, |s| s.combined);
    scores.truncate(params.slate_size);
    let entries = scores
        .into_iter()
        .enumerate()
        .map(|(i, score)| {
            let concept = engine.kb().concept(engine.kb().concept_no(&score.concept_id).expect("pooled concept"));
            SlateEntry {
                rank: i + 1,
                title: concept.title.clone(),
                url: concept.url.clone(),
                score,
            }
        })
        .collect();
    Ok(ConceptSlate {
        query_id: query.query_id.clone(),
        pool: params.pool,
        pool_size,
        entries,
    })
}
