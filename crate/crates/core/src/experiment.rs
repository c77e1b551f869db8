//! Batch evaluation and tuning runs over a topic set, with the simulated
//! user standing in for human feedback.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Query;
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::eval::{
    average_precision, ndcg, paired_t_test, precision_at_k, simulate_user, tune_cv, CvReport, EvalReport, Judgments,
    ParamGrid, QueryMetrics, SearchMode, TTest,
};
use crate::io::read_jsonl_path;
use crate::par;
use crate::rerank::{RerankParams, UserFeedback};
use crate::select::{ConceptSelectionParams, ConceptSlate};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topic {
    pub query_id: String,
    pub text: String,
}

pub fn read_topics(path: impl AsRef<Path>) -> Result<Vec<Topic>> {
    Ok(read_jsonl_path(path)?.into_iter().map(|(_, t)| t).collect())
}

/// Simulated feedback: `seeds.len()` independent users with flip noise,
/// whose metrics are averaged per query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserModel {
    pub noise: f64,
    pub seeds: Vec<u64>,
}

impl Default for UserModel {
    fn default() -> Self {
        Self { noise: 0.0, seeds: vec![0] }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub select: ConceptSelectionParams,
    pub rerank: RerankParams,
    pub user: UserModel,
}

impl ExperimentConfig {
    /// Sets a named parameter: `alpha1..alpha4`, `rank_decay`, `beta1..beta5`.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let slot = match name {
            "alpha1" => &mut self.select.alphas[0],
            "alpha2" => &mut self.select.alphas[1],
            "alpha3" => &mut self.select.alphas[2],
            "alpha4" => &mut self.select.alphas[3],
            "rank_decay" => &mut self.select.rank_decay,
            "beta1" => &mut self.rerank.betas[0],
            "beta2" => &mut self.rerank.betas[1],
            "beta3" => &mut self.rerank.betas[2],
            "beta4" => &mut self.rerank.betas[3],
            "beta5" => &mut self.rerank.betas[4],
            _ => return Err(Error::InvalidParam(format!("unknown parameter {name:?}"))),
        };
        *slot = value;
        Ok(())
    }

    pub fn is_selection_param(name: &str) -> bool {
        name.starts_with("alpha") || name == "rank_decay"
    }
}

/// Everything produced for one topic and one simulated user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackRun {
    pub query_id: String,
    pub slate: ConceptSlate,
    pub feedback: UserFeedback,
    pub outcome: crate::rerank::RerankOutcome,
}

pub fn run_topic(
    engine: &Engine,
    topic: &Topic,
    concept_qrels: &Judgments,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<FeedbackRun> {
    let query = engine.query(&topic.query_id, &topic.text);
    let slate = engine.suggest(&query, &config.select)?;
    let feedback = simulate_user(&slate, concept_qrels.query(&topic.query_id), config.user.noise, seed);
    let outcome = engine.rerank(&query, &feedback, &config.rerank)?;
    Ok(FeedbackRun {
        query_id: topic.query_id.clone(),
        slate,
        feedback,
        outcome,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// BM25 only; `ndcg` is unused.
    pub baseline: EvalReport,
    /// With simulated feedback; `ndcg` scores the concept slate.
    pub feedback: EvalReport,
    pub map_t_test: Option<TTest>,
    pub p10_t_test: Option<TTest>,
}

impl Evaluation {
    pub fn map_improvement(&self) -> f64 {
        if self.baseline.map > 0.0 {
            self.feedback.map / self.baseline.map - 1.0
        } else {
            0.0
        }
    }
}

fn ids(list: &crate::corpus::RankedList) -> Vec<&str> {
    list.doc_ids().collect()
}

pub fn evaluate(
    engine: &Engine,
    topics: &[Topic],
    doc_qrels: &Judgments,
    concept_qrels: &Judgments,
    config: &ExperimentConfig,
) -> Result<Evaluation> {
    if config.user.seeds.is_empty() {
        return Err(Error::InvalidParam("at least one user seed is required".into()));
    }
    let empty = BTreeMap::new();
    let per_topic = par::map(engine.parallelism(), topics, |topic| -> Result<(QueryMetrics, QueryMetrics)> {
        let judged = doc_qrels.query(&topic.query_id).unwrap_or(&empty);
        let query = engine.query(&topic.query_id, &topic.text);
        let base = engine.search(&query, config.rerank.rerank_pool);
        let base_ids = ids(&base);
        let baseline = QueryMetrics {
            query_id: topic.query_id.clone(),
            ap: average_precision(&base_ids, judged),
            p10: precision_at_k(&base_ids, judged, 10),
            ndcg: None,
        };

        let slate = engine.suggest(&query, &config.select)?;
        let slate_ndcg = concept_qrels
            .query(&topic.query_id)
            .and_then(|j| ndcg(&slate.concept_ids().collect::<Vec<_>>(), j));
        let (mut ap, mut p10) = (0.0, 0.0);
        for &seed in &config.user.seeds {
            let fb = simulate_user(&slate, concept_qrels.query(&topic.query_id), config.user.noise, seed);
            let out = engine.rerank(&query, &fb, &config.rerank)?.ranked_list();
            let out_ids = ids(&out);
            ap += average_precision(&out_ids, judged).unwrap_or(0.0);
            p10 += precision_at_k(&out_ids, judged, 10);
        }
        let n = config.user.seeds.len() as f64;
        let feedback = QueryMetrics {
            query_id: topic.query_id.clone(),
            ap: baseline.ap.map(|_| ap / n),
            p10: p10 / n,
            ndcg: slate_ndcg,
        };
        Ok((baseline, feedback))
    });
    let (base, fb): (Vec<_>, Vec<_>) = per_topic.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();

    let paired = |f: fn(&QueryMetrics) -> Option<f64>| {
        let (a, b): (Vec<f64>, Vec<f64>) = base
            .iter()
            .zip(&fb)
            .filter_map(|(x, y)| Some((f(x)?, f(y)?)))
            .unzip();
        paired_t_test(&a, &b)
    };
    let map_t_test = paired(|q| q.ap);
    let p10_t_test = paired(|q| q.ap.map(|_| q.p10));
    Ok(Evaluation {
        baseline: EvalReport::from_queries(base),
        feedback: EvalReport::from_queries(fb),
        map_t_test,
        p10_t_test,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    /// Average precision of the re-ranked documents.
    Map,
    /// NDCG of the concept slate.
    Ndcg,
}

impl std::str::FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "map" => Ok(Target::Map),
            "ndcg" => Ok(Target::Ndcg),
            _ => Err(Error::InvalidParam(format!("unknown target {s:?}"))),
        }
    }
}

/// Cross-validated tuning of the named parameters in `grid` around `base`.
#[allow(clippy::too_many_arguments)]
pub fn tune(
    engine: &Engine,
    topics: &[Topic],
    doc_qrels: &Judgments,
    concept_qrels: &Judgments,
    base: &ExperimentConfig,
    grid: &ParamGrid,
    target: Target,
    mode: SearchMode,
    folds: usize,
    seed: u64,
) -> Result<CvReport> {
    for axis in &grid.axes {
        base.clone().set(&axis.name, 0.0)?;
    }
    if base.user.seeds.is_empty() {
        return Err(Error::InvalidParam("at least one user seed is required".into()));
    }
    let queries: BTreeMap<&str, Query> = topics
        .iter()
        .map(|t| (t.query_id.as_str(), engine.query(&t.query_id, &t.text)))
        .collect();

    // slates and feedback do not depend on re-rank weights, so compute them once
    let selection_fixed = grid.axes.iter().all(|a| !ExperimentConfig::is_selection_param(&a.name));
    let cached: BTreeMap<&str, (ConceptSlate, Vec<UserFeedback>)> = if selection_fixed {
        let slates = par::map(engine.parallelism(), topics, |t| engine.suggest(&queries[t.query_id.as_str()], &base.select));
        topics
            .iter()
            .zip(slates)
            .map(|(t, slate)| {
                let slate = slate?;
                let fbs = base
                    .user
                    .seeds
                    .iter()
                    .map(|&s| simulate_user(&slate, concept_qrels.query(&t.query_id), base.user.noise, s))
                    .collect();
                Ok((t.query_id.as_str(), (slate, fbs)))
            })
            .collect::<Result<_>>()?
    } else {
        BTreeMap::new()
    };

    let names: Vec<String> = grid.axes.iter().map(|a| a.name.clone()).collect();
    let topic_ids: Vec<String> = topics.iter().map(|t| t.query_id.clone()).collect();
    let empty = BTreeMap::new();
    let eval = |point: &[f64], topic_id: &str| -> Option<f64> {
        let mut config = base.clone();
        for (n, &v) in names.iter().zip(point) {
            config.set(n, v).ok()?;
        }
        let query = &queries[topic_id];
        let concept_judged = concept_qrels.query(topic_id);
        let (slate, feedbacks) = match cached.get(topic_id) {
            Some((s, f)) => (s.clone(), f.clone()),
            None => {
                let s = engine.suggest(query, &config.select).ok()?;
                let f = config
                    .user
                    .seeds
                    .iter()
                    .map(|&seed| simulate_user(&s, concept_judged, config.user.noise, seed))
                    .collect();
                (s, f)
            }
        };
        match target {
            Target::Ndcg => ndcg(&slate.concept_ids().collect::<Vec<_>>(), concept_judged?),
            Target::Map => {
                let judged = doc_qrels.query(topic_id).unwrap_or(&empty);
                let mut total = 0.0;
                for fb in &feedbacks {
                    let out = engine.rerank(query, fb, &config.rerank).ok()?.ranked_list();
                    total += average_precision(&ids(&out), judged)?;
                }
                Some(total / feedbacks.len() as f64)
            }
        }
    };
    tune_cv(&topic_ids, grid, mode, folds, seed, engine.parallelism(), eval)
}
