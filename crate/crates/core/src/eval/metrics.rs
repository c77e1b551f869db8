use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

fn relevant(judged: &BTreeMap<String, u8>, item: &str) -> bool {
    judged.get(item).is_some_and(|&r| r > 0)
}

/// Ranks (0-based) of relevant items, counting a repeated item only once.
fn relevant_ranks<'a, S: AsRef<str>>(ranking: &'a [S], judged: &'a BTreeMap<String, u8>) -> impl Iterator<Item = usize> + 'a {
    let mut seen = BTreeSet::new();
    ranking
        .iter()
        .map(AsRef::as_ref)
        .enumerate()
        .filter(move |&(_, item)| relevant(judged, item) && seen.insert(item))
        .map(|(i, _)| i)
}

/// Mean of precision at the rank of each relevant item; relevant items that
/// are not retrieved contribute 0. `None` when nothing is judged relevant.
pub fn average_precision<S: AsRef<str>>(ranking: &[S], judged: &BTreeMap<String, u8>) -> Option<f64> {
    let total = judged.values().filter(|&&r| r > 0).count();
    if total == 0 {
        return None;
    }
    let sum: f64 = relevant_ranks(ranking, judged)
        .enumerate()
        .map(|(hits, i)| (hits + 1) as f64 / (i + 1) as f64)
        .sum();
    Some(sum / total as f64)
}

/// Relevant items in the first `k`, divided by `k`.
pub fn precision_at_k<S: AsRef<str>>(ranking: &[S], judged: &BTreeMap<String, u8>, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let hits = relevant_ranks(ranking, judged).take_while(|&i| i < k).count();
    hits as f64 / k as f64
}

/// Binary-gain NDCG: DCG of the ranking over the DCG of placing every
/// judged-relevant item first. `None` when nothing is judged relevant.
pub fn ndcg<S: AsRef<str>>(ranking: &[S], judged: &BTreeMap<String, u8>) -> Option<f64> {
    let total = judged.values().filter(|&&r| r > 0).count();
    if total == 0 {
        return None;
    }
    let discount = |i: usize| 1.0 / ((i + 2) as f64).log2();
    let dcg: f64 = relevant_ranks(ranking, judged).map(discount).sum();
    let ideal: f64 = (0..total).map(discount).sum();
    Some(dcg / ideal)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryMetrics {
    pub query_id: String,
    pub ap: Option<f64>,
    pub p10: f64,
    pub ndcg: Option<f64>,
}

/// Per-query metrics with macro means. Queries without judged-relevant
/// items are listed in `skipped` and left out of the means.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_query: Vec<QueryMetrics>,
    pub map: f64,
    pub p10: f64,
    pub ndcg: f64,
    pub skipped: Vec<String>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

impl EvalReport {
    pub fn from_queries(per_query: Vec<QueryMetrics>) -> Self {
        let scored: Vec<&QueryMetrics> = per_query.iter().filter(|q| q.ap.is_some()).collect();
        let skipped = per_query
            .iter()
            .filter(|q| q.ap.is_none())
            .map(|q| q.query_id.clone())
            .collect();
        Self {
            map: mean(scored.iter().filter_map(|q| q.ap)),
            p10: mean(scored.iter().map(|q| q.p10)),
            ndcg: mean(per_query.iter().filter_map(|q| q.ndcg)),
            skipped,
            per_query,
        }
    }

    /// Fixed-width table, one row per query plus the means.
    pub fn table(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
        let mut out = format!("{:<16} {:>8} {:>8} {:>8}\n", "query", "AP", "P@10", "NDCG");
        for q in &self.per_query {
            out += &format!("{:<16} {:>8} {:>8.4} {:>8}\n", q.query_id, fmt(q.ap), q.p10, fmt(q.ndcg));
        }
        out += &format!("{:<16} {:>8.4} {:>8.4} {:>8.4}\n", "mean", self.map, self.p10, self.ndcg);
        if !self.skipped.is_empty() {
            out += &format!("skipped (no relevant judgments): {}\n", self.skipped.join(", "));
        }
        out
    }
}
