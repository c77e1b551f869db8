use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Parallelism};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

/// Cartesian parameter grid. Points are enumerated with the last axis
/// varying fastest; that enumeration order breaks ties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub axes: Vec<Axis>,
}

impl ParamGrid {
    pub fn new(axes: Vec<Axis>) -> Self {
        Self { axes }
    }

    /// Every named axis takes the same values.
    pub fn uniform(names: &[&str], values: &[f64]) -> Self {
        Self::new(
            names
                .iter()
                .map(|n| Axis {
                    name: n.to_string(),
                    values: values.to_vec(),
                })
                .collect(),
        )
    }

    /// Parses `name=v1,v2,...;name=...`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut axes = Vec::new();
        for part in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, values) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidParam(format!("grid axis {part:?} lacks '='")))?;
            let values = values
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidParam(format!("grid value {v:?} is not a number")))
                })
                .collect::<Result<Vec<_>>>()?;
            axes.push(Axis {
                name: name.trim().to_string(),
                values,
            });
        }
        Ok(Self::new(axes))
    }

    pub fn len(&self) -> usize {
        if self.axes.is_empty() {
            0
        } else {
            self.axes.iter().map(|a| a.values.len()).product()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn value_at(&self, idx: &[usize]) -> Vec<f64> {
        self.axes.iter().zip(idx).map(|(a, &i)| a.values[i]).collect()
    }

    fn indices(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new()];
        for axis in &self.axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    (0..axis.values.len()).map(move |i| {
                        let mut p = prefix.clone();
                        p.push(i);
                        p
                    })
                })
                .collect();
        }
        if self.is_empty() {
            Vec::new()
        } else {
            out
        }
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        self.indices().iter().map(|i| self.value_at(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    /// Every grid point.
    Exhaustive,
    /// Coordinate ascent from the first grid point, one axis at a time, until
    /// a full round changes nothing. Approximates the exhaustive optimum.
    Greedy { max_rounds: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub train: Vec<String>,
    pub test: Vec<String>,
    pub best: Vec<f64>,
    pub train_score: f64,
    pub test_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub axes: Vec<String>,
    pub folds: Vec<FoldResult>,
    /// Mean of the per-fold held-out scores.
    pub mean_test: f64,
}

fn mean_of(scores: &[Option<f64>], topics: &[usize]) -> f64 {
    let vals: Vec<f64> = topics.iter().filter_map(|&t| scores[t]).collect();
    if vals.is_empty() {
        0.0
    } else {
        vals.iter().sum::<f64>() / vals.len() as f64
    }
}

/// Splits topics into `k` folds after a seeded shuffle.
fn split_folds(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let mut fold = order[start..start + size].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += size;
    }
    folds
}

struct Evaluator<'a, F> {
    topics: &'a [String],
    grid: &'a ParamGrid,
    eval: F,
    mode: Parallelism,
    cache: HashMap<Vec<usize>, Vec<Option<f64>>>,
}

impl<F: Fn(&[f64], &str) -> Option<f64> + Sync> Evaluator<'_, F> {
    fn scores(&mut self, idx: &[usize]) -> &[Option<f64>] {
        if !self.cache.contains_key(idx) {
            let point = self.grid.value_at(idx);
            let eval = &self.eval;
            let row = par::map(self.mode, self.topics, |t| eval(&point, t));
            self.cache.insert(idx.to_vec(), row);
        }
        &self.cache[idx]
    }

    fn fill_all(&mut self, indices: &[Vec<usize>]) {
        let topics = self.topics;
        let eval = &self.eval;
        let grid = self.grid;
        let n = topics.len();
        let flat = par::map_range(self.mode, indices.len() * n, |i| {
            eval(&grid.value_at(&indices[i / n]), &topics[i % n])
        });
        for (idx, row) in indices.iter().zip(flat.chunks(n.max(1))) {
            self.cache.insert(idx.clone(), row.to_vec());
        }
    }
}

/// K-fold cross-validated grid search maximizing `eval`, a per-topic metric
/// (`None` skips the topic). Fold assignment is a shuffle seeded by `seed`.
pub fn tune_cv<F>(
    topics: &[String],
    grid: &ParamGrid,
    mode: SearchMode,
    folds: usize,
    seed: u64,
    parallelism: Parallelism,
    eval: F,
) -> Result<CvReport>
where
    F: Fn(&[f64], &str) -> Option<f64> + Sync,
{
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if folds < 2 {
        return Err(Error::InvalidParam(format!("need at least 2 folds, got {folds}")));
    }
    if topics.len() < folds {
        return Err(Error::TooFewTopics(topics.len()));
    }

    let fold_sets = split_folds(topics.len(), folds, seed);
    let all = grid.indices();
    let mut ev = Evaluator {
        topics,
        grid,
        eval,
        mode: parallelism,
        cache: HashMap::new(),
    };
    if mode == SearchMode::Exhaustive {
        ev.fill_all(&all);
    }

    let mut results = Vec::with_capacity(folds);
    for (f, test) in fold_sets.iter().enumerate() {
        let train: Vec<usize> = fold_sets
            .iter()
            .enumerate()
            .filter(|&(g, _)| g != f)
            .flat_map(|(_, s)| s.iter().copied())
            .collect();

        let (best_idx, train_score) = match mode {
            SearchMode::Exhaustive => {
                let mut best: Option<(&Vec<usize>, f64)> = None;
                for idx in &all {
                    let s = mean_of(ev.scores(idx), &train);
                    if best.is_none_or(|(_, b)| s > b) {
                        best = Some((idx, s));
                    }
                }
                let (idx, s) = best.expect("non-empty grid");
                (idx.clone(), s)
            }
            SearchMode::Greedy { max_rounds } => {
                let mut current = vec![0usize; grid.axes.len()];
                let mut current_score = mean_of(ev.scores(&current), &train);
                for _ in 0..max_rounds.max(1) {
                    let mut changed = false;
                    for a in 0..grid.axes.len() {
                        let mut best = (current[a], current_score);
                        for v in 0..grid.axes[a].values.len() {
                            let mut cand = current.clone();
                            cand[a] = v;
                            let s = mean_of(ev.scores(&cand), &train);
                            if s > best.1 || (s == best.1 && v < best.0) {
                                best = (v, s);
                            }
                        }
                        if best.0 != current[a] {
                            current[a] = best.0;
                            current_score = best.1;
                            changed = true;
                        }
                    }
                    if !changed {
                        break;
                    }
                }
                (current, current_score)
            }
        };

        let test_score = mean_of(ev.scores(&best_idx), test);
        results.push(FoldResult {
            train: train.iter().map(|&t| topics[t].clone()).collect(),
            test: test.iter().map(|&t| topics[t].clone()).collect(),
            best: grid.value_at(&best_idx),
            train_score,
            test_score,
        });
    }
    let mean_test = results.iter().map(|r| r.test_score).sum::<f64>() / results.len() as f64;
    Ok(CvReport {
        axes: grid.axes.iter().map(|a| a.name.clone()).collect(),
        folds: results,
        mean_test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn topics(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("t{i}")).collect()
    }

    #[test]
    fn grid_enumeration() {
        let g = ParamGrid::parse("a=0,1; b=0.5,1,2").unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(g.points()[..3], [vec![0.0, 0.5], vec![0.0, 1.0], vec![0.0, 2.0]]);
        assert!(ParamGrid::parse("a").is_err());
        assert!(ParamGrid::parse("a=x").is_err());
        assert!(ParamGrid::new(vec![]).is_empty());
    }

    #[test]
    fn errors() {
        let empty = ParamGrid::new(vec![]);
        let f = |_: &[f64], _: &str| Some(1.0);
        assert!(matches!(
            tune_cv(&topics(4), &empty, SearchMode::Exhaustive, 2, 0, Parallelism::Sequential, f),
            Err(Error::EmptyGrid)
        ));
        let g = ParamGrid::parse("a=1").unwrap();
        assert!(matches!(
            tune_cv(&topics(1), &g, SearchMode::Exhaustive, 2, 0, Parallelism::Sequential, f),
            Err(Error::TooFewTopics(1))
        ));
    }

    #[test]
    fn single_point_is_selected() {
        let g = ParamGrid::parse("a=0.25").unwrap();
        let r = tune_cv(&topics(2), &g, SearchMode::Exhaustive, 2, 9, Parallelism::Parallel, |p, _| Some(p[0])).unwrap();
        assert_eq!(r.folds.len(), 2);
        for f in &r.folds {
            assert_eq!(f.best, [0.25]);
            assert_eq!(f.test.len(), 1);
            assert_eq!(f.train.len(), 1);
        }
    }

    #[test]
    fn folds_partition_topics() {
        let ts = topics(7);
        for seed in 0..10 {
            let sets = split_folds(7, 2, seed);
            let mut all: Vec<usize> = sets.concat();
            all.sort_unstable();
            assert_eq!(all, (0..7).collect::<Vec<_>>());
            assert_eq!((sets[0].len(), sets[1].len()), (4, 3));
        }
        let g = ParamGrid::parse("a=1,2").unwrap();
        let r = tune_cv(&ts, &g, SearchMode::Exhaustive, 3, 1, Parallelism::Sequential, |p, _| Some(p[0])).unwrap();
        assert_eq!(r.folds.len(), 3);
    }

    #[test]
    fn ties_go_to_first_point() {
        let g = ParamGrid::parse("a=3,1,2").unwrap();
        let r = tune_cv(&topics(4), &g, SearchMode::Exhaustive, 2, 0, Parallelism::Sequential, |_, _| Some(0.5)).unwrap();
        assert!(r.folds.iter().all(|f| f.best == [3.0]));
        let r = tune_cv(&topics(4), &g, SearchMode::Greedy { max_rounds: 3 }, 2, 0, Parallelism::Sequential, |_, _| Some(0.5)).unwrap();
        assert!(r.folds.iter().all(|f| f.best == [3.0]));
    }

    #[test]
    fn greedy_finds_separable_optimum() {
        // score peaks at a = 2, b = 0.5 and is separable
        let g = ParamGrid::parse("a=0,1,2,3;b=0,0.5,1").unwrap();
        let f = |p: &[f64], _: &str| Some(-(p[0] - 2.0).powi(2) - (p[1] - 0.5).powi(2));
        let greedy = tune_cv(&topics(6), &g, SearchMode::Greedy { max_rounds: 5 }, 2, 4, Parallelism::Parallel, f).unwrap();
        let full = tune_cv(&topics(6), &g, SearchMode::Exhaustive, 2, 4, Parallelism::Parallel, f).unwrap();
        assert_eq!(greedy.folds[0].best, [2.0, 0.5]);
        assert_eq!(greedy.folds, full.folds);
    }
}
