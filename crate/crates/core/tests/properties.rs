use std::collections::BTreeMap;

use conceptrank::eval::{average_precision, ndcg};
use conceptrank::fusion::fuse;
use conceptrank::rerank::{build_relevance_model, score_cm};
use conceptrank::weight::saturating;
use conceptrank::*;
use proptest::prelude::*;

const WORDS: [&str; 12] = [
    "apple", "banana", "cherry", "delta", "echo", "fig", "grape", "hotel", "india", "juliet", "kilo", "lima",
];

/// (title, article, anchors) as word indices
type ConceptWords = (Vec<usize>, Vec<usize>, Vec<Vec<usize>>);

#[derive(Debug, Clone)]
struct World {
    docs: Vec<Vec<usize>>,
    concepts: Vec<ConceptWords>,
}

fn text(ws: &[usize]) -> String {
    ws.iter().map(|&w| WORDS[w]).collect::<Vec<_>>().join(" ")
}

fn world() -> impl Strategy<Value = World> {
    let word = 0..WORDS.len();
    let docs = prop::collection::vec(prop::collection::vec(word.clone(), 1..12), 2..12);
    let concept = (
        prop::collection::vec(word.clone(), 1..3),
        prop::collection::vec(word.clone(), 0..10),
        prop::collection::vec(prop::collection::vec(word, 1..3), 0..3),
    );
    let concepts = prop::collection::vec(concept, 1..8);
    (docs, concepts).prop_map(|(docs, concepts)| World { docs, concepts })
}

impl World {
    fn engine(&self, mode: Parallelism) -> Engine {
        let docs = self
            .docs
            .iter()
            .enumerate()
            .map(|(i, d)| DocRecord { doc_id: format!("d{i:02}"), title: String::new(), body: text(d) })
            .collect();
        let concepts = self
            .concepts
            .iter()
            .enumerate()
            .map(|(i, (title, article, anchors))| Concept {
                concept_id: format!("c{i:02}"),
                title: text(title),
                article_text: text(article),
                anchors: anchors.iter().map(|a| Anchor { text: text(a), count: 1 + i as u32 % 3 }).collect(),
                url: None,
            })
            .collect();
        let index = InvertedIndex::build(docs, Tokenizer::default()).unwrap();
        let kb = KnowledgeBase::build(concepts, Tokenizer::default()).unwrap();
        Engine::annotated(index, kb).with_parallelism(mode)
    }

    fn concept_ids(&self) -> Vec<String> {
        (0..self.concepts.len()).map(|i| format!("c{i:02}")).collect()
    }
}

fn query_words() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0..WORDS.len(), 1..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn z_scores_have_zero_mean_unit_variance(v in prop::collection::vec(-1e6f64..1e6, 2..100)) {
        let z = z_normalize(&v);
        let n = v.len() as f64;
        let m = z.iter().sum::<f64>() / n;
        let sd = (z.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt();
        prop_assert!(m.abs() < 1e-9);
        prop_assert!((sd - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fusion_ignores_positive_affine_maps(
        rows in prop::collection::vec(prop::array::uniform3(-100.0f64..100.0), 2..30),
        scale in 0.01f64..100.0,
        shift in -1e3f64..1e3,
    ) {
        let w = [1.0, 0.5, 2.0];
        let mapped: Vec<[f64; 3]> = rows.iter().map(|r| [r[0], r[1] * scale + shift, r[2]]).collect();
        for (a, b) in fuse(&rows, &w).iter().zip(fuse(&mapped, &w)) {
            prop_assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn weights_are_bounded_and_monotone(tf in 0u32..1000, len in 1usize..500, avg in 0.5f64..300.0) {
        let w = saturating(tf, len, avg);
        prop_assert!((0.0..1.0).contains(&w));
        prop_assert!(saturating(tf + 1, len, avg) > w);
        if tf > 0 {
            prop_assert!(saturating(tf, len + 1, avg) < w);
        }
    }

    #[test]
    fn bm25_ignores_query_term_order(w in world(), q in query_words(), seed in any::<u64>()) {
        let e = w.engine(Parallelism::Sequential);
        let mut shuffled = q.clone();
        let k = shuffled.len();
        shuffled.rotate_left(seed as usize % k);
        let (a, b) = (e.query("a", text(&q)), e.query("b", text(&shuffled)));
        for d in 0..w.docs.len() {
            let id = format!("d{d:02}");
            prop_assert_eq!(e.index().bm25_score(&a, &id).unwrap(), e.index().bm25_score(&b, &id).unwrap());
        }
    }

    #[test]
    fn shorter_rankings_are_prefixes(w in world(), q in query_words(), k in 0usize..12) {
        let e = w.engine(Parallelism::Sequential);
        let q = e.query("q", text(&q));
        let full: Vec<String> = e.search(&q, 100).doc_ids().map(String::from).collect();
        let short: Vec<String> = e.search(&q, k).doc_ids().map(String::from).collect();
        prop_assert_eq!(&short[..], &full[..k.min(full.len())]);
    }

    #[test]
    fn cm_is_additive_over_disjoint_sets(w in world(), split in any::<u64>()) {
        let e = w.engine(Parallelism::Sequential);
        let ids = w.concept_ids();
        let (left, right): (Vec<_>, Vec<_>) = ids.iter().enumerate().partition(|(i, _)| split >> (i % 64) & 1 == 1);
        let left: Vec<&String> = left.into_iter().map(|(_, c)| c).collect();
        let right: Vec<&String> = right.into_iter().map(|(_, c)| c).collect();
        for d in 0..w.docs.len() {
            let id = format!("d{d:02}");
            let all = score_cm(&e, &id, &UserFeedback::new("q", ids.iter())).unwrap();
            let l = score_cm(&e, &id, &UserFeedback::new("q", left.iter().copied())).unwrap();
            let r = score_cm(&e, &id, &UserFeedback::new("q", right.iter().copied())).unwrap();
            prop_assert!((all - l - r).abs() < 1e-12);
        }
    }

    #[test]
    fn model_weights_grow_with_feedback(w in world(), extra in any::<prop::sample::Index>()) {
        let e = w.engine(Parallelism::Sequential);
        let ids = w.concept_ids();
        let added = extra.index(ids.len());
        let params = RerankParams { wa_term_cap: None, rd_term_cap: None, ..RerankParams::default() };
        let small: Vec<&String> = ids.iter().enumerate().filter(|(i, _)| i % 2 == 0 && *i != added).map(|(_, c)| c).collect();
        let mut big = small.clone();
        big.push(&ids[added]);
        for s in Source::ALL {
            let a = build_relevance_model(&e, &UserFeedback::new("q", small.iter().copied()), s, &params).unwrap();
            let b = build_relevance_model(&e, &UserFeedback::new("q", big.iter().copied()), s, &params).unwrap();
            for (t, wt) in &a.weights {
                prop_assert!(b.weight(t) >= *wt - 1e-12, "{} {}: {} < {}", s.name(), t, b.weight(t), wt);
            }
        }
    }

    #[test]
    fn related_docs_matches_full_sum(w in world()) {
        let e = w.engine(Parallelism::Sequential);
        let (idx, kb, store) = (e.index(), e.kb(), e.annotations());
        for c in 0..kb.len() as u32 {
            for word in WORDS {
                let brute: f64 = (0..idx.num_docs() as u32)
                    .map(|d| idx.term_doc_weight(word, d) * store.concept_doc_weight(c, d))
                    .sum();
                prop_assert!((store.related_docs_term_weight(idx, word, c) - brute).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn parallel_and_sequential_agree(w in world(), q in query_words(), pick in any::<u64>()) {
        let seq = w.engine(Parallelism::Sequential);
        let par = w.engine(Parallelism::Parallel);
        let q = seq.query("q", text(&q));
        prop_assert_eq!(seq.annotations().annotations(seq.index(), seq.kb()), par.annotations().annotations(par.index(), par.kb()));
        let params = ConceptSelectionParams::default();
        prop_assert_eq!(seq.suggest(&q, &params).unwrap(), par.suggest(&q, &params).unwrap());
        let ids = w.concept_ids();
        let fb = UserFeedback::new("q", ids.iter().enumerate().filter(|(i, _)| pick >> (i % 64) & 1 == 1).map(|(_, c)| c));
        let rp = RerankParams::default();
        prop_assert_eq!(seq.rerank(&q, &fb, &rp).unwrap(), par.rerank(&q, &fb, &rp).unwrap());
    }

    #[test]
    fn metrics_stay_in_unit_interval(ranking in prop::collection::vec(0u8..20, 0..20), rel in prop::collection::btree_set(0u8..20, 1..10)) {
        let ranking: Vec<String> = ranking.iter().map(|d| format!("x{d}")).collect();
        let judged: BTreeMap<String, u8> = rel.iter().map(|d| (format!("x{d}"), 1)).collect();
        for m in [average_precision(&ranking, &judged).unwrap(), ndcg(&ranking, &judged).unwrap()] {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&m));
        }
    }
}
