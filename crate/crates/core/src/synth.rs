//! Generator for a planted test collection.
//!
//! Topics come in sibling pairs that share one query word, so BM25 alone
//! confuses a topic with its sibling. Each topic owns a few concepts whose
//! titles and aliases are planted in the topic's relevant documents, along
//! with topic-specific expansion vocabulary. Decoy documents repeat a
//! topic's own query word next to a distractor concept, and background
//! concepts are sprinkled everywhere.

use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::DocRecord;
use crate::error::{Error, Result};
use crate::eval::Judgments;
use crate::experiment::Topic;
use crate::io::write_jsonl_path;
use crate::kb::{Anchor, Concept};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub topics: usize,
    pub relevant_per_topic: usize,
    pub concepts_per_topic: usize,
    pub decoys_per_topic: usize,
    pub noise_docs: usize,
    pub background_concepts: usize,
    pub popular_concepts: usize,
    /// Chance that a document mentions each popular concept.
    pub popular_rate: f64,
    pub background_vocab: usize,
    pub expansion_vocab: usize,
    pub doc_background_tokens: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            topics: 10,
            relevant_per_topic: 20,
            concepts_per_topic: 3,
            decoys_per_topic: 5,
            noise_docs: 40,
            background_concepts: 40,
            popular_concepts: 3,
            popular_rate: 0.15,
            background_vocab: 400,
            expansion_vocab: 12,
            doc_background_tokens: 40,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub docs: Vec<DocRecord>,
    pub concepts: Vec<Concept>,
    pub topics: Vec<Topic>,
    pub doc_qrels: Judgments,
    pub concept_qrels: Judgments,
}

const SYLLABLES: [&str; 16] = [
    "ka", "lo", "mi", "ne", "su", "ta", "ri", "vo", "pe", "du", "ga", "zi", "bo", "fe", "hu", "ja",
];

/// Pronounceable, collision-free pseudo-words.
struct Words(usize);

impl Words {
    fn next(&mut self) -> String {
        let mut n = self.0;
        self.0 += 1;
        let mut w = String::new();
        for _ in 0..3 {
            w.push_str(SYLLABLES[n % 16]);
            n /= 16;
        }
        while n > 0 {
            w.push_str(SYLLABLES[n % 16]);
            n /= 16;
        }
        w
    }

    fn take(&mut self, k: usize) -> Vec<String> {
        (0..k).map(|_| self.next()).collect()
    }
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    c.next().map_or_else(String::new, |f| f.to_uppercase().chain(c).collect())
}

struct PlantedConcept {
    id: String,
    title: Vec<String>,
    alias: Vec<String>,
}

impl PlantedConcept {
    fn mention(&self, rng: &mut ChaCha8Rng) -> Vec<String> {
        if rng.random_bool(0.6) {
            self.title.clone()
        } else {
            self.alias.clone()
        }
    }
}

struct TopicPlan {
    own: String,
    shared: String,
    expansion: Vec<String>,
    concepts: Vec<PlantedConcept>,
    distractor: PlantedConcept,
}

impl Fixture {
    pub fn generate(cfg: &SynthConfig) -> Result<Self> {
        if cfg.topics == 0 || cfg.concepts_per_topic == 0 || cfg.background_vocab == 0 || cfg.expansion_vocab == 0 {
            return Err(Error::InvalidParam("fixture needs topics, concepts and vocabulary".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut words = Words(0);
        let background = words.take(cfg.background_vocab);
        let shared_words = words.take(cfg.topics.div_ceil(2));

        let mut concepts = Vec::new();
        let mut concept_qrels = Judgments::new();
        // ids are drawn from a shuffled numbering so id order says nothing about relevance
        let total_concepts = cfg.topics * (cfg.concepts_per_topic + 1) + cfg.background_concepts + cfg.popular_concepts;
        let mut concept_numbers: Vec<usize> = (1..=total_concepts).collect();
        concept_numbers.shuffle(&mut rng);
        let mut concept_numbers = concept_numbers.into_iter();
        let mut make_concept = |title: Vec<String>, alias: Vec<String>, article: String, count: u32, concepts: &mut Vec<Concept>| {
            let concept_no = concept_numbers.next().expect("concept count");
            let title_text = title.iter().map(|w| capitalize(w)).collect::<Vec<_>>().join(" ");
            let id = format!("C{concept_no:03}_{}", title_text.replace(' ', "_"));
            concepts.push(Concept {
                concept_id: id.clone(),
                title: title_text.clone(),
                article_text: article,
                anchors: vec![
                    Anchor { text: title_text.clone(), count },
                    Anchor { text: alias.join(" "), count: count.div_ceil(2) },
                ],
                url: Some(format!("https://example.org/wiki/{}", title_text.replace(' ', "_"))),
            });
            PlantedConcept { id, title, alias }
        };

        let bg = |rng: &mut ChaCha8Rng, n: usize| -> Vec<String> {
            // skewed toward the head of the background vocabulary
            (0..n)
                .map(|_| {
                    let u: f64 = rng.random();
                    background[((u * u) * background.len() as f64) as usize].clone()
                })
                .collect()
        };

        let mut plans = Vec::with_capacity(cfg.topics);
        for t in 0..cfg.topics {
            let own = words.next();
            let shared = shared_words[t / 2].clone();
            let expansion = words.take(cfg.expansion_vocab);
            let mut topic_concepts = Vec::new();
            for j in 0..cfg.concepts_per_topic {
                let mut title = words.take(2);
                // one concept per topic names the query directly
                if j == 0 {
                    title[1] = own.clone();
                }
                let alias = vec![words.next(), expansion[j % expansion.len()].clone()];
                let mut article: Vec<String> = (0..30).map(|_| expansion.choose(&mut rng).unwrap().clone()).collect();
                article.extend(title.iter().cloned());
                article.extend(bg(&mut rng, 20));
                if rng.random_bool(0.5) {
                    article.push(shared.clone());
                }
                if rng.random_bool(0.4) {
                    article.push(own.clone());
                }
                article.shuffle(&mut rng);
                let c = make_concept(title, alias, article.join(" "), 20 + rng.random_range(0..20), &mut concepts);
                topic_concepts.push(c);
            }
            let distractor_title = vec![own.clone(), words.next()];
            let distractor_alias = vec![words.next()];
            let mut article = bg(&mut rng, 40);
            article.push(own.clone());
            let distractor = make_concept(distractor_title, distractor_alias, article.join(" "), 15, &mut concepts);
            plans.push(TopicPlan {
                own,
                shared,
                expansion,
                concepts: topic_concepts,
                distractor,
            });
        }

        // background articles and aliases sometimes mention query words
        let query_words: Vec<String> = plans.iter().flat_map(|p| [p.own.clone(), p.shared.clone()]).collect();
        let mut background_concepts = Vec::new();
        for _ in 0..cfg.background_concepts {
            let title = words.take(2);
            let mut alias = vec![words.next()];
            let mut article = bg(&mut rng, 40);
            if rng.random_bool(0.3) {
                article.push(query_words.choose(&mut rng).unwrap().clone());
            }
            if rng.random_bool(0.15) {
                alias.push(query_words.choose(&mut rng).unwrap().clone());
            }
            let c = make_concept(title, alias, article.join(" "), 10, &mut concepts);
            background_concepts.push(c);
        }
        // a handful of concepts mentioned all over the corpus
        let popular: Vec<PlantedConcept> = (0..cfg.popular_concepts)
            .map(|_| {
                let title = words.take(2);
                let alias = vec![words.next()];
                let article = bg(&mut rng, 40).join(" ");
                make_concept(title, alias, article, 200, &mut concepts)
            })
            .collect();
        let sprinkle = |rng: &mut ChaCha8Rng, chunks: &mut Vec<Vec<String>>| {
            chunks.push(background_concepts.choose(rng).unwrap().mention(rng));
            for p in &popular {
                if rng.random_bool(cfg.popular_rate) {
                    for _ in 0..rng.random_range(1..=2) {
                        chunks.push(p.mention(rng));
                    }
                }
            }
        };

        let mut docs = Vec::new();
        let mut doc_qrels = Judgments::new();
        let total_docs = cfg.topics * (cfg.relevant_per_topic + cfg.decoys_per_topic) + cfg.noise_docs;
        let mut doc_numbers: Vec<usize> = (1..=total_docs).collect();
        doc_numbers.shuffle(&mut rng);
        let mut doc_numbers = doc_numbers.into_iter();
        let mut next_doc_id = || format!("D{:04}", doc_numbers.next().expect("doc count"));
        let finish = |rng: &mut ChaCha8Rng, mut chunks: Vec<Vec<String>>| -> (String, String) {
            chunks.shuffle(rng);
            let tokens: Vec<String> = chunks.concat();
            let split = tokens.len().min(6);
            (
                tokens[..split].iter().map(|w| capitalize(w)).collect::<Vec<_>>().join(" "),
                tokens[split..].join(" ") + ".",
            )
        };

        for (t, plan) in plans.iter().enumerate() {
            let qid = format!("T{:02}", t + 1);
            for _ in 0..cfg.relevant_per_topic {
                let mut chunks: Vec<Vec<String>> = bg(&mut rng, cfg.doc_background_tokens).into_iter().map(|w| vec![w]).collect();
                for _ in 0..rng.random_range(3..=8) {
                    chunks.push(vec![plan.expansion.choose(&mut rng).unwrap().clone()]);
                }
                if rng.random_bool(0.85) {
                    chunks.push(plan.concepts.choose(&mut rng).unwrap().mention(&mut rng));
                }
                if rng.random_bool(0.4) {
                    chunks.push(plan.concepts.choose(&mut rng).unwrap().mention(&mut rng));
                }
                sprinkle(&mut rng, &mut chunks);
                let has_shared = rng.random_bool(0.7);
                let has_own = rng.random_bool(0.35);
                if has_shared || !has_own {
                    for _ in 0..rng.random_range(1..=2) {
                        chunks.push(vec![plan.shared.clone()]);
                    }
                }
                if has_own {
                    chunks.push(vec![plan.own.clone()]);
                }
                let (title, body) = finish(&mut rng, chunks);
                let id = next_doc_id();
                doc_qrels.insert(&qid, &id, true);
                docs.push(DocRecord { doc_id: id, title, body });
            }
            for _ in 0..cfg.decoys_per_topic {
                let mut chunks: Vec<Vec<String>> = bg(&mut rng, cfg.doc_background_tokens).into_iter().map(|w| vec![w]).collect();
                for _ in 0..rng.random_range(1..=3) {
                    chunks.push(vec![plan.own.clone()]);
                }
                if rng.random_bool(0.5) {
                    chunks.push(vec![plan.shared.clone()]);
                }
                chunks.push(plan.distractor.mention(&mut rng));
                sprinkle(&mut rng, &mut chunks);
                let (title, body) = finish(&mut rng, chunks);
                let id = next_doc_id();
                doc_qrels.insert(&qid, &id, false);
                docs.push(DocRecord { doc_id: id, title, body });
            }
        }
        for _ in 0..cfg.noise_docs {
            let mut chunks: Vec<Vec<String>> = bg(&mut rng, cfg.doc_background_tokens + 8).into_iter().map(|w| vec![w]).collect();
            sprinkle(&mut rng, &mut chunks);
            if rng.random_bool(0.6) {
                let p = plans.choose(&mut rng).unwrap();
                chunks.push(vec![if rng.random_bool(0.5) { p.own.clone() } else { p.shared.clone() }]);
            }
            let (title, body) = finish(&mut rng, chunks);
            docs.push(DocRecord { doc_id: next_doc_id(), title, body });
        }

        let mut topics = Vec::with_capacity(cfg.topics);
        for (t, plan) in plans.iter().enumerate() {
            let qid = format!("T{:02}", t + 1);
            for c in &plan.concepts {
                concept_qrels.insert(&qid, &c.id, true);
            }
            concept_qrels.insert(&qid, &plan.distractor.id, false);
            topics.push(Topic {
                query_id: qid,
                text: format!("{} {}", plan.shared, plan.own),
            });
        }

        Ok(Self {
            docs,
            concepts,
            topics,
            doc_qrels,
            concept_qrels,
        })
    }

    /// Writes `corpus.jsonl`, `kb.jsonl`, `topics.jsonl`, `qrels.txt` and
    /// `concept_qrels.txt` into `dir`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_jsonl_path(dir.join("corpus.jsonl"), &self.docs)?;
        write_jsonl_path(dir.join("kb.jsonl"), &self.concepts)?;
        write_jsonl_path(dir.join("topics.jsonl"), &self.topics)?;
        for (name, qrels) in [("qrels.txt", &self.doc_qrels), ("concept_qrels.txt", &self.concept_qrels)] {
            let path = dir.join(name);
            let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            qrels.write(std::io::BufWriter::new(file)).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}
