//! Interactive document retrieval with concept feedback.
//!
//! A query is ranked with BM25 and matched against a knowledge base of
//! concepts (title, article text, anchor texts). The engine proposes a
//! slate of concepts, the user marks the relevant ones, and documents are
//! re-ranked by fusing the initial query score with concept-derived
//! evidence.
//!
//! ```no_run
//! use conceptrank::{Engine, Tokenizer, ConceptSelectionParams, RerankParams, UserFeedback};
//! # fn main() -> conceptrank::Result<()> {
//! let engine = Engine::load("corpus.jsonl".as_ref(), "kb.jsonl".as_ref(), None, Tokenizer::default())?;
//! let query = engine.query("q1", "tire recycling");
//! let slate = engine.suggest(&query, &ConceptSelectionParams::default())?;
//! let picked = UserFeedback::new("q1", slate.concept_ids().take(2));
//! let results = engine.rerank(&query, &picked, &RerankParams::default())?;
//! # let _ = results;
//! # Ok(())
//! # }
//! ```

pub mod annotate;
pub mod corpus;
pub mod engine;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod fusion;
pub mod io;
pub mod kb;
pub mod par;
pub mod rerank;
pub mod select;
pub mod synth;
pub mod text;
pub mod weight;

pub use annotate::{Annotation, AnnotationStore, Annotator};
pub use corpus::{Bm25Params, CorpusStats, DocRecord, Document, InvertedIndex, Query, RankedEntry, RankedList};
pub use engine::Engine;
pub use error::{Error, Result};
pub use fusion::z_normalize;
pub use kb::{Anchor, Concept, KbStats, KnowledgeBase};
pub use par::Parallelism;
pub use rerank::{RelevanceModel, RerankOutcome, RerankParams, UserFeedback};
pub use select::{ConceptScore, ConceptSelectionParams, ConceptSlate, PoolStrategy, Source};
pub use text::Tokenizer;
