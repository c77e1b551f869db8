#![allow(dead_code)]

use std::sync::Arc;

use conceptrank::synth::{Fixture, SynthConfig};
use conceptrank::{Engine, InvertedIndex, KnowledgeBase, Tokenizer};
use conceptrank_service::{ServiceConfig, SessionManager};

pub fn fixture() -> Fixture {
    Fixture::generate(&SynthConfig::default()).unwrap()
}

pub fn engine(f: &Fixture) -> Arc<Engine> {
    let index = InvertedIndex::build(f.docs.clone(), Tokenizer::default()).unwrap();
    let kb = KnowledgeBase::build(f.concepts.clone(), Tokenizer::default()).unwrap();
    Arc::new(Engine::annotated(index, kb))
}

pub fn manager(f: &Fixture) -> SessionManager {
    SessionManager::new(engine(f), ServiceConfig::default())
}
