//! Four-step interactive sessions: query, concept slate, feedback, re-ranked
//! results.

use std::collections::{BTreeSet, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use conceptrank::{ConceptSelectionParams, ConceptSlate, Engine, Query, RankedList, RerankParams, UserFeedback};
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::journal::{Journal, Record};

pub const SNIPPET_CHARS: usize = 200;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("empty query")]
    EmptyQuery,
    #[error("session {0} not found")]
    NotFound(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Conflict(String),
    #[error(transparent)]
    Engine(#[from] conceptrank::Error),
    #[error("journal: {0}")]
    Journal(#[from] std::io::Error),
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::EmptyQuery => "empty_query",
            ServiceError::NotFound(_) => "not_found",
            ServiceError::Validation(_) => "validation",
            ServiceError::Conflict(_) => "conflict",
            ServiceError::Engine(_) | ServiceError::Journal(_) => "internal",
        }
    }
}

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Step {
    Queried,
    SlateShown,
    FeedbackReceived,
    Reranked,
}

#[derive(Debug, Clone)]
pub struct Session {
    pub session_id: String,
    pub query: Query,
    pub step: Step,
    pub slate: ConceptSlate,
    pub feedback: UserFeedback,
    pub baseline: RankedList,
    pub results: RankedList,
    pub created_at: u64,
    pub updated_at: u64,
}

impl Session {
    fn advance(&mut self, to: Step, now: u64) {
        debug_assert!(to > self.step, "{:?} -> {:?}", self.step, to);
        self.step = to;
        self.updated_at = now;
    }

    /// The ranking shown to the user: re-ranked once feedback is in,
    /// otherwise the baseline.
    pub fn ranking(&self) -> &RankedList {
        if self.step == Step::Reranked {
            &self.results
        } else {
            &self.baseline
        }
    }

    pub fn view(&self) -> SessionView {
        SessionView {
            session_id: self.session_id.clone(),
            query: self.query.raw_text.clone(),
            step: self.step,
            slate: self
                .slate
                .entries
                .iter()
                .map(|e| SlateItem {
                    rank: e.rank,
                    concept_id: e.score.concept_id.clone(),
                    title: e.title.clone(),
                    url: e.url.clone(),
                    score: e.score.combined,
                })
                .collect(),
            selected: self.feedback.selected_concepts.iter().cloned().collect(),
            result_count: self.ranking().len(),
            created_at: self.created_at,
            updated_at: self.updated_at,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlateItem {
    pub rank: usize,
    pub concept_id: String,
    pub title: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub query: String,
    pub step: Step,
    pub slate: Vec<SlateItem>,
    pub selected: Vec<String>,
    pub result_count: usize,
    /// Milliseconds since the Unix epoch.
    pub created_at: u64,
    pub updated_at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultItem {
    pub rank: usize,
    pub doc_id: String,
    pub title: String,
    pub snippet: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultPage {
    pub session_id: String,
    pub step: Step,
    pub total: usize,
    pub offset: usize,
    pub items: Vec<ResultItem>,
}

#[derive(Debug, Clone, Default)]
pub struct ServiceConfig {
    pub select: ConceptSelectionParams,
    pub rerank: RerankParams,
    /// Least recently used sessions are evicted beyond this many.
    pub max_sessions: Option<usize>,
}

struct Slot {
    session: Arc<Mutex<Session>>,
    last_used: u64,
}

pub struct SessionManager {
    engine: Arc<Engine>,
    config: ServiceConfig,
    sessions: Mutex<HashMap<String, Slot>>,
    clock: AtomicU64,
    journal: Option<Mutex<Journal>>,
}

fn now_millis() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

impl SessionManager {
    pub fn new(engine: Arc<Engine>, config: ServiceConfig) -> Self {
        Self { engine, config, sessions: Mutex::new(HashMap::new()), clock: AtomicU64::new(0), journal: None }
    }

    /// Replays `journal` into the manager, then appends new events to it.
    pub fn with_journal(mut self, journal: Journal) -> Result<Self> {
        for record in journal.replay()? {
            match record {
                Record::Created { session_id, query, at } => {
                    self.open(session_id, &query, at)?;
                }
                // reads are not journaled, so a capped replay may evict differently
                Record::Feedback { session_id, selected, at } => match self.apply_feedback(&session_id, selected, at) {
                    Ok(_) | Err(ServiceError::NotFound(_)) => {}
                    Err(e) => return Err(e),
                },
            }
        }
        self.journal = Some(Mutex::new(journal));
        Ok(self)
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn len(&self) -> usize {
        self.sessions.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn record(&self, record: &Record) -> Result<()> {
        if let Some(j) = &self.journal {
            j.lock().append(record)?;
        }
        Ok(())
    }

    fn tick(&self) -> u64 {
        self.clock.fetch_add(1, Ordering::Relaxed)
    }

    fn lookup(&self, session_id: &str) -> Result<Arc<Mutex<Session>>> {
        let tick = self.tick();
        let mut sessions = self.sessions.lock();
        let slot = sessions.get_mut(session_id).ok_or_else(|| ServiceError::NotFound(session_id.to_string()))?;
        slot.last_used = tick;
        Ok(slot.session.clone())
    }

    fn open(&self, session_id: String, query_text: &str, at: u64) -> Result<Arc<Mutex<Session>>> {
        let query = self.engine.query(session_id.clone(), query_text);
        if query.is_empty() {
            return Err(ServiceError::EmptyQuery);
        }
        let mut session = Session {
            session_id: session_id.clone(),
            baseline: self.engine.search(&query, self.config.rerank.rerank_pool),
            feedback: UserFeedback::new(session_id.clone(), Vec::<String>::new()),
            query,
            step: Step::Queried,
            slate: ConceptSlate::default(),
            results: RankedList::default(),
            created_at: at,
            updated_at: at,
        };
        session.slate = self.engine.suggest(&session.query, &self.config.select)?;
        session.advance(Step::SlateShown, at);

        let session = Arc::new(Mutex::new(session));
        let tick = self.tick();
        let mut sessions = self.sessions.lock();
        sessions.insert(session_id, Slot { session: session.clone(), last_used: tick });
        if let Some(cap) = self.config.max_sessions {
            while sessions.len() > cap.max(1) {
                let oldest = sessions.iter().min_by_key(|(_, s)| s.last_used).map(|(id, _)| id.clone());
                match oldest {
                    Some(id) => sessions.remove(&id),
                    None => break,
                };
            }
        }
        Ok(session)
    }

    pub fn create_session(&self, query_text: &str) -> Result<SessionView> {
        let id = Uuid::new_v4().to_string();
        let at = now_millis();
        let session = self.open(id.clone(), query_text, at)?;
        self.record(&Record::Created { session_id: id, query: query_text.to_string(), at })?;
        let view = session.lock().view();
        Ok(view)
    }

    fn apply_feedback(&self, session_id: &str, selected: BTreeSet<String>, at: u64) -> Result<SessionView> {
        let session = self.lookup(session_id)?;
        let mut s = session.lock();
        if s.step != Step::SlateShown {
            return Err(ServiceError::Conflict(format!(
                "session {session_id} is in step {:?}; feedback is accepted once, after the slate is shown",
                s.step
            )));
        }
        let on_slate: BTreeSet<&str> = s.slate.concept_ids().collect();
        if let Some(stray) = selected.iter().find(|c| !on_slate.contains(c.as_str())) {
            return Err(ServiceError::Validation(format!("concept {stray} is not on the slate")));
        }
        s.feedback = UserFeedback { query_id: session_id.to_string(), selected_concepts: selected };
        s.advance(Step::FeedbackReceived, at);
        let outcome = self.engine.rerank(&s.query, &s.feedback, &self.config.rerank)?;
        s.results = outcome.ranked_list();
        s.advance(Step::Reranked, at);
        Ok(s.view())
    }

    pub fn submit_feedback(&self, session_id: &str, selected: impl IntoIterator<Item = String>) -> Result<SessionView> {
        let selected: BTreeSet<String> = selected.into_iter().collect();
        let at = now_millis();
        let view = self.apply_feedback(session_id, selected.clone(), at)?;
        self.record(&Record::Feedback { session_id: session_id.to_string(), selected, at })?;
        Ok(view)
    }

    pub fn get_session(&self, session_id: &str) -> Result<SessionView> {
        let view = self.lookup(session_id)?.lock().view();
        Ok(view)
    }

    pub fn get_results(&self, session_id: &str, offset: usize, limit: usize) -> Result<ResultPage> {
        let session = self.lookup(session_id)?;
        let s = session.lock();
        let ranking = s.ranking();
        let index = self.engine.index();
        let items = ranking
            .entries
            .iter()
            .skip(offset)
            .take(limit)
            .map(|e| {
                let doc = index.document(index.doc_no(&e.doc_id).expect("ranked doc is indexed"));
                ResultItem {
                    rank: e.rank,
                    doc_id: e.doc_id.clone(),
                    title: doc.title.clone(),
                    snippet: snippet(&doc.body, &s.query, self.engine.tokenizer()),
                    score: e.score,
                }
            })
            .collect();
        Ok(ResultPage { session_id: session_id.to_string(), step: s.step, total: ranking.len(), offset, items })
    }
}

/// Up to [`SNIPPET_CHARS`] characters of `body`, starting shortly before the
/// first word that tokenizes to a query term.
pub fn snippet(body: &str, query: &Query, tokenizer: &conceptrank::Tokenizer) -> String {
    const LEAD: usize = 40;
    let chars: Vec<(usize, char)> = body.char_indices().collect();
    let mut hit = None;
    let mut start = None;
    for (i, &(_, c)) in chars.iter().chain(std::iter::once(&(body.len(), ' '))).enumerate() {
        if c.is_alphanumeric() {
            start.get_or_insert(i);
        } else if let Some(s) = start.take() {
            let word = &body[chars[s].0..chars.get(i).map_or(body.len(), |c| c.0)];
            if tokenizer.tokenize(word).iter().any(|t| query.term_counts.contains_key(t)) {
                hit = Some(s);
                break;
            }
        }
    }
    let from = hit.map_or(0, |h| h.saturating_sub(LEAD));
    let from = if from + SNIPPET_CHARS > chars.len() { chars.len().saturating_sub(SNIPPET_CHARS) } else { from };
    chars[from..].iter().take(SNIPPET_CHARS).map(|&(_, c)| c).collect()
}
