mod common;

use std::io::Write;

use conceptrank::eval::average_precision;
use conceptrank_service::session::snippet;
use conceptrank_service::{Journal, ServiceConfig, ServiceError, SessionManager, Step};

#[test]
fn create_shows_slate() {
    let f = common::fixture();
    let m = common::manager(&f);
    let s = m.create_session(&f.topics[0].text).unwrap();
    assert_eq!(s.step, Step::SlateShown);
    assert!(!s.slate.is_empty() && s.slate.len() <= 20);
    assert!(s.result_count > 0);
    assert!(s.created_at > 0 && s.updated_at == s.created_at);
}

#[test]
fn stopword_query_is_rejected() {
    let f = common::fixture();
    let m = common::manager(&f);
    let err = m.create_session("the of and").unwrap_err();
    assert!(matches!(err, ServiceError::EmptyQuery));
    assert_eq!(err.to_string(), "empty query");
    assert!(m.is_empty());
}

#[test]
fn same_query_gives_distinct_sessions_with_identical_slates() {
    let f = common::fixture();
    let m = common::manager(&f);
    let a = m.create_session(&f.topics[1].text).unwrap();
    let b = m.create_session(&f.topics[1].text).unwrap();
    assert_ne!(a.session_id, b.session_id);
    assert_eq!(a.slate, b.slate);
}

#[test]
fn empty_feedback_keeps_baseline_order() {
    let f = common::fixture();
    let m = common::manager(&f);
    let s = m.create_session(&f.topics[2].text).unwrap();
    let before = m.get_results(&s.session_id, 0, 1000).unwrap();
    assert_eq!(before.step, Step::SlateShown);
    let after = m.submit_feedback(&s.session_id, Vec::new()).unwrap();
    assert_eq!(after.step, Step::Reranked);
    let page = m.get_results(&s.session_id, 0, 1000).unwrap();
    let ids = |p: &conceptrank_service::ResultPage| p.items.iter().map(|i| i.doc_id.clone()).collect::<Vec<_>>();
    assert_eq!(ids(&page), ids(&before));
}

#[test]
fn feedback_errors() {
    let f = common::fixture();
    let m = common::manager(&f);
    let s = m.create_session(&f.topics[0].text).unwrap();
    let off_slate = f.concepts.iter().map(|c| c.concept_id.clone()).find(|c| s.slate.iter().all(|e| &e.concept_id != c)).unwrap();
    assert!(matches!(m.submit_feedback(&s.session_id, vec![off_slate]), Err(ServiceError::Validation(_))));
    // the rejected submission did not advance the session
    assert_eq!(m.get_session(&s.session_id).unwrap().step, Step::SlateShown);
    assert!(matches!(m.submit_feedback("missing", Vec::new()), Err(ServiceError::NotFound(_))));
    m.submit_feedback(&s.session_id, vec![s.slate[0].concept_id.clone()]).unwrap();
    assert!(matches!(m.submit_feedback(&s.session_id, Vec::new()), Err(ServiceError::Conflict(_))));
    assert!(matches!(m.get_results("missing", 0, 10), Err(ServiceError::NotFound(_))));
}

#[test]
fn oracle_feedback_does_not_hurt() {
    let f = common::fixture();
    let m = common::manager(&f);
    let (mut base, mut fed) = (0.0, 0.0);
    for t in &f.topics {
        let s = m.create_session(&t.text).unwrap();
        let judged_docs = f.doc_qrels.query(&t.query_id).unwrap();
        let ids = |m: &SessionManager| -> Vec<String> {
            m.get_results(&s.session_id, 0, 1000).unwrap().items.into_iter().map(|i| i.doc_id).collect()
        };
        base += average_precision(&ids(&m), judged_docs).unwrap();
        let picks: Vec<String> =
            s.slate.iter().filter(|e| f.concept_qrels.is_relevant(&t.query_id, &e.concept_id)).map(|e| e.concept_id.clone()).collect();
        m.submit_feedback(&s.session_id, picks).unwrap();
        fed += average_precision(&ids(&m), judged_docs).unwrap();
    }
    assert!(fed >= base, "feedback MAP {} < baseline {}", fed / 10.0, base / 10.0);
}

#[test]
fn pagination() {
    let f = common::fixture();
    let m = common::manager(&f);
    let s = m.create_session(&f.topics[3].text).unwrap();
    let page = m.get_results(&s.session_id, 0, 10).unwrap();
    assert_eq!(page.items.iter().map(|i| i.rank).collect::<Vec<_>>(), (1..=10).collect::<Vec<_>>());
    assert_eq!(page, m.get_results(&s.session_id, 0, 10).unwrap());
    let second = m.get_results(&s.session_id, 10, 5).unwrap();
    assert_eq!(second.items[0].rank, 11);
    assert!(m.get_results(&s.session_id, page.total, 10).unwrap().items.is_empty());
    assert!(page.items.iter().all(|i| i.snippet.chars().count() <= 200 && !i.title.is_empty()));
}

#[test]
fn sessions_are_isolated() {
    let f = common::fixture();
    let m = common::manager(&f);
    let a = m.create_session(&f.topics[0].text).unwrap();
    let b = m.create_session(&f.topics[1].text).unwrap();
    let before = m.get_results(&b.session_id, 0, 50).unwrap();
    m.submit_feedback(&a.session_id, vec![a.slate[0].concept_id.clone()]).unwrap();
    assert_eq!(m.get_session(&b.session_id).unwrap(), b);
    assert_eq!(m.get_results(&b.session_id, 0, 50).unwrap(), before);
}

#[test]
fn lru_cap_evicts_least_recently_used() {
    let f = common::fixture();
    let m = SessionManager::new(common::engine(&f), ServiceConfig { max_sessions: Some(2), ..Default::default() });
    let a = m.create_session(&f.topics[0].text).unwrap();
    let b = m.create_session(&f.topics[1].text).unwrap();
    m.get_session(&a.session_id).unwrap();
    let c = m.create_session(&f.topics[2].text).unwrap();
    assert_eq!(m.len(), 2);
    assert!(m.get_session(&a.session_id).is_ok());
    assert!(matches!(m.get_session(&b.session_id), Err(ServiceError::NotFound(_))));
    assert!(m.get_session(&c.session_id).is_ok());
}

#[test]
fn journal_replay_restores_sessions() {
    let f = common::fixture();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sessions.jsonl");
    let (a, b) = {
        let m = common::manager(&f).with_journal(Journal::open(&path).unwrap()).unwrap();
        let a = m.create_session(&f.topics[0].text).unwrap();
        let b = m.create_session(&f.topics[4].text).unwrap();
        let a = m.submit_feedback(&a.session_id, vec![a.slate[1].concept_id.clone()]).unwrap();
        (a, b)
    };
    let m = common::manager(&f).with_journal(Journal::open(&path).unwrap()).unwrap();
    assert_eq!(m.len(), 2);
    assert_eq!(m.get_session(&a.session_id).unwrap(), a);
    assert_eq!(m.get_session(&b.session_id).unwrap(), b);

    let fresh = common::manager(&f);
    let again = fresh.create_session(&f.topics[0].text).unwrap();
    fresh.submit_feedback(&again.session_id, a.selected.clone()).unwrap();
    let ids = |p: conceptrank_service::ResultPage| p.items.into_iter().map(|i| i.doc_id).collect::<Vec<_>>();
    assert_eq!(ids(m.get_results(&a.session_id, 0, 100).unwrap()), ids(fresh.get_results(&again.session_id, 0, 100).unwrap()));
}

#[test]
fn torn_journal_tail_is_ignored() {
    let f = common::fixture();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("j.jsonl");
    let id = {
        let m = common::manager(&f).with_journal(Journal::open(&path).unwrap()).unwrap();
        m.create_session(&f.topics[0].text).unwrap().session_id
    };
    std::fs::OpenOptions::new().append(true).open(&path).unwrap().write_all(b"{\"event\":\"feedb").unwrap();
    let m = common::manager(&f).with_journal(Journal::open(&path).unwrap()).unwrap();
    assert_eq!(m.get_session(&id).unwrap().step, Step::SlateShown);
}

#[test]
fn snippet_centers_on_query_term() {
    let f = common::fixture();
    let e = common::engine(&f);
    let q = e.query("q", "zebra");
    let body = format!("{} Zebra crossing {}", "lorem ".repeat(100), "ipsum ".repeat(100));
    let s = snippet(&body, &q, e.tokenizer());
    assert_eq!(s.chars().count(), 200);
    assert!(s.contains("Zebra crossing"));
    let short = snippet("short body", &q, e.tokenizer());
    assert_eq!(short, "short body");
    let none = snippet(&"abc ".repeat(100), &q, e.tokenizer());
    assert!(none.starts_with("abc abc"));
}
