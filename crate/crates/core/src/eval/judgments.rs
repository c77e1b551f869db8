use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Binary relevance judgments, `query_id -> item_id -> {0, 1}`.
///
/// Read from TREC qrels lines `query_id 0 item_id relevance`; any positive
/// grade counts as relevant.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Judgments(BTreeMap<String, BTreeMap<String, u8>>);

impl Judgments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, query_id: impl Into<String>, item_id: impl Into<String>, relevant: bool) {
        self.0
            .entry(query_id.into())
            .or_default()
            .insert(item_id.into(), relevant as u8);
    }

    pub fn parse(reader: impl BufRead, source_name: &str) -> Result<Self> {
        let mut out = Self::new();
        for (i, line) in reader.lines().enumerate() {
            let malformed = |message: String| Error::Malformed {
                source_name: source_name.to_string(),
                line: i + 1,
                message,
            };
            let line = line.map_err(|e| malformed(e.to_string()))?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let [query, _iteration, item, grade] = fields[..] else {
                return Err(malformed(format!("expected 4 fields, found {}", fields.len())));
            };
            let grade: i64 = grade
                .parse()
                .map_err(|_| malformed(format!("relevance {grade:?} is not an integer")))?;
            if grade < 0 {
                return Err(malformed(format!("negative relevance {grade}")));
            }
            out.insert(query, item, grade > 0);
        }
        Ok(out)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(std::io::BufReader::new(file), &path.display().to_string())
    }

    pub fn write(&self, mut writer: impl Write) -> std::io::Result<()> {
        for (q, items) in &self.0 {
            for (item, rel) in items {
                writeln!(writer, "{q} 0 {item} {rel}")?;
            }
        }
        Ok(())
    }

    pub fn query(&self, query_id: &str) -> Option<&BTreeMap<String, u8>> {
        self.0.get(query_id)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn is_relevant(&self, query_id: &str, item_id: &str) -> bool {
        self.query(query_id)
            .and_then(|m| m.get(item_id))
            .is_some_and(|&r| r > 0)
    }

    pub fn relevant_items(&self, query_id: &str) -> impl Iterator<Item = &str> {
        self.query(query_id)
            .into_iter()
            .flat_map(|m| m.iter().filter(|(_, &r)| r > 0).map(|(k, _)| k.as_str()))
    }

    pub fn num_relevant(&self, query_id: &str) -> usize {
        self.relevant_items(query_id).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_qrels() {
        let text = "q1 0 d1 1\nq1 0 d2 0\n\nq2 0 d3 2\n";
        let j = Judgments::parse(text.as_bytes(), "qrels").unwrap();
        assert!(j.is_relevant("q1", "d1"));
        assert!(!j.is_relevant("q1", "d2"));
        assert!(j.is_relevant("q2", "d3"));
        assert!(!j.is_relevant("q3", "d3"));
        assert_eq!(j.num_relevant("q1"), 1);

        let mut out = Vec::new();
        j.write(&mut out).unwrap();
        assert_eq!(Judgments::parse(out.as_slice(), "again").unwrap(), j);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(matches!(
            Judgments::parse("q1 0 d1\n".as_bytes(), "x"),
            Err(Error::Malformed { line: 1, .. })
        ));
        assert!(Judgments::parse("q1 0 d1 x\n".as_bytes(), "x").is_err());
        assert!(Judgments::parse("q1 0 d1 -1\n".as_bytes(), "x").is_err());
    }
}
