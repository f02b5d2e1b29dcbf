//! Label (`{"id","label"}`) and combined vote (`{"id","votes"}`) JSONL files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::Label;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelRecord {
    pub id: String,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoteRecord {
    pub id: String,
    pub votes: Vec<Label>,
}

/// Either kind of prediction line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PredictionFile {
    Labels(Vec<(String, Label)>),
    Votes(Vec<VoteRecord>),
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_lines<T: for<'de> Deserialize<'de>>(document: &str) -> Result<Vec<T>> {
    document
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::from_json(e, &format!("line {}", i + 1))))
        .collect()
}

pub fn parse_labels(document: &str) -> Result<Vec<(String, Label)>> {
    Ok(parse_lines::<LabelRecord>(document)?
        .into_iter()
        .map(|r| (r.id, r.label))
        .collect())
}

pub fn parse_votes(document: &str) -> Result<Vec<VoteRecord>> {
    parse_lines(document)
}

/// Detects the file kind from its first non-blank line.
pub fn parse_predictions(document: &str) -> Result<PredictionFile> {
    let first = document.lines().find(|l| !l.trim().is_empty());
    match first {
        Some(l) if serde_json::from_str::<VoteRecord>(l).is_ok() => {
            Ok(PredictionFile::Votes(parse_votes(document)?))
        }
        _ => Ok(PredictionFile::Labels(parse_labels(document)?)),
    }
}

pub fn render_labels<'a>(labels: impl IntoIterator<Item = (&'a str, Label)>) -> String {
    let mut out = String::new();
    for (id, label) in labels {
        let rec = LabelRecord { id: id.to_string(), label };
        out.push_str(&serde_json::to_string(&rec).expect("label record serializes"));
        out.push('\n');
    }
    out
}

pub fn render_votes(records: &[VoteRecord]) -> String {
    let mut out = String::new();
    for rec in records {
        out.push_str(&serde_json::to_string(rec).expect("vote record serializes"));
        out.push('\n');
    }
    out
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<(String, Label)>> {
    let path = path.as_ref();
    parse_labels(&read_text(path)?).map_err(|e| with_path(path, e))
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<PredictionFile> {
    let path = path.as_ref();
    parse_predictions(&read_text(path)?).map_err(|e| with_path(path, e))
}

fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse { position, message } => {
            Error::Parse { position: format!("{} {position}", path.display()), message }
        }
        Error::Schema(m) => Error::Schema(format!("{}: {m}", path.display())),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_lines() {
        let doc = "{\"id\":\"a\",\"label\":\"Yes\"}\n\n{\"id\":\"b\",\"label\":\"To some extent\"}\n";
        let labels = parse_labels(doc).unwrap();
        assert_eq!(labels, vec![("a".into(), Label::Yes), ("b".into(), Label::ToSomeExtent)]);
        let rendered = render_labels(labels.iter().map(|(i, l)| (i.as_str(), *l)));
        assert_eq!(rendered, doc.replace("\n\n", "\n"));
    }

    #[test]
    fn bad_label_line_is_schema_error() {
        let err = parse_labels("{\"id\":\"a\",\"label\":\"yes\"}").unwrap_err();
        assert!(matches!(err, Error::Schema(ref m) if m.contains("line 1")), "{err}");
    }

    #[test]
    fn detects_vote_files() {
        let doc = "{\"id\":\"a\",\"votes\":[\"Yes\",\"No\"]}\n";
        match parse_predictions(doc).unwrap() {
            PredictionFile::Votes(v) => assert_eq!(v[0].votes, vec![Label::Yes, Label::No]),
            other => panic!("{other:?}"),
        }
        let doc = "{\"id\":\"a\",\"label\":\"No\"}\n";
        assert!(matches!(parse_predictions(doc).unwrap(), PredictionFile::Labels(_)));
    }
}
