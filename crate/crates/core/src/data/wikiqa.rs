use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::data::{read_text, tokenize};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QAPair {
    pub question: Vec<String>,
    pub answer: Vec<String>,
    pub relevant: bool,
    /// Stable query id, numbered by first appearance in the file.
    pub group: usize,
}

/// Reads answer-selection records in file order.
///
/// Accepts the official 7-column layout (`QuestionID, Question, DocumentID,
/// DocumentTitle, SentenceID, Sentence, Label`, header optional), grouped by
/// question id, or a 3-column `question \t candidate \t label` layout grouped
/// by question text.
pub fn load_wikiqa(path: &Path) -> Result<Vec<QAPair>> {
    let text = read_text(path)?;
    let origin = path.display().to_string();
    let mut out = Vec::new();
    let mut groups: HashMap<String, usize> = HashMap::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: origin.clone(),
            line: n + 1,
            msg,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if n == 0 && fields[0] == "QuestionID" {
            continue;
        }
        let (key, question, answer, label) = match fields.len() {
            7 => (fields[0], fields[1], fields[5], fields[6]),
            3 => (fields[0], fields[0], fields[1], fields[2]),
            k => return Err(err(format!("expected 3 or 7 tab-separated fields, found {k}"))),
        };
        let relevant = match label.trim() {
            "1" => true,
            "0" => false,
            other => return Err(err(format!("label must be 0 or 1, got {other:?}"))),
        };
        let next = groups.len();
        let group = *groups.entry(key.to_string()).or_insert(next);
        out.push(QAPair {
            question: tokenize(question),
            answer: tokenize(answer),
            relevant,
            group,
        });
    }
    Ok(out)
}

/// Pairs bucketed by query id, groups in id order, candidates in file order.
pub fn group_pairs(pairs: &[QAPair]) -> Vec<Vec<QAPair>> {
    let n = pairs.iter().map(|p| p.group + 1).max().unwrap_or(0);
    let mut groups = vec![Vec::new(); n];
    for p in pairs {
        groups[p.group].push(p.clone());
    }
    groups.retain(|g| !g.is_empty());
    groups
}

/// Serializes in the 3-column layout.
pub fn write_wikiqa(pairs: &[QAPair]) -> String {
    let mut s = String::new();
    for p in pairs {
        let _ = writeln!(s, "{}\t{}\t{}", p.question.join(" "), p.answer.join(" "), u8::from(p.relevant));
    }
    s
}
