use std::path::Path;

use crate::data::read_text;
use crate::error::{Error, Result};

/// Labeled token span `[start, end)` inside a sentence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Phrase {
    pub start: usize,
    pub end: usize,
    pub label: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledSentence {
    pub tokens: Vec<String>,
    pub label: usize,
    /// Every labeled constituent, root first (pre-order). Empty for corpora
    /// without phrase annotations.
    pub phrases: Vec<Phrase>,
}

impl LabeledSentence {
    pub fn new(tokens: Vec<String>, label: usize) -> Self {
        LabeledSentence {
            tokens,
            label,
            phrases: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SstMode {
    /// Five classes 0..=4.
    Fine,
    /// Neutral (2) dropped, {0,1} → 0, {3,4} → 1.
    Binary,
}

impl SstMode {
    pub fn n_classes(self) -> usize {
        match self {
            SstMode::Fine => 5,
            SstMode::Binary => 2,
        }
    }

    fn map(self, label: usize) -> Option<usize> {
        match self {
            SstMode::Fine => Some(label),
            SstMode::Binary => match label {
                0 | 1 => Some(0),
                3 | 4 => Some(1),
                _ => None,
            },
        }
    }
}

#[derive(Debug, PartialEq)]
enum Tok<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn lex(line: &str) -> Vec<Tok<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch == '(' || ch == ')' || ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Tok::Atom(&line[s..i]));
            }
            match ch {
                '(' => out.push(Tok::Open),
                ')' => out.push(Tok::Close),
                _ => {}
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Tok::Atom(&line[s..]));
    }
    out
}

struct Parser<'a> {
    toks: Vec<Tok<'a>>,
    pos: usize,
    words: Vec<String>,
    phrases: Vec<Phrase>,
}

impl<'a> Parser<'a> {
    fn next(&mut self) -> Option<&Tok<'a>> {
        let t = self.toks.get(self.pos);
        self.pos += 1;
        t
    }

    fn node(&mut self) -> std::result::Result<(), String> {
        if self.next() != Some(&Tok::Open) {
            return Err("expected '('".into());
        }
        let label = match self.next() {
            Some(Tok::Atom(a)) => a.parse::<usize>().map_err(|_| format!("bad label {a:?}"))?,
            _ => return Err("expected a label after '('".into()),
        };
        let slot = self.phrases.len();
        let start = self.words.len();
        self.phrases.push(Phrase { start, end: start, label });
        match self.toks.get(self.pos) {
            Some(Tok::Atom(w)) => {
                self.words.push(w.to_string());
                self.pos += 1;
                if self.next() != Some(&Tok::Close) {
                    return Err("unbalanced parentheses: leaf not closed".into());
                }
            }
            Some(Tok::Open) => loop {
                match self.toks.get(self.pos) {
                    Some(Tok::Open) => self.node()?,
                    Some(Tok::Close) => {
                        self.pos += 1;
                        break;
                    }
                    Some(Tok::Atom(a)) => return Err(format!("unexpected token {a:?}")),
                    None => return Err("unbalanced parentheses: missing ')'".into()),
                }
            },
            _ => return Err("unbalanced parentheses: empty node".into()),
        }
        self.phrases[slot].end = self.words.len();
        Ok(())
    }
}

/// Parses one treebank line in fine-grained labels.
pub fn parse_sst_line(line: &str) -> std::result::Result<LabeledSentence, String> {
    let mut p = Parser {
        toks: lex(line),
        pos: 0,
        words: Vec::new(),
        phrases: Vec::new(),
    };
    p.node()?;
    if p.pos != p.toks.len() {
        return Err("unbalanced parentheses: trailing tokens after the root".into());
    }
    Ok(LabeledSentence {
        tokens: p.words,
        label: p.phrases[0].label,
        phrases: p.phrases,
    })
}

/// Reads one parenthesized tree per line. Binary mode drops neutral
/// sentences and neutral phrases.
pub fn load_sst(path: &Path, mode: SstMode) -> Result<Vec<LabeledSentence>> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut s = parse_sst_line(line).map_err(|msg| Error::Parse {
            path: path.display().to_string(),
            line: n + 1,
            msg,
        })?;
        if let Some(bad) = s.phrases.iter().find(|p| p.label > 4) {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: n + 1,
                msg: format!("label {} outside 0..=4", bad.label),
            });
        }
        let Some(label) = mode.map(s.label) else { continue };
        s.label = label;
        s.phrases = s
            .phrases
            .into_iter()
            .filter_map(|p| mode.map(p.label).map(|label| Phrase { label, ..p }))
            .collect();
        out.push(s);
    }
    Ok(out)
}

/// One training example per labeled phrase.
pub fn phrase_examples(sentences: &[LabeledSentence]) -> Vec<LabeledSentence> {
    sentences
        .iter()
        .flat_map(|s| {
            s.phrases
                .iter()
                .map(|p| LabeledSentence::new(s.tokens[p.start..p.end].to_vec(), p.label))
        })
        .collect()
}

/// Re-serializes sentences whose phrases form a complete tree.
pub fn write_sst(sentences: &[LabeledSentence]) -> Result<String> {
    fn build(s: &LabeledSentence, idx: usize, next: &mut usize, out: &mut String) -> Result<()> {
        let p = s.phrases[idx];
        out.push_str(&format!("({} ", p.label));
        if p.end - p.start == 1 && (*next >= s.phrases.len() || s.phrases[*next].start >= p.end) {
            out.push_str(&s.tokens[p.start]);
        } else {
            let mut pos = p.start;
            let mut first = true;
            while pos < p.end {
                let child = *next;
                match s.phrases.get(child) {
                    Some(c) if c.start == pos && c.end <= p.end => {
                        if !first {
                            out.push(' ');
                        }
                        first = false;
                        *next += 1;
                        build(s, child, next, out)?;
                        pos = c.end;
                    }
                    _ => {
                        return Err(Error::InvalidInput(format!(
                            "phrases do not form a tree at token {pos}"
                        )))
                    }
                }
            }
        }
        out.push(')');
        Ok(())
    }
    let mut out = String::new();
    for s in sentences {
        if s.phrases.is_empty() {
            return Err(Error::InvalidInput("sentence has no phrase tree".into()));
        }
        let mut next = 1;
        build(s, 0, &mut next, &mut out)?;
        out.push('\n');
    }
    Ok(out)
}
