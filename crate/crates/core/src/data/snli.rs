use std::fmt::Write as _;
use std::path::Path;

use crate::data::{read_text, tokenize};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NliLabel {
    Entailment,
    Neutral,
    Contradiction,
}

impl NliLabel {
    pub const ALL: [NliLabel; 3] = [NliLabel::Entailment, NliLabel::Neutral, NliLabel::Contradiction];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            NliLabel::Entailment => "entailment",
            NliLabel::Neutral => "neutral",
            NliLabel::Contradiction => "contradiction",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SentencePair {
    pub premise: Vec<String>,
    pub hypothesis: Vec<String>,
    pub label: NliLabel,
}

/// Column layout of a tab-separated NLI file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SnliFormat {
    pub label: usize,
    pub premise: usize,
    pub hypothesis: usize,
    /// Drop bare `(` / `)` tokens, as found in binary-parse columns.
    pub strip_parens: bool,
}

impl SnliFormat {
    /// Official release: gold label, then the two binary-parse columns.
    pub const OFFICIAL: SnliFormat = SnliFormat {
        label: 0,
        premise: 1,
        hypothesis: 2,
        strip_parens: true,
    };

    /// `label \t premise \t hypothesis`, already tokenized.
    pub const SIMPLE: SnliFormat = SnliFormat {
        label: 0,
        premise: 1,
        hypothesis: 2,
        strip_parens: false,
    };
}

const HEADER_LABEL: &str = "gold_label";

/// Reads an NLI file, choosing [`SnliFormat::OFFICIAL`] when the first line
/// is the official header and [`SnliFormat::SIMPLE`] otherwise.
pub fn load_snli(path: &Path) -> Result<Vec<SentencePair>> {
    let text = read_text(path)?;
    let official = text.lines().next().is_some_and(|l| l.split('\t').next() == Some(HEADER_LABEL));
    let fmt = if official { SnliFormat::OFFICIAL } else { SnliFormat::SIMPLE };
    parse(&text, &path.display().to_string(), fmt)
}

pub fn load_snli_with(path: &Path, fmt: SnliFormat) -> Result<Vec<SentencePair>> {
    parse(&read_text(path)?, &path.display().to_string(), fmt)
}

fn parse(text: &str, origin: &str, fmt: SnliFormat) -> Result<Vec<SentencePair>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: origin.to_string(),
            line: n + 1,
            msg,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if n == 0 && fields[0] == HEADER_LABEL {
            continue;
        }
        let need = fmt.label.max(fmt.premise).max(fmt.hypothesis) + 1;
        if fields.len() < need {
            return Err(err(format!("expected at least {need} tab-separated fields, found {}", fields.len())));
        }
        let raw = fields[fmt.label].trim();
        if raw == "-" {
            continue;
        }
        let label = NliLabel::parse(raw).ok_or_else(|| err(format!("unknown label {raw:?}")))?;
        let toks = |s: &str| -> Vec<String> {
            let mut t = tokenize(s);
            if fmt.strip_parens {
                t.retain(|w| w != "(" && w != ")");
            }
            t
        };
        out.push(SentencePair {
            premise: toks(fields[fmt.premise]),
            hypothesis: toks(fields[fmt.hypothesis]),
            label,
        });
    }
    Ok(out)
}

/// Serializes in [`SnliFormat::SIMPLE`].
pub fn write_snli(pairs: &[SentencePair]) -> String {
    let mut s = String::new();
    for p in pairs {
        let _ = writeln!(s, "{}\t{}\t{}", p.label.name(), p.premise.join(" "), p.hypothesis.join(" "));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filters_and_errors() {
        let text = "entailment\ta dog\tan animal\n-\tx\ty\n\ncontradiction\ta b\tc\n";
        let pairs = parse(text, "t", SnliFormat::SIMPLE).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].premise, ["a", "dog"]);
        assert_eq!(pairs[1].label, NliLabel::Contradiction);

        assert!(parse("", "t", SnliFormat::SIMPLE).unwrap().is_empty());
        let err = parse("maybe\ta\tb\n", "t", SnliFormat::SIMPLE).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn official_layout() {
        let text = "gold_label\tsentence1_binary_parse\tsentence2_binary_parse\tx\n\
                    neutral\t( ( A dog ) runs )\t( A ( dog sleeps ) )\tjunk\n";
        let pairs = parse(text, "t", SnliFormat::OFFICIAL).unwrap();
        assert_eq!(pairs[0].premise, ["A", "dog", "runs"]);
        assert_eq!(pairs[0].hypothesis, ["A", "dog", "sleeps"]);
    }
}
