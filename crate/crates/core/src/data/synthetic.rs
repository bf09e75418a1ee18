//! Small generated tasks with known labelling rules.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{LabeledSentence, NliLabel, Phrase, SentencePair};
use crate::error::{Error, Result};

pub const MAX_SYNTHETIC_LEN: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SyntheticKind {
    /// Label is the parity of the number of `x` tokens.
    Parity,
    /// Label 1 iff both `a` and `b` occur.
    ContainsPair,
    /// Label is the length quartile (0..=3) relative to `max_len`.
    LengthBucket,
}

impl SyntheticKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "parity" => Ok(SyntheticKind::Parity),
            "contains_pair" | "contains-pair" => Ok(SyntheticKind::ContainsPair),
            "length_bucket" | "length-bucket" => Ok(SyntheticKind::LengthBucket),
            _ => Err(Error::InvalidInput(format!("unknown synthetic task {s}"))),
        }
    }

    pub fn alphabet(self) -> &'static [&'static str] {
        match self {
            SyntheticKind::Parity => &["x", "y", "z"],
            SyntheticKind::ContainsPair | SyntheticKind::LengthBucket => &["a", "b", "c", "d", "e"],
        }
    }

    pub fn n_classes(self) -> usize {
        match self {
            SyntheticKind::Parity | SyntheticKind::ContainsPair => 2,
            SyntheticKind::LengthBucket => 4,
        }
    }

    pub fn label<S: AsRef<str>>(self, tokens: &[S], max_len: usize) -> usize {
        let has = |w: &str| tokens.iter().any(|t| t.as_ref() == w);
        match self {
            SyntheticKind::Parity => tokens.iter().filter(|t| t.as_ref() == "x").count() % 2,
            SyntheticKind::ContainsPair => usize::from(has("a") && has("b")),
            SyntheticKind::LengthBucket => ((tokens.len() - 1) * 4 / max_len).min(3),
        }
    }

    /// Whether labels are drawn first and sequences rejection-sampled to match.
    fn balanced(self) -> bool {
        self == SyntheticKind::ContainsPair
    }
}

fn check(max_len: usize) -> Result<()> {
    if max_len == 0 || max_len > MAX_SYNTHETIC_LEN {
        return Err(Error::InvalidInput(format!(
            "synthetic max_len must be in 1..={MAX_SYNTHETIC_LEN}, got {max_len}"
        )));
    }
    Ok(())
}

fn sequence(rng: &mut ChaCha8Rng, alphabet: &[&str], max_len: usize) -> Vec<String> {
    let len = rng.gen_range(1..=max_len);
    (0..len)
        .map(|_| alphabet.choose(rng).expect("non-empty alphabet").to_string())
        .collect()
}

/// `n` sentences with lengths uniform in `1..=max_len`; deterministic per
/// `(kind, seed, n, max_len)`.
pub fn synthetic_task(kind: SyntheticKind, seed: u64, n: usize, max_len: usize) -> Result<Vec<LabeledSentence>> {
    check(max_len)?;
    if kind == SyntheticKind::ContainsPair && max_len < 2 {
        return Err(Error::InvalidInput("contains_pair needs max_len >= 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let target = i % kind.n_classes();
        loop {
            let tokens = sequence(&mut rng, kind.alphabet(), max_len);
            let label = kind.label(&tokens, max_len);
            if !kind.balanced() || label == target {
                out.push(LabeledSentence::new(tokens, label));
                break;
            }
        }
    }
    Ok(out)
}

/// Premise/hypothesis pairs: entailment iff the premise contains `a` and the
/// hypothesis contains `b`, contradiction otherwise. Classes alternate.
pub fn synthetic_pairs(seed: u64, n: usize, max_len: usize) -> Result<Vec<SentencePair>> {
    check(max_len)?;
    let alphabet = SyntheticKind::ContainsPair.alphabet();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let want = i % 2 == 0;
        loop {
            let premise = sequence(&mut rng, alphabet, max_len);
            let hypothesis = sequence(&mut rng, alphabet, max_len);
            let hit = premise.iter().any(|t| t == "a") && hypothesis.iter().any(|t| t == "b");
            if hit == want {
                let label = if hit { NliLabel::Entailment } else { NliLabel::Contradiction };
                out.push(SentencePair {
                    premise,
                    hypothesis,
                    label,
                });
                break;
            }
        }
    }
    Ok(out)
}

const STRONG_POS: &[&str] = &["superb", "brilliant", "wonderful", "masterful", "dazzling", "gripping"];
const MILD_POS: &[&str] = &["good", "nice", "pleasant", "warm", "clever", "fun", "solid", "charming"];
const MILD_NEG: &[&str] = &["dull", "flat", "slow", "thin", "messy", "bland", "tired", "clumsy"];
const STRONG_NEG: &[&str] = &["awful", "dreadful", "unbearable", "pointless", "wretched", "insulting"];
const NEUTRAL: &[&str] = &[
    "the", "a", "film", "movie", "story", "plot", "it", "is", "was", "and", "of", "cast", "script", "this", "with",
    "director", "scenes", "ending", "its", "in", "acting", "some", "quite", "at", "times",
];
const NEGATORS: &[&str] = &["not", "never"];

fn polarity(word: &str) -> i32 {
    for (words, p) in [(STRONG_POS, 2), (MILD_POS, 1), (MILD_NEG, -1), (STRONG_NEG, -2)] {
        if words.contains(&word) {
            return p;
        }
    }
    0
}

fn sentiment_class(score: i32) -> usize {
    match score {
        i32::MIN..=-3 => 0,
        -2..=-1 => 1,
        0 => 2,
        1..=2 => 3,
        _ => 4,
    }
}

/// Fine-grained treebank with random binary bracketing over a small
/// polarity lexicon. A phrase scores the sum of its children, except that a
/// negator on the left flips its sibling; scores bucket into labels 0..=4.
/// Each phrase label is replaced by a neighbouring class with probability
/// `noise`.
pub fn synthetic_treebank(seed: u64, n: usize, max_len: usize, noise: f64) -> Result<Vec<LabeledSentence>> {
    check(max_len)?;
    if !(0.0..=1.0).contains(&noise) {
        return Err(Error::InvalidInput(format!("noise must be in [0, 1], got {noise}")));
    }
    fn build(rng: &mut ChaCha8Rng, tokens: &[String], start: usize, end: usize, out: &mut Vec<Phrase>) -> i32 {
        let slot = out.len();
        out.push(Phrase { start, end, label: 0 });
        let score = if end - start == 1 {
            polarity(&tokens[start])
        } else {
            let mid = rng.gen_range(start + 1..end);
            let left = build(rng, tokens, start, mid, out);
            let right = build(rng, tokens, mid, end, out);
            if mid - start == 1 && NEGATORS.contains(&tokens[start].as_str()) {
                -right
            } else {
                left + right
            }
        };
        out[slot].label = sentiment_class(score);
        score
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let len = rng.gen_range(1..=max_len);
        let tokens: Vec<String> = (0..len)
            .map(|_| {
                let pool = match rng.gen_range(0..20) {
                    0..=1 => STRONG_POS,
                    2..=4 => MILD_POS,
                    5..=7 => MILD_NEG,
                    8..=9 => STRONG_NEG,
                    10..=11 => NEGATORS,
                    _ => NEUTRAL,
                };
                pool.choose(&mut rng).expect("non-empty pool").to_string()
            })
            .collect();
        let mut phrases = Vec::with_capacity(2 * len - 1);
        build(&mut rng, &tokens, 0, len, &mut phrases);
        for p in &mut phrases {
            if rng.gen_bool(noise) {
                p.label = match p.label {
                    0 => 1,
                    4 => 3,
                    l if rng.gen_bool(0.5) => l - 1,
                    l => l + 1,
                };
            }
        }
        out.push(LabeledSentence {
            label: phrases[0].label,
            tokens,
            phrases,
        });
    }
    Ok(out)
}
