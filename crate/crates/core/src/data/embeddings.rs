use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{read_text, Vocabulary};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Fixed (never trained) embedding matrix, one row per vocabulary entry.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable<T> {
    dim: usize,
    rows: Vec<T>,
}

impl<T: Scalar> EmbeddingTable<T> {
    pub fn zeros(vocab_len: usize, dim: usize) -> Self {
        EmbeddingTable {
            dim,
            rows: vec![T::zero(); vocab_len * dim],
        }
    }

    /// Seeded uniform `[-1, 1]` rows for every non-reserved entry.
    pub fn random(vocab: &Vocabulary, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Self::zeros(vocab.len(), dim);
        for v in t.rows.iter_mut().skip(2 * dim) {
            *v = T::lit(rng.gen_range(-1.0..=1.0));
        }
        t
    }

    pub fn cast<U: Scalar>(&self) -> EmbeddingTable<U> {
        EmbeddingTable {
            dim: self.dim,
            rows: self.rows.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len() / self.dim.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Row for `index`; indices past the table fall back to the OOV row.
    pub fn row(&self, index: usize) -> &[T] {
        let i = if index * self.dim < self.rows.len() { index } else { Vocabulary::OOV };
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    pub fn lookup(&self, ids: &[usize]) -> Vec<Vec<T>> {
        ids.iter().map(|&i| self.row(i).to_vec()).collect()
    }

    /// Writes the non-reserved rows in the whitespace text format.
    pub fn to_text(&self, vocab: &Vocabulary) -> String {
        let mut out = String::new();
        for i in 2..vocab.len().min(self.len()) {
            out.push_str(vocab.token(i).unwrap_or_default());
            for v in self.row(i) {
                out.push(' ');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Reads `token v1 .. v_dim` lines. Tokens absent from the file, the pad
/// row and the OOV row stay zero; file tokens outside `vocab` are skipped.
pub fn load_embeddings<T: Scalar>(path: &Path, vocab: &Vocabulary, dim: usize) -> Result<EmbeddingTable<T>> {
    let text = read_text(path)?;
    let mut table = EmbeddingTable::zeros(vocab.len(), dim);
    let mut filled = vec![false; vocab.len()];
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: path.display().to_string(),
            line: n + 1,
            msg,
        };
        let mut fields = line.split_whitespace();
        let token = fields.next().unwrap_or_default();
        let values: Vec<&str> = fields.collect();
        if values.len() != dim {
            return Err(err(format!("expected {dim} values after the token, found {}", values.len())));
        }
        let Some(idx) = vocab.lookup(token) else { continue };
        if idx < 2 || filled[idx] {
            continue;
        }
        filled[idx] = true;
        for (j, v) in values.iter().enumerate() {
            let x: f64 = v.parse().map_err(|_| err(format!("bad number {v:?}")))?;
            table.rows[idx * dim + j] = T::lit(x);
        }
    }
    Ok(table)
}
