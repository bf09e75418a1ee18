use std::collections::HashMap;

/// Token ↔ index map. Index 0 is the pad token, index 1 stands for every
/// out-of-vocabulary token; both embed as zero vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    index: HashMap<String, usize>,
    tokens: Vec<String>,
    lowercase: bool,
}

impl Vocabulary {
    pub const PAD: usize = 0;
    pub const OOV: usize = 1;
    pub const PAD_TOKEN: &'static str = "<pad>";
    pub const OOV_TOKEN: &'static str = "<unk>";

    pub fn new(lowercase: bool) -> Self {
        Vocabulary {
            index: HashMap::new(),
            tokens: vec![Self::PAD_TOKEN.to_string(), Self::OOV_TOKEN.to_string()],
            lowercase,
        }
    }

    /// Vocabulary over `tokens` in first-appearance order.
    pub fn build<'a>(tokens: impl IntoIterator<Item = &'a str>, lowercase: bool) -> Self {
        let mut v = Self::new(lowercase);
        for t in tokens {
            v.insert(t);
        }
        v
    }

    fn normalize(&self, token: &str) -> String {
        if self.lowercase {
            token.to_lowercase()
        } else {
            token.to_string()
        }
    }

    pub fn insert(&mut self, token: &str) -> usize {
        let t = self.normalize(token);
        if let Some(&i) = self.index.get(&t) {
            return i;
        }
        let i = self.tokens.len();
        self.index.insert(t.clone(), i);
        self.tokens.push(t);
        i
    }

    /// Index of `token`, or [`Self::OOV`].
    pub fn get(&self, token: &str) -> usize {
        self.index.get(&self.normalize(token)).copied().unwrap_or(Self::OOV)
    }

    pub fn lookup(&self, token: &str) -> Option<usize> {
        self.index.get(&self.normalize(token)).copied()
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.get(t.as_ref())).collect()
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    /// Number of rows including the two reserved entries.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= 2
    }

    pub fn lowercase(&self) -> bool {
        self.lowercase
    }
}
