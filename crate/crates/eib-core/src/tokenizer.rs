//! Word-level tokenizer and closed vocabulary for the tiny language models.
//!
//! Tokenization is case-preserving (the models should be able to reproduce a
//! gold explanation byte for byte) and splits a small set of edge punctuation
//! into their own tokens so that `detokenize` can invert it for ordinary
//! prose. Evaluation uses its own lowercasing tokenizer; the two are
//! deliberately independent.

use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};

pub const UNK: &str = "<unk>";
pub const BOS: &str = "<bos>";
pub const EOS: &str = "<eos>";

/// Punctuation split off at token edges and re-attached (to the left) when
/// detokenizing.
const EDGE_PUNCT: &[char] = &['.', ',', '!', '?', ';', ':'];

/// Splits into word tokens, detaching leading and trailing punctuation from
/// the `EDGE_PUNCT` set. Interior characters (apostrophes in contractions,
/// hyphens) stay put.
pub fn word_tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let mut lo = 0;
        let mut hi = chars.len();
        while lo < hi && EDGE_PUNCT.contains(&chars[lo]) {
            lo += 1;
        }
        while hi > lo && EDGE_PUNCT.contains(&chars[hi - 1]) {
            hi -= 1;
        }
        for c in &chars[..lo] {
            out.push(c.to_string());
        }
        if lo < hi {
            out.push(chars[lo..hi].iter().collect());
        }
        for c in &chars[hi..] {
            out.push(c.to_string());
        }
    }
    out
}

/// Joins tokens with spaces, attaching edge punctuation to the previous
/// token. Inverts `word_tokenize` for text that only uses punctuation in
/// trailing position, which covers the explanation prose this system emits.
pub fn detokenize(tokens: &[String]) -> String {
    let mut out = String::new();
    for tok in tokens {
        let is_attached = tok.chars().count() == 1
            && tok.chars().next().is_some_and(|c| EDGE_PUNCT.contains(&c));
        if !out.is_empty() && !is_attached {
            out.push(' ');
        }
        out.push_str(tok);
    }
    out
}

/// Closed vocabulary built from a corpus. Ids are dense; the first three are
/// the specials in a fixed order.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "VocabRepr", into = "VocabRepr")]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct VocabRepr {
    tokens: Vec<String>,
}

impl From<VocabRepr> for Vocab {
    fn from(r: VocabRepr) -> Self {
        Vocab::from_tokens(r.tokens)
    }
}

impl From<Vocab> for VocabRepr {
    fn from(v: Vocab) -> Self {
        VocabRepr { tokens: v.tokens }
    }
}

impl Vocab {
    /// Builds the vocabulary over every token occurring in `texts`, sorted for
    /// reproducibility, with specials up front.
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut seen = BTreeSet::new();
        for text in texts {
            for tok in word_tokenize(text) {
                seen.insert(tok);
            }
        }
        let mut tokens: Vec<String> = vec![UNK.into(), BOS.into(), EOS.into()];
        tokens.extend(seen);
        Self::from_tokens(tokens)
    }

    fn from_tokens(tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Self { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn unk_id(&self) -> u32 {
        0
    }

    pub fn bos_id(&self) -> u32 {
        1
    }

    pub fn eos_id(&self) -> u32 {
        2
    }

    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(0)
    }

    pub fn token(&self, id: u32) -> Result<&str> {
        self.tokens
            .get(id as usize)
            .map(String::as_str)
            .ok_or_else(|| CoreError::Config(format!("token id {id} out of range")))
    }

    /// Tokenizes and maps to ids; unknown words become `<unk>`.
    pub fn encode(&self, text: &str) -> Vec<u32> {
        word_tokenize(text).iter().map(|t| self.id(t)).collect()
    }

    /// Maps ids back to surface text, skipping specials.
    pub fn decode(&self, ids: &[u32]) -> Result<String> {
        let mut toks = Vec::new();
        for &id in ids {
            let tok = self.token(id)?;
            if tok != UNK && tok != BOS && tok != EOS {
                toks.push(tok.to_string());
            }
        }
        Ok(detokenize(&toks))
    }
}
