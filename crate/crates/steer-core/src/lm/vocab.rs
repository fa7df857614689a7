//! Vocabulary and tokenisation.
//!
//! Two modes are supported: `Character` (one token per Unicode scalar) and
//! `Word` (whitespace-separated). Ids 0..=3 are reserved for PAD, BOS, EOS
//! and UNK in every vocabulary; unknown symbols always map to UNK.

use std::collections::BTreeSet;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index into a [`Vocabulary`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenId(pub u32);

impl TokenId {
    pub const PAD: TokenId = TokenId(0);
    pub const BOS: TokenId = TokenId(1);
    pub const EOS: TokenId = TokenId(2);
    pub const UNK: TokenId = TokenId(3);

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_reserved(self) -> bool {
        self.0 < 4
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VocabMode {
    Character,
    Word,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Vocabulary {
    mode: VocabMode,
    /// All token strings, including the four reserved entries at the front.
    tokens: Vec<String>,
    #[serde(skip)]
    lookup: HashMap<String, TokenId>,
}

const RESERVED: [&str; 4] = ["<pad>", "<bos>", "<eos>", "<unk>"];

impl Vocabulary {
    /// Build a vocabulary from a corpus. Token order is sorted, so the same
    /// corpus always yields the same id assignment.
    pub fn build(corpus: &[String], mode: VocabMode) -> Vocabulary {
        let mut seen: BTreeSet<String> = BTreeSet::new();
        for line in corpus {
            match mode {
                VocabMode::Character => {
                    seen.extend(line.chars().map(|c| c.to_string()));
                }
                VocabMode::Word => {
                    seen.extend(line.split_whitespace().map(str::to_string));
                }
            }
        }
        let mut tokens: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        tokens.extend(seen.into_iter().filter(|t| !RESERVED.contains(&t.as_str())));
        Vocabulary::from_tokens(tokens, mode)
    }

    /// Reconstruct a vocabulary from an explicit token list (as stored in a
    /// model file). The list must already contain the reserved entries.
    pub fn from_tokens(tokens: Vec<String>, mode: VocabMode) -> Vocabulary {
        let lookup = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), TokenId(i as u32)))
            .collect();
        Vocabulary {
            mode,
            tokens,
            lookup,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn mode(&self) -> VocabMode {
        self.mode
    }

    pub fn id_of(&self, token: &str) -> Option<TokenId> {
        self.lookup.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> Result<&str> {
        self.tokens
            .get(id.index())
            .map(String::as_str)
            .ok_or(Error::InvalidTokenId(id.0, self.tokens.len()))
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Map text to token ids. Unknown symbols become UNK; BOS/EOS are never
    /// inserted implicitly.
    pub fn tokenize(&self, text: &str) -> Vec<TokenId> {
        let pieces: Vec<String> = match self.mode {
            VocabMode::Character => text.chars().map(|c| c.to_string()).collect(),
            VocabMode::Word => text.split_whitespace().map(str::to_string).collect(),
        };
        pieces
            .iter()
            .map(|p| self.lookup.get(p).copied().unwrap_or(TokenId::UNK))
            .collect()
    }

    /// Inverse of [`tokenize`] up to UNK substitutions. Reserved tokens
    /// render as the empty string.
    pub fn detokenize(&self, tokens: &[TokenId]) -> Result<String> {
        let mut parts: Vec<&str> = Vec::with_capacity(tokens.len());
        for &id in tokens {
            let tok = self.token(id)?;
            if id.is_reserved() {
                continue;
            }
            parts.push(tok);
        }
        Ok(match self.mode {
            VocabMode::Character => parts.concat(),
            VocabMode::Word => parts.join(" "),
        })
    }
}
